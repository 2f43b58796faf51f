//! End-to-end constructions: almost-period Bohr sets, progressions and
//! subspace translates in sumsets, and the Bogolyubov containment.

mod almost_periodic;
mod bootstrap;
mod bounds;
mod constants;
mod doubling;
mod finite_field;
mod oracles;

pub use almost_periodic::{almost_period_bohr, find_progression_dense, AlmostPeriodRun, DenseApReport};
pub use bootstrap::{bogolyubov_bohr, bootstrap_strong_lp, BogolyubovReport, BootstrapRun, XSource};
pub use bounds::{
    bound_table, thm11_bound, thm13_bound, thm14_bound, thm74_radius, BoundRow, BoundTable, DoublingRow, Thm74Params,
    Thm74Radius,
};
pub use constants::ConstantsConfig;
pub use doubling::{find_progression_small_doubling, SmallDoublingReport};
pub use finite_field::{finite_field_translate, FfVariant, FiniteFieldReport, SubsetReport};
pub use oracles::{
    brute_force_almost_periods, longest_ap_cyclic, longest_ap_integers, LongestAp, ReferenceNorm, AP_SCAN_BUDGET,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::bohr::BohrDescriptor;
use crate::error::{Error, Result};
use crate::fourier::{translate_distance, GroupFunction};
use crate::groups::{ElementSet, GroupSpec};

/// Outcome of an exhaustive check of `‖f(·+t) - f‖_{L^p} ≤ ε · reference` over a Bohr set.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicityReport {
    pub group: GroupSpec,
    pub bohr: BohrDescriptor,
    pub bohr_size: usize,
    pub p: f64,
    pub epsilon: f64,
    pub reference: ReferenceNorm,
    pub reference_norm: f64,
    pub threshold: f64,
    pub max_distance: f64,
    /// The element attaining `max_distance`.
    pub worst_t: usize,
    pub pass: bool,
}

impl PeriodicityReport {
    /// Checks every element of `bohr` against the threshold.
    pub fn verify(
        f: &GroupFunction,
        bohr: BohrDescriptor,
        p: f64,
        epsilon: f64,
        reference: ReferenceNorm,
    ) -> Result<Self> {
        f.group().ensure_same(&bohr.group())?;
        let reference_norm = reference.evaluate(f, p)?;
        let threshold = epsilon * reference_norm;
        let members = bohr.materialize()?;
        let distances: Vec<(f64, usize)> = members
            .indices()
            .par_iter()
            .map(|&t| translate_distance(f, t, p).map(|d| (d, t)))
            .collect::<Result<_>>()?;
        let (max_distance, worst_t) =
            distances.into_iter().fold((0.0, 0), |acc, (d, t)| if d > acc.0 { (d, t) } else { acc });
        Ok(PeriodicityReport {
            group: f.group(),
            bohr_size: members.len(),
            bohr,
            p,
            epsilon,
            reference,
            reference_norm,
            threshold,
            max_distance,
            worst_t,
            pass: max_distance <= threshold + oracles::tolerance(threshold),
        })
    }

    /// Recomputes the largest translate distance over the Bohr set by a plain
    /// serial loop, for comparison against `max_distance`.
    pub fn recompute_max_distance(&self, f: &GroupFunction) -> Result<f64> {
        let g = f.group();
        let n = g.order();
        let mut worst = 0.0f64;
        for t in self.bohr.materialize()?.indices() {
            let mut acc = 0.0;
            for x in 0..n {
                acc += (f.at(g.add(x, *t)) - f.at(x)).norm().powf(self.p);
            }
            worst = worst.max((acc / n as f64).powf(1.0 / self.p));
        }
        Ok(worst)
    }
}

/// First `x` in canonical order with `x + t ∈ S` for every offset `t`.
pub fn averaging_scan(sumset: &ElementSet, offsets: &[usize]) -> Option<usize> {
    let g = sumset.group();
    let mask = sumset.mask();
    (0..g.order()).find(|&x| offsets.iter().all(|&t| mask[g.add(x, t)]))
}

/// `{j u : -floor((m-1)/2) ≤ j < m - floor((m-1)/2)}`, a sub-progression of any
/// centred progression `{j u : |j| ≤ L}` with `2L + 1 ≥ m`.
pub fn centred_offsets(group: GroupSpec, step: usize, m: usize) -> Vec<usize> {
    let start = -((m as i64 - 1) / 2);
    (0..m as i64).map(|j| group.scale(start + j, step)).collect()
}

/// `max(2, value)`; both theorems need `p ≥ 2`.
pub(crate) fn floor_p(value: f64) -> f64 {
    if value.is_finite() { value.max(2.0) } else { 2.0 }
}

/// `floor(e^p)`, saturating.
pub(crate) fn exp_cap(p: f64) -> usize {
    let v = p.exp().floor();
    if v >= usize::MAX as f64 { usize::MAX } else { v as usize }
}

pub(crate) fn ensure_nonempty(s: &ElementSet, what: &'static str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySet(what));
    }
    Ok(())
}
