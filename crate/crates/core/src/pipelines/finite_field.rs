use serde::{Deserialize, Serialize};

use super::bootstrap::doubling;
use super::{
    almost_period_bohr, averaging_scan, bootstrap_strong_lp, ensure_nonempty, exp_cap, floor_p, AlmostPeriodRun,
    BootstrapRun, ConstantsConfig, XSource,
};
use crate::bohr::{find_subspace_in_bohr, BohrDescriptor};
use crate::error::{Error, Result};
use crate::fourier::indicator_convolution;
use crate::groups::{ElementSet, GroupSpec};
use crate::progression::SubspaceWitness;
use crate::rng::derive_seed;
use crate::subspace::Subspace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum FfVariant {
    /// Sampled Bohr set of `1_A * 1_B`.
    Green,
    /// Bootstrap Bohr set of `μ_A * 1_B`.
    Improved,
    /// A subspace `V` of codimension `codim` and a translate of a subset of
    /// `V`. The subset is given by coefficient vectors over the basis of `V`,
    /// each packed base `p`; by default the first elements of `V` are used.
    Subset { codim: usize, subset: Option<Vec<usize>> },
}

impl FfVariant {
    pub fn name(&self) -> &'static str {
        match self {
            FfVariant::Green => "green",
            FfVariant::Improved => "improved",
            FfVariant::Subset { .. } => "subset",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsetReport {
    pub codim_target: usize,
    /// Codimension of `V`; exceeds the target when the Bohr set is too small.
    pub codim: usize,
    pub codim_met: bool,
    pub v_basis: Vec<usize>,
    pub size_cap: usize,
    pub subset: Vec<usize>,
    pub translate: usize,
    pub containment_verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteFieldReport {
    pub variant: &'static str,
    pub group: GroupSpec,
    pub alpha: f64,
    pub beta: f64,
    pub k_a: f64,
    pub k_b: f64,
    pub epsilon: f64,
    pub p: f64,
    /// `floor(p / ln q)`, the largest dimension with `|P| ≤ e^p`.
    pub dim_cap: usize,
    pub bohr_rank: usize,
    pub t_dim: usize,
    pub witness: SubspaceWitness,
    pub attempts: usize,
    pub shrinks: usize,
    pub subset: Option<SubsetReport>,
    pub almost_period: Option<AlmostPeriodRun>,
    pub bootstrap: Option<BootstrapRun>,
    pub constants: ConstantsConfig,
    pub seed: u64,
}

/// Annihilator part of a Bohr set. Above the exactness radius the Bohr set is
/// larger than `Γ^⊥`, which is still contained in it.
fn subspace_part(b: &BohrDescriptor) -> Result<Subspace> {
    match find_subspace_in_bohr(b) {
        Err(Error::RadiusTooLarge { .. }) => {
            let freqs: Vec<usize> = b.frequencies().iter().map(|c| c.frequency).collect();
            let s = Subspace::annihilator(b.group(), &freqs)?;
            if !s.elements().into_iter().all(|x| b.contains(x)) {
                return Err(Error::Internal("annihilator element outside the Bohr set".into()));
            }
            Ok(s)
        }
        other => other,
    }
}

/// Largest subspace of `t` (by truncation) with a translate inside `sumset`,
/// starting from dimension `start` and dropping one dimension at a time.
fn shrink_scan(sumset: &ElementSet, t: &Subspace, start: usize) -> (usize, Subspace, usize) {
    let mut dim = start.min(t.dim());
    let mut shrinks = 0;
    loop {
        let p = t.truncated(dim);
        if let Some(x) = averaging_scan(sumset, &p.elements()) {
            return (x, p, shrinks);
        }
        // dimension 0 always fits since the sumset is nonempty
        dim -= 1;
        shrinks += 1;
    }
}

/// Translate of a subspace (or of a subset of a subspace) inside `A + B` for
/// `A, B ⊆ F_q^n`, with the subspace taken inside an almost-period Bohr set.
pub fn finite_field_translate(
    a: &ElementSet,
    b: &ElementSet,
    variant: &FfVariant,
    seed: u64,
    cfg: &ConstantsConfig,
) -> Result<FiniteFieldReport> {
    cfg.validate()?;
    let g = a.group();
    g.ensure_same(&b.group())?;
    let GroupSpec::Vector { prime, dim } = g else {
        return Err(Error::NotVectorSpace(g));
    };
    ensure_nonempty(a, "A")?;
    ensure_nonempty(b, "B")?;
    let n = dim as f64;
    let ln_q = (prime as f64).ln();
    let alpha = a.density();
    let beta = b.density();
    let (k_a, k_b, sum) = doubling(a, b)?;

    match variant {
        FfVariant::Green => {
            let epsilon = (cfg.c_eps * (alpha * beta).sqrt() / std::f64::consts::E).min(0.99);
            let p = floor_p(cfg.c_p * alpha * beta * n);
            let dim_cap = (p / ln_q).floor() as usize;
            let f = indicator_convolution(a, b)?;
            let mut last = None;
            for attempt in 0..=cfg.retries {
                let run_seed = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
                let run = almost_period_bohr(&f, p, epsilon, run_seed, cfg)?;
                let t = subspace_part(&run.periodicity.bohr)?;
                let start = dim_cap.min(t.dim());
                let (x, sub, shrinks) = shrink_scan(&sum, &t, start);
                let found = shrinks == 0;
                last = Some((run, t, x, sub, shrinks, attempt as usize + 1));
                if found {
                    break;
                }
            }
            let (run, t, x, sub, shrinks, attempts) = last.expect("at least one attempt");
            let witness = verified(x, &sub, &sum)?;
            Ok(FiniteFieldReport {
                variant: variant.name(),
                group: g,
                alpha,
                beta,
                k_a,
                k_b,
                epsilon,
                p,
                dim_cap,
                bohr_rank: run.periodicity.bohr.rank(),
                t_dim: t.dim(),
                witness,
                attempts,
                shrinks,
                subset: None,
                almost_period: Some(run),
                bootstrap: None,
                constants: *cfg,
                seed,
            })
        }
        FfVariant::Improved | FfVariant::Subset { .. } => {
            // the bootstrap wants K_B ≤ K_A
            let (s1, s2, ka, kb) = if k_b > k_a { (b, a, k_b, k_a) } else { (a, b, k_a, k_b) };
            let epsilon = (cfg.c_eps / (std::f64::consts::E * kb.sqrt())).min(1.0 / kb.sqrt());
            let scale = kb * (2.0 * ka).ln().powi(3);
            let target = match variant {
                FfVariant::Subset { codim, .. } => {
                    if *codim > dim as usize {
                        return Err(Error::InvalidParameter(format!("codimension {codim} exceeds n = {dim}")));
                    }
                    *codim as f64
                }
                _ => n,
            };
            let p = floor_p(cfg.c_p * target / scale);
            let dim_cap = (p / ln_q).floor() as usize;
            let run = bootstrap_strong_lp(s1, s2, p, epsilon, XSource::Oracle, seed, cfg)?;
            let t = subspace_part(&run.periodicity.bohr)?;
            let mut report = FiniteFieldReport {
                variant: variant.name(),
                group: g,
                alpha,
                beta,
                k_a,
                k_b,
                epsilon,
                p,
                dim_cap,
                bohr_rank: run.periodicity.bohr.rank(),
                t_dim: t.dim(),
                witness: SubspaceWitness::new(0, &t.truncated(0)),
                attempts: 1,
                shrinks: 0,
                subset: None,
                almost_period: None,
                bootstrap: None,
                constants: *cfg,
                seed,
            };
            match variant {
                FfVariant::Subset { codim, subset } => {
                    let keep = (dim as usize - codim).min(t.dim());
                    let v = t.truncated(keep);
                    let size_cap = exp_cap(p);
                    let chosen = subset_of(&v, subset.as_deref(), size_cap)?;
                    let x = averaging_scan(&sum, &chosen);
                    let containment_verified =
                        x.is_some_and(|x| chosen.iter().all(|&s| sum.contains(g.add(x, s))));
                    let (wx, wsub, shrinks) = shrink_scan(&sum, &v, v.dim());
                    report.witness = verified(wx, &wsub, &sum)?;
                    report.shrinks = shrinks;
                    report.subset = Some(SubsetReport {
                        codim_target: *codim,
                        codim: v.codim(),
                        codim_met: v.codim() == *codim,
                        v_basis: v.basis.clone(),
                        size_cap,
                        subset: chosen,
                        translate: x.unwrap_or(0),
                        containment_verified,
                    });
                }
                _ => {
                    let (x, sub, shrinks) = shrink_scan(&sum, &t, dim_cap.min(t.dim()));
                    report.witness = verified(x, &sub, &sum)?;
                    report.shrinks = shrinks;
                }
            }
            report.bootstrap = Some(run);
            Ok(report)
        }
    }
}

fn verified(x: usize, sub: &Subspace, sum: &ElementSet) -> Result<SubspaceWitness> {
    let mut w = SubspaceWitness::new(x, sub);
    if !w.verify_in(sum) {
        return Err(Error::Internal("subspace translate is not inside A + B".into()));
    }
    Ok(w)
}

/// Elements of `v` named by packed coefficient vectors, or the first
/// `min(|V|, cap)` elements of `v` when none are given.
fn subset_of(v: &Subspace, coefficients: Option<&[usize]>, cap: usize) -> Result<Vec<usize>> {
    let g = v.group;
    let q = g.phase_modulus() as usize;
    let Some(coeffs) = coefficients else {
        let mut all = v.elements();
        all.truncate(cap.max(1));
        return Ok(all);
    };
    if coeffs.len() > cap {
        return Err(Error::InvalidParameter(format!("subset has {} elements, the size cap is {cap}", coeffs.len())));
    }
    let size = v.size();
    let mut out = Vec::with_capacity(coeffs.len());
    for &c in coeffs {
        if c >= size {
            return Err(Error::InvalidParameter(format!("coefficient vector {c} out of range for |V| = {size}")));
        }
        let mut x = g.zero();
        let mut rest = c;
        for &b in &v.basis {
            x = g.add(x, g.scale((rest % q) as i64, b));
            rest /= q;
        }
        out.push(x);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}
