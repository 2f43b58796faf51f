//! Brute-force ground truth: exact almost-period sets and longest progressions.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{spectral_l1_norm, transform, translate_distance, GroupFunction};
use crate::groups::{ElementSet, GroupSpec, DEFAULT_ENUMERATION_CAP};

/// Work limit for the longest-progression scans.
pub const AP_SCAN_BUDGET: u128 = 400_000_000;

/// Norm that scales the almost-period threshold `ε · reference`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ReferenceNorm {
    /// `‖f^‖_1`.
    SpectralL1,
    /// `‖f‖_{p/2}^{1/2}`.
    HalfEnergy,
    Explicit(f64),
}

impl ReferenceNorm {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceNorm::SpectralL1 => "spectral_l1",
            ReferenceNorm::HalfEnergy => "half_energy",
            ReferenceNorm::Explicit(_) => "explicit",
        }
    }

    pub fn evaluate(&self, f: &GroupFunction, p: f64) -> Result<f64> {
        match *self {
            ReferenceNorm::SpectralL1 => Ok(spectral_l1_norm(&transform(f))),
            ReferenceNorm::HalfEnergy => Ok(f.lp_norm(p / 2.0)?.sqrt()),
            ReferenceNorm::Explicit(v) => {
                if v.is_finite() && v >= 0.0 {
                    Ok(v)
                } else {
                    Err(Error::InvalidParameter(format!("reference norm must be finite and nonnegative, got {v}")))
                }
            }
        }
    }
}

/// Slack absorbing floating-point noise in threshold comparisons.
pub(crate) fn tolerance(threshold: f64) -> f64 {
    1e-12 * threshold.abs().max(1.0)
}

/// `{t : ‖f(·+t) - f‖_{L^p} ≤ ε · reference}` by checking every `t`.
/// Each `t` and `-t` share one evaluation, so the result is exactly symmetric.
pub fn brute_force_almost_periods(f: &GroupFunction, p: f64, epsilon: f64, reference: ReferenceNorm) -> Result<ElementSet> {
    let g = f.group();
    g.check_cap(DEFAULT_ENUMERATION_CAP)?;
    let threshold = epsilon * reference.evaluate(f, p)?;
    let tol = tolerance(threshold);
    let n = g.order();
    let keep: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|t| {
            let rep = t.min(g.neg(t));
            translate_distance(f, rep, p).map(|d| d <= threshold + tol)
        })
        .collect::<Result<_>>()?;
    Ok(ElementSet::from_mask(g, &keep))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LongestAp {
    pub base: i64,
    pub step: i64,
    pub length: usize,
}

/// Longest progression inside a finite set of integers; ties go to the
/// smallest step, then the smallest base.
pub fn longest_ap_integers(s: &[i64]) -> Result<LongestAp> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.is_empty() {
        return Err(Error::EmptySet("progression search set"));
    }
    let n = v.len() as u128;
    if n * n > AP_SCAN_BUDGET {
        return Err(Error::SizeCap { what: "longest-progression scan", size: n * n, cap: AP_SCAN_BUDGET });
    }
    let set: std::collections::HashSet<i64> = v.iter().copied().collect();
    let mut best = LongestAp { base: v[0], step: 1, length: 1 };
    for (i, &x) in v.iter().enumerate() {
        for &y in &v[i + 1..] {
            let d = y - x;
            if set.contains(&(x - d)) {
                continue;
            }
            let mut len = 2;
            while set.contains(&(x + len as i64 * d)) {
                len += 1;
            }
            let better = len > best.length || (len == best.length && (d, x) < (best.step, best.base));
            if better {
                best = LongestAp { base: x, step: d, length: len };
            }
        }
    }
    Ok(best)
}

/// Longest progression `{x + j u : 0 ≤ j < L}` of distinct elements inside a
/// subset of `Z/N`, scanning the cycles of every step; ties as above.
pub fn longest_ap_cyclic(s: &ElementSet) -> Result<LongestAp> {
    let g = s.group();
    let GroupSpec::Cyclic { modulus } = g else {
        return Err(Error::InvalidParameter(format!("cyclic progression search needs Z/N, got {g}")));
    };
    if s.is_empty() {
        return Err(Error::EmptySet("progression search set"));
    }
    let n = modulus as usize;
    if (n as u128) * (n as u128) > AP_SCAN_BUDGET {
        return Err(Error::SizeCap { what: "longest-progression scan", size: (n * n) as u128, cap: AP_SCAN_BUDGET });
    }
    let mask = s.mask();
    let first = s.indices()[0] as i64;
    let per_step: Vec<LongestAp> = (1..n.max(2))
        .into_par_iter()
        .filter(|&u| u < n)
        .map(|u| {
            let mut best = LongestAp { base: first, step: u as i64, length: 1 };
            let cycle_len = n / num_integer::gcd(n, u);
            let mut seen = vec![false; n];
            for start in 0..n {
                if seen[start] {
                    continue;
                }
                let mut cycle = Vec::with_capacity(cycle_len);
                let mut x = start;
                for _ in 0..cycle_len {
                    seen[x] = true;
                    cycle.push(x);
                    x = (x + u) % n;
                }
                consider_cycle(&cycle, &mask, u, &mut best);
            }
            best
        })
        .collect();
    let mut best = LongestAp { base: first, step: 1, length: 1 };
    for cand in per_step {
        if cand.length > best.length || (cand.length == best.length && (cand.step, cand.base) < (best.step, best.base)) {
            best = cand;
        }
    }
    Ok(best)
}

fn consider_cycle(cycle: &[usize], mask: &[bool], u: usize, best: &mut LongestAp) {
    let m = cycle.len();
    let mut update = |len: usize, base: usize| {
        if len > best.length || (len == best.length && (base as i64) < best.base) {
            *best = LongestAp { base: base as i64, step: u as i64, length: len };
        }
    };
    if cycle.iter().all(|&x| mask[x]) {
        update(m, *cycle.iter().min().expect("nonempty cycle"));
        return;
    }
    // runs are maximal stretches of members, read cyclically from a non-member
    let gap = cycle.iter().position(|&x| !mask[x]).expect("some non-member");
    let mut run = 0usize;
    let mut run_start = 0usize;
    for i in 1..=m {
        let x = cycle[(gap + i) % m];
        if mask[x] {
            if run == 0 {
                run_start = x;
            }
            run += 1;
        } else {
            if run > 0 {
                update(run, run_start);
            }
            run = 0;
        }
    }
}
