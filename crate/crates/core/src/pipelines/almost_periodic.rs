use serde::Serialize;

use super::{averaging_scan, centred_offsets, exp_cap, floor_p, ConstantsConfig, PeriodicityReport, ReferenceNorm};
use crate::bohr::{ap_length_guarantee, find_ap_in_bohr, BohrDescriptor};
use crate::error::{Error, Result};
use crate::fourier::{indicator_convolution, GroupFunction};
use crate::freiman::{sumset, IntSet};
use crate::groups::{ElementSet, GroupSpec};
use crate::primes::least_prime_in;
use crate::progression::{Ambient, ProgressionWitness};
use crate::rng::{derive_seed, RNG_ID};
use crate::sampling::fourier_sample;

#[derive(Clone, Debug, Serialize)]
pub struct AlmostPeriodRun {
    pub periodicity: PeriodicityReport,
    pub samples: usize,
    pub distinct_characters: usize,
    pub sample_epsilon: f64,
    pub sample_lp_error: f64,
    pub sample_succeeded: bool,
    pub radius: f64,
    pub seed: u64,
    pub rng_id: &'static str,
}

/// Samples `f^` at accuracy `ε/3`, takes `T = Bohr(sampled characters, C·ε/3)`
/// and checks `‖f(·+t) - f‖_{L^p} ≤ ε ‖f^‖_1` for every `t ∈ T`.
pub fn almost_period_bohr(
    f: &GroupFunction,
    p: f64,
    epsilon: f64,
    seed: u64,
    cfg: &ConstantsConfig,
) -> Result<AlmostPeriodRun> {
    cfg.validate()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let sample_epsilon = epsilon / 3.0;
    let sample = fourier_sample(f, p, sample_epsilon, seed, cfg.c_sample)?;
    let radius = (cfg.c_bohr_radius * epsilon / 3.0).min(2.0);
    let chars = sample.distinct_characters();
    let bohr = BohrDescriptor::new(f.group(), chars, radius)?;
    let distinct_characters = bohr.rank();
    let periodicity = PeriodicityReport::verify(f, bohr, p, epsilon, ReferenceNorm::SpectralL1)?;
    Ok(AlmostPeriodRun {
        periodicity,
        samples: sample.report.k,
        distinct_characters,
        sample_epsilon,
        sample_lp_error: sample.report.lp_error,
        sample_succeeded: sample.report.succeeded(),
        radius,
        seed,
        rng_id: RNG_ID,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DenseAttempt {
    pub seed: u64,
    pub bohr_rank: usize,
    pub bohr_size: usize,
    pub periodicity_pass: bool,
    pub bohr_ap_length: usize,
    pub length_guarantee: usize,
    pub scanned_length: usize,
    pub found: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DenseApReport {
    pub witness: ProgressionWitness,
    pub n: u64,
    pub n_prime: u64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub p: f64,
    pub length_cap: usize,
    pub attempts: Vec<DenseAttempt>,
    pub shrinks: usize,
    pub translate: usize,
    pub last_run: AlmostPeriodRun,
    pub constants: ConstantsConfig,
    pub seed: u64,
}

/// Reads a progression of `Z/N'` whose terms all lie in `[0, N'/2)` as an
/// integer progression; consecutive terms then differ by the same integer.
fn lift_to_integers(terms: &[usize]) -> Result<(i64, i64)> {
    if terms.len() == 1 {
        return Ok((terms[0] as i64, 1));
    }
    let step = terms[1] as i64 - terms[0] as i64;
    if terms.windows(2).any(|w| w[1] as i64 - w[0] as i64 != step) {
        return Err(Error::Internal("progression does not lift to the integers".into()));
    }
    if step < 0 {
        Ok((terms[terms.len() - 1] as i64, -step))
    } else {
        Ok((terms[0] as i64, step))
    }
}

/// Progression in `A + B` for `A, B ⊆ {1..N}` through the cyclic embedding into
/// `Z/N'`, `N'` the least prime in `[4N, 8N]`.
pub fn find_progression_dense(
    a: &IntSet,
    b: &IntSet,
    n: u64,
    seed: u64,
    cfg: &ConstantsConfig,
) -> Result<DenseApReport> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    for (s, name) in [(a, "A"), (b, "B")] {
        if s.min() < 1 || s.max() > n as i64 {
            return Err(Error::InvalidParameter(format!("{name} must lie inside {{1..{n}}}")));
        }
    }
    let n_prime = least_prime_in(4 * n, 8 * n).ok_or_else(|| Error::Internal("no prime in [4N, 8N]".into()))?;
    let g = GroupSpec::cyclic(n_prime)?;
    let ga = ElementSet::from_integers(g, a.elements())?;
    let gb = ElementSet::from_integers(g, b.elements())?;
    let alpha = ga.density();
    let beta = gb.density();
    let epsilon = (cfg.c_eps * (alpha * beta).sqrt() / std::f64::consts::E).min(0.99);
    let p = floor_p(cfg.c_p * (alpha * beta * (n_prime as f64).ln()).sqrt());
    let length_cap = exp_cap(p);
    let f = indicator_convolution(&ga, &gb)?;
    let cyclic_sumset = ga.sumset(&gb)?;
    let integer_sumset = sumset(a, b)?;

    let mut attempts = Vec::new();
    let (x, offsets, last_run, shrinks) = 'search: {
        let mut last: Option<(AlmostPeriodRun, ProgressionWitness, usize)> = None;
        for attempt in 0..=cfg.retries {
            let run_seed = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
            let run = almost_period_bohr(&f, p, epsilon, run_seed, cfg)?;
            let bohr_ap = find_ap_in_bohr(&run.periodicity.bohr)?;
            let m = bohr_ap.length.min(length_cap);
            let offsets = centred_offsets(g, bohr_ap.step as usize, m);
            let found = averaging_scan(&cyclic_sumset, &offsets);
            attempts.push(DenseAttempt {
                seed: run_seed,
                bohr_rank: run.periodicity.bohr.rank(),
                bohr_size: run.periodicity.bohr_size,
                periodicity_pass: run.periodicity.pass,
                bohr_ap_length: bohr_ap.length,
                length_guarantee: ap_length_guarantee(&run.periodicity.bohr),
                scanned_length: m,
                found: found.is_some(),
            });
            if let Some(x) = found {
                break 'search (x, offsets, run, 0);
            }
            last = Some((run, bohr_ap, m));
        }
        // retries exhausted: halve the progression until a translate fits
        let (run, bohr_ap, mut m) = last.expect("at least one attempt");
        let mut shrinks = 0;
        loop {
            if m == 1 {
                return Err(Error::NoProgressionFound { attempts: attempts.len() });
            }
            m = (m / 2).max(1);
            shrinks += 1;
            let offsets = centred_offsets(g, bohr_ap.step as usize, m);
            if let Some(x) = averaging_scan(&cyclic_sumset, &offsets) {
                break 'search (x, offsets, run, shrinks);
            }
        }
    };

    let terms: Vec<usize> = offsets.iter().map(|&t| g.add(x, t)).collect();
    let (base, step) = lift_to_integers(&terms)?;
    let mut witness = ProgressionWitness::new(Ambient::Integers, base, step, terms.len());
    if !witness.verify_with(|v| integer_sumset.contains(v)) {
        return Err(Error::Internal("lifted progression is not inside A + B".into()));
    }
    Ok(DenseApReport {
        witness,
        n,
        n_prime,
        alpha,
        beta,
        epsilon,
        p,
        length_cap,
        attempts,
        shrinks,
        translate: x,
        last_run,
        constants: *cfg,
        seed,
    })
}
