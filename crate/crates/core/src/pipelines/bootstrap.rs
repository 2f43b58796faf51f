use serde::Serialize;

use super::{ensure_nonempty, floor_p, oracles::tolerance, ConstantsConfig, PeriodicityReport, ReferenceNorm};
use crate::bohr::{chang_reduce, large_spectrum, ChangReduction, ChangVerification};
use crate::error::{Error, Result};
use crate::fourier::{convolution_power, convolve, GroupFunction};
use crate::groups::ElementSet;
use crate::pipelines::brute_force_almost_periods;

/// Where the set `X` of almost-periods comes from.
#[derive(Clone, Debug)]
pub enum XSource {
    /// The exact set of `ε/3`-almost-periods of `μ_A * 1_B`.
    Oracle,
    Given(ElementSet),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderCheck {
    /// `‖μ_A * 1_B‖_{p/2}`.
    pub lhs: f64,
    /// `‖μ_A * 1_B‖_1 / μ(A+B)^{1 - 2/p}`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapRun {
    pub periodicity: PeriodicityReport,
    pub k_a: f64,
    pub k_b: f64,
    pub epsilon: f64,
    pub p: f64,
    pub epsilon_hypothesis: bool,
    pub delta: f64,
    /// `k = ceil(ln(2/δ))`.
    pub k_power: u32,
    pub x_source: &'static str,
    pub x_size: usize,
    pub tau: f64,
    pub gamma_size: usize,
    pub lambda_size: usize,
    pub chang: ChangReduction,
    pub chang_check: ChangVerification,
    /// `‖μ_A*1_B*μ_X^(k) - μ_A*1_B‖_p`, against `ε/3 · ‖μ_A*1_B‖_{p/2}^{1/2}`.
    pub smoothing_error: f64,
    pub smoothing_threshold: f64,
    pub holder: HolderCheck,
    /// `c` in `radius = c ε / (d √K_A)` for the radius actually used.
    pub implied_radius_constant: f64,
    pub constants: ConstantsConfig,
    pub seed: u64,
}

pub(crate) fn doubling(a: &ElementSet, b: &ElementSet) -> Result<(f64, f64, ElementSet)> {
    let s = a.sumset(b)?;
    Ok((s.len() as f64 / a.len() as f64, s.len() as f64 / b.len() as f64, s))
}

/// Bohr set of almost-periods of `μ_A * 1_B` through smoothing by `μ_X^(k)`
/// and a dissociated basis of the large spectrum of `μ_X`.
pub fn bootstrap_strong_lp(
    a: &ElementSet,
    b: &ElementSet,
    p: f64,
    epsilon: f64,
    x: XSource,
    seed: u64,
    cfg: &ConstantsConfig,
) -> Result<BootstrapRun> {
    bootstrap_core(a, b, p, epsilon, x, seed, cfg, true)
}

#[allow(clippy::too_many_arguments)]
fn bootstrap_core(
    a: &ElementSet,
    b: &ElementSet,
    p: f64,
    epsilon: f64,
    x: XSource,
    seed: u64,
    cfg: &ConstantsConfig,
    enforce_hypothesis: bool,
) -> Result<BootstrapRun> {
    cfg.validate()?;
    a.group().ensure_same(&b.group())?;
    ensure_nonempty(a, "A")?;
    ensure_nonempty(b, "B")?;
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be finite and at least 2, got {p}")));
    }
    let g = a.group();
    let (k_a, k_b, sum) = doubling(a, b)?;
    let epsilon_hypothesis = epsilon > 0.0 && epsilon <= 1.0 / k_b.sqrt() + 1e-12;
    if !(epsilon > 0.0) || (enforce_hypothesis && !epsilon_hypothesis) {
        return Err(Error::HypothesisViolated(format!(
            "need 0 < ε ≤ 1/√K_B = {:.6}, got {epsilon}",
            1.0 / k_b.sqrt()
        )));
    }
    let f = convolve(&GroupFunction::measure(a)?, &GroupFunction::indicator(b))?;
    let reference = ReferenceNorm::HalfEnergy.evaluate(&f, p)?;
    let (x_set, x_source) = match x {
        XSource::Oracle => (brute_force_almost_periods(&f, p, epsilon / 3.0, ReferenceNorm::HalfEnergy)?, "oracle"),
        XSource::Given(s) => {
            g.ensure_same(&s.group())?;
            (s, "given")
        }
    };
    ensure_nonempty(&x_set, "X")?;
    let delta = epsilon / (5.0 * k_a.sqrt());
    let k_power = (2.0 / delta).ln().ceil().max(1.0) as u32;
    let mu_x = GroupFunction::measure(&x_set)?;
    let smoothed = convolve(&f, &convolution_power(&mu_x, k_power)?)?;
    let smoothing_error = smoothed.sub(&f)?.lp_norm(p)?;
    let gamma = large_spectrum(&mu_x, (-1.0f64).exp())?;
    let tau = x_set.density();
    let chang = chang_reduce(g, &gamma, delta.min(2.0), tau, 1.0, cfg.c_chang)?;
    let chang_check = chang.verify(true)?;
    let periodicity = PeriodicityReport::verify(&f, chang.reduced.clone(), p, epsilon, ReferenceNorm::HalfEnergy)?;

    let mu_sum = sum.density();
    let lhs = f.lp_norm(p / 2.0)?;
    let rhs = f.lp_norm(1.0)? / mu_sum.powf(1.0 - 2.0 / p);
    let holder = HolderCheck { lhs, rhs, holds: lhs >= rhs - 1e-9 };
    let d = chang.basis.len().max(1) as f64;
    Ok(BootstrapRun {
        k_a,
        k_b,
        epsilon,
        p,
        epsilon_hypothesis,
        delta,
        k_power,
        x_source,
        x_size: x_set.len(),
        tau,
        gamma_size: gamma.len(),
        lambda_size: chang.basis.len(),
        implied_radius_constant: chang.reduced_radius * d * k_a.sqrt() / epsilon,
        chang_check,
        chang,
        smoothing_error,
        smoothing_threshold: epsilon / 3.0 * reference,
        holder,
        periodicity,
        constants: *cfg,
        seed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BogolyubovReport {
    pub bootstrap: BootstrapRun,
    pub doubling: f64,
    pub p: f64,
    pub epsilon: f64,
    pub bohr_size: usize,
    pub radius: f64,
    pub rank: usize,
    /// Elements where `|μ_{-A}*μ_A*1_{A-A}(t) - 1| < 1` fails.
    pub deduction_failures: usize,
    pub max_deviation: f64,
    /// Elements of the Bohr set outside `2A - 2A` (must be empty).
    pub non_members: Vec<usize>,
    pub containment_verified: bool,
    /// `α^{1/2}` and `(log 1/α)^4`, the shapes of the radius and rank guarantees.
    pub radius_shape: f64,
    pub rank_shape: f64,
}

/// A Bohr set inside `2A - 2A`, from the bootstrap with `S = A`, `B = A - A`, `ε = 1/2`.
pub fn bogolyubov_bohr(a: &ElementSet, seed: u64, cfg: &ConstantsConfig) -> Result<BogolyubovReport> {
    cfg.validate()?;
    ensure_nonempty(a, "A")?;
    let b = a.difference_set(a)?;
    let k = a.sumset(a)?.len() as f64 / a.len() as f64;
    let p = floor_p(cfg.c_p * (2.0 * k).ln());
    let epsilon = 0.5;
    let run = bootstrap_core(a, &b, p, epsilon, XSource::Oracle, seed, cfg, false)?;

    let neg_a = a.negated();
    let v = convolve(
        &convolve(&GroupFunction::measure(&neg_a)?, &GroupFunction::measure(a)?)?,
        &GroupFunction::indicator(&b),
    )?;
    let two_a_two_a = b.sumset(&b)?;
    let members = run.periodicity.bohr.materialize()?;
    let mut deduction_failures = 0;
    let mut max_deviation = 0.0f64;
    let mut non_members = Vec::new();
    for &t in members.indices() {
        let dev = (v.at(t) - 1.0).norm();
        max_deviation = max_deviation.max(dev);
        if dev >= 1.0 - tolerance(1.0) {
            deduction_failures += 1;
        }
        if !two_a_two_a.contains(t) {
            non_members.push(t);
        }
    }
    let alpha = a.density();
    Ok(BogolyubovReport {
        doubling: k,
        p,
        epsilon,
        bohr_size: members.len(),
        radius: run.periodicity.bohr.delta(),
        rank: run.periodicity.bohr.rank(),
        deduction_failures,
        max_deviation,
        containment_verified: non_members.is_empty(),
        non_members,
        radius_shape: alpha.sqrt(),
        rank_shape: (1.0 / alpha).ln().powi(4),
        bootstrap: run,
    })
}
