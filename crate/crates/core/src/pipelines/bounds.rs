//! The displayed progression-length and radius bounds, evaluated directly and
//! again in log space. `ln N` is taken as input so that `N` may be astronomically large.

use serde::Serialize;

use crate::error::{Error, Result};

const AGREEMENT: f64 = 1e-9;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `exp(c (αβ log N)^{1/2} - log log N)`.
pub fn thm11_bound(c: f64, alpha: f64, beta: f64, ln_n: f64) -> f64 {
    (c * (alpha * beta * ln_n).sqrt()).exp() / ln_n
}

fn thm11_log(c: f64, alpha: f64, beta: f64, ln_n: f64) -> f64 {
    c * (0.5 * (alpha.ln() + beta.ln() + ln_n.ln())).exp() - ln_n.ln()
}

/// `exp(c (α log N / (log 2/β)^3)^{1/2} - log(β^{-1} log N))`.
pub fn thm13_bound(c: f64, alpha: f64, beta: f64, ln_n: f64) -> f64 {
    let l = (2.0 / beta).ln();
    (c * (alpha * ln_n / (l * l * l)).sqrt()).exp() * beta / ln_n
}

fn thm13_log(c: f64, alpha: f64, beta: f64, ln_n: f64) -> f64 {
    let ll = (std::f64::consts::LN_2 - beta.ln()).ln();
    c * (0.5 * (alpha.ln() + ln_n.ln() - 3.0 * ll)).exp() - (ln_n.ln() - beta.ln())
}

/// `exp(c (log|A+B| / K_B (log 2K_A)^3)^{1/2} - log(2 K_A log 2|A|))`, from
/// `ln|A+B|` and `ln|A|`.
pub fn thm14_bound(c: f64, ln_sum: f64, ln_a: f64, k_a: f64, k_b: f64) -> f64 {
    let l = (2.0 * k_a).ln();
    (c * (ln_sum / (k_b * l * l * l)).sqrt()).exp() / (2.0 * k_a * (std::f64::consts::LN_2 + ln_a))
}

fn thm14_log(c: f64, ln_sum: f64, ln_a: f64, k_a: f64, k_b: f64) -> f64 {
    let ll = (std::f64::consts::LN_2 + k_a.ln()).ln();
    c * (0.5 * (ln_sum.ln() - k_b.ln() - 3.0 * ll)).exp()
        - (std::f64::consts::LN_2 + k_a.ln() + (std::f64::consts::LN_2 + ln_a).ln())
}

fn agree(direct: f64, log_value: f64) -> (bool, f64) {
    if !(direct.is_finite() && direct > 0.0) {
        return (false, f64::INFINITY);
    }
    let gap = (direct.ln() - log_value).abs();
    (gap <= AGREEMENT * log_value.abs().max(1.0), gap)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Thm74Params {
    pub c: f64,
    pub big_c: f64,
    pub epsilon: f64,
    pub p: f64,
    pub mu_a: f64,
    pub mu_b: f64,
    pub mu_s: f64,
    pub k1: f64,
    pub k2: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Thm74Radius {
    pub delta: f64,
    pub rank: f64,
    pub radius: f64,
}

/// `δ = c ε (μ(A)/μ(B))^{1/2} K_2^{-1/p}`,
/// `d = C p (log 1/δ)^2 ε^{-2} log(2K_1) + C log(1/μ(S))` and radius `δ/d`.
pub fn thm74_radius(q: &Thm74Params) -> Result<Thm74Radius> {
    for (name, v) in [
        ("c", q.c),
        ("C", q.big_c),
        ("ε", q.epsilon),
        ("p", q.p),
        ("μ(A)", q.mu_a),
        ("μ(B)", q.mu_b),
        ("μ(S)", q.mu_s),
        ("K_1", q.k1),
        ("K_2", q.k2),
    ] {
        positive(name, v)?;
    }
    let delta = q.c * q.epsilon * (q.mu_a / q.mu_b).sqrt() * q.k2.powf(-1.0 / q.p);
    let l = (1.0 / delta).ln();
    let rank = q.big_c * q.p * l * l / (q.epsilon * q.epsilon) * (2.0 * q.k1).ln() + q.big_c * (1.0 / q.mu_s).ln();
    Ok(Thm74Radius { delta, rank, radius: delta / rank })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub alpha: f64,
    pub beta: f64,
    pub thm11: f64,
    pub thm13: f64,
    pub thm11_log: f64,
    pub thm13_log: f64,
    /// `β / log N`, the value of the second bound as `α → 0`.
    pub thm13_limit: f64,
    pub thm13_exceeds: bool,
    /// Both evaluations agree; false when the direct value overflows.
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingRow {
    pub k_a: f64,
    pub k_b: f64,
    pub thm14: f64,
    pub thm14_log: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundTable {
    pub c: f64,
    pub ln_n: f64,
    pub rows: Vec<BoundRow>,
    /// Small-doubling bound with `|A+B| = N` and `|A| = N/K_A`.
    pub doubling_rows: Vec<DoublingRow>,
    /// Grid points where the improved-density bound exceeds the plain one.
    pub crossover: Vec<(f64, f64)>,
    pub max_log_gap: f64,
    pub all_agree: bool,
}

/// Evaluates the bounds over a grid of densities and doubling constants.
pub fn bound_table(alphas: &[f64], betas: &[f64], ln_n: f64, k_pairs: &[(f64, f64)], c: f64) -> Result<BoundTable> {
    positive("c", c)?;
    if !(ln_n.is_finite() && ln_n > 1.0) {
        return Err(Error::InvalidParameter(format!("log N must exceed 1, got {ln_n}")));
    }
    let mut rows = Vec::new();
    let mut crossover = Vec::new();
    let mut max_log_gap = 0.0f64;
    for &alpha in alphas {
        for &beta in betas {
            if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0) {
                return Err(Error::InvalidParameter(format!("densities must lie in (0, 1], got ({alpha}, {beta})")));
            }
            let (thm11, thm13) = (thm11_bound(c, alpha, beta, ln_n), thm13_bound(c, alpha, beta, ln_n));
            let (l11, l13) = (thm11_log(c, alpha, beta, ln_n), thm13_log(c, alpha, beta, ln_n));
            let (a11, g11) = agree(thm11, l11);
            let (a13, g13) = agree(thm13, l13);
            max_log_gap = max_log_gap.max(g11).max(g13);
            // compared in log space, which never overflows
            let thm13_exceeds = l13 > l11;
            if thm13_exceeds {
                crossover.push((alpha, beta));
            }
            rows.push(BoundRow {
                alpha,
                beta,
                thm11,
                thm13,
                thm11_log: l11,
                thm13_log: l13,
                thm13_limit: beta / ln_n,
                thm13_exceeds,
                agree: a11 && a13,
            });
        }
    }
    let mut doubling_rows = Vec::new();
    for &(k_a, k_b) in k_pairs {
        if !(k_a >= 1.0 && k_b >= 1.0 && k_a.is_finite() && k_b.is_finite()) {
            return Err(Error::InvalidParameter(format!("doubling constants must be at least 1, got ({k_a}, {k_b})")));
        }
        let ln_a = ln_n - k_a.ln();
        let thm14 = thm14_bound(c, ln_n, ln_a, k_a, k_b);
        let l14 = thm14_log(c, ln_n, ln_a, k_a, k_b);
        let (ok, gap) = agree(thm14, l14);
        max_log_gap = max_log_gap.max(gap);
        doubling_rows.push(DoublingRow { k_a, k_b, thm14, thm14_log: l14, agree: ok });
    }
    let all_agree = rows.iter().all(|r| r.agree) && doubling_rows.iter().all(|r| r.agree);
    Ok(BoundTable { c, ln_n, rows, doubling_rows, crossover, max_log_gap, all_agree })
}
