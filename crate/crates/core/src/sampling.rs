//! Approximating a linear combination `f = Σ λ_j g_j` (with `‖g_j‖_p ≤ 1`) by
//! the average of `k ≈ C p / ε²` signed parts drawn with probability
//! `|λ_j| / ‖λ‖₁`, in three flavours: an explicit decomposition, the Fourier
//! expansion `f = Σ f^(γ) γ`, and the physical expansion
//! `1_A * 1_B = Σ_y 1_A(y)/|G| · 1_{y+B}`.

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{inverse, lp_norm, transform, GroupFunction, Spectrum};
use crate::groups::{Character, ElementSet, GroupSpec};
use crate::rng::{derive_seed, rng_from_seed, RNG_ID};

/// How the parts `g_j` are stored.
#[derive(Clone, Debug)]
pub enum Parts {
    Explicit(Vec<GroupFunction>),
    /// Part `j` is the character with frequency `j`.
    Characters(GroupSpec),
    /// Part `j` is `x ↦ base(x - shifts[j])`.
    Translates { base: GroupFunction, shifts: Vec<usize> },
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    group: GroupSpec,
    weights: Vec<Complex64>,
    parts: Parts,
    l1: f64,
}

/// `λ° = λ/|λ|`, with `0° = 0`.
pub fn direction(lambda: Complex64) -> Complex64 {
    let r = lambda.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        lambda / r
    }
}

impl Decomposition {
    pub fn new(weights: Vec<Complex64>, parts: Vec<GroupFunction>) -> Result<Self> {
        let group = parts
            .first()
            .map(|g| g.group())
            .ok_or_else(|| Error::InvalidParameter("a decomposition needs at least one part".into()))?;
        for g in &parts {
            group.ensure_same(&g.group())?;
        }
        Self::build(group, weights, Parts::Explicit(parts))
    }

    fn build(group: GroupSpec, weights: Vec<Complex64>, parts: Parts) -> Result<Self> {
        let count = match &parts {
            Parts::Explicit(v) => v.len(),
            Parts::Characters(g) => g.order(),
            Parts::Translates { shifts, .. } => shifts.len(),
        };
        if weights.len() != count || count == 0 {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {count} parts",
                weights.len()
            )));
        }
        let l1 = weights.iter().map(|w| w.norm()).sum();
        Ok(Decomposition { group, weights, parts, l1 })
    }

    /// The Fourier expansion of `f`: weights `f^(γ)`, parts the characters.
    pub fn fourier(f: &GroupFunction) -> Self {
        let s = transform(f);
        Self::build(f.group(), s.coeffs().to_vec(), Parts::Characters(f.group()))
            .expect("one weight per character")
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn parts(&self) -> &Parts {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `‖λ‖₁`.
    pub fn l1(&self) -> f64 {
        self.l1
    }

    /// Largest `‖g_j‖_{L^p}` over the parts.
    pub fn max_part_norm(&self, p: f64) -> Result<f64> {
        match &self.parts {
            Parts::Explicit(v) => v.iter().map(|g| g.lp_norm(p)).try_fold(0.0, |m, n| Ok(f64::max(m, n?))),
            Parts::Characters(_) => Ok(1.0),
            Parts::Translates { base, .. } => base.lp_norm(p),
        }
    }

    /// `out += coeff · g_j`.
    pub fn accumulate_part(&self, j: usize, coeff: Complex64, out: &mut [Complex64]) {
        let g = self.group;
        match &self.parts {
            Parts::Explicit(v) => {
                for (o, x) in out.iter_mut().zip(v[j].values()) {
                    *o += coeff * x;
                }
            }
            Parts::Characters(_) => {
                let c = g.character(j);
                for (x, o) in out.iter_mut().enumerate() {
                    *o += coeff * c.value(x);
                }
            }
            Parts::Translates { base, shifts } => {
                let y = shifts[j];
                for (x, o) in out.iter_mut().enumerate() {
                    *o += coeff * base.at(g.sub(x, y));
                }
            }
        }
    }

    /// `Σ_j c_j g_j` for a full coefficient vector.
    fn combine(&self, coeffs: &[Complex64]) -> GroupFunction {
        if let Parts::Characters(g) = &self.parts {
            return inverse(&Spectrum::new(*g, coeffs.to_vec()).expect("coefficient per character"));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.group.order()];
        for (j, c) in coeffs.iter().enumerate() {
            if c.norm() != 0.0 {
                self.accumulate_part(j, *c, &mut out);
            }
        }
        GroupFunction::new(self.group, out).expect("values per element")
    }

    /// `f / ‖λ‖₁`.
    pub fn normalized_target(&self) -> GroupFunction {
        let scaled: Vec<Complex64> = self.weights.iter().map(|w| w / self.l1).collect();
        self.combine(&scaled)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleReport {
    pub k: usize,
    pub sigma: Vec<usize>,
    #[serde(skip)]
    pub approximant: GroupFunction,
    pub epsilon: f64,
    pub p: f64,
    pub lp_error: f64,
    pub seed: u64,
    pub rng_id: &'static str,
    /// Factor the parts were divided by to reach unit `L^p` norm (1 when untouched).
    pub scale: f64,
}

impl SampleReport {
    pub fn succeeded(&self) -> bool {
        self.lp_error <= self.epsilon
    }
}

/// `k = ceil(C p / ε²)`.
pub fn sample_count(c_sample: f64, p: f64, epsilon: f64) -> usize {
    (c_sample * p / (epsilon * epsilon)).ceil().max(1.0) as usize
}

fn check_sampling_params(p: f64, epsilon: f64, c_sample: f64) -> Result<()> {
    if p.is_nan() || p < 2.0 {
        return Err(Error::InvalidParameter(format!("sampling needs p ≥ 2, got {p}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("sampling needs 0 < ε < 1, got {epsilon}")));
    }
    if !(c_sample > 0.0 && c_sample.is_finite()) {
        return Err(Error::InvalidParameter(format!("C_sample must be positive, got {c_sample}")));
    }
    Ok(())
}

/// Precomputed state for repeated draws from one decomposition.
pub struct Sampler<'a> {
    decomposition: &'a Decomposition,
    target: GroupFunction,
    dist: WeightedIndex<f64>,
    p: f64,
    epsilon: f64,
    k: usize,
    scale: f64,
}

impl<'a> Sampler<'a> {
    pub fn new(d: &'a Decomposition, p: f64, epsilon: f64, c_sample: f64) -> Result<Self> {
        check_sampling_params(p, epsilon, c_sample)?;
        if d.l1 == 0.0 {
            return Err(Error::InvalidParameter("all weights are zero".into()));
        }
        let worst = d.max_part_norm(p)?;
        if worst > 1.0 + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "parts must have L^{p} norm at most 1, found {worst}"
            )));
        }
        let dist = WeightedIndex::new(d.weights.iter().map(|w| w.norm()))
            .map_err(|e| Error::InvalidParameter(format!("bad weights: {e}")))?;
        Ok(Sampler {
            decomposition: d,
            target: d.normalized_target(),
            dist,
            p,
            epsilon,
            k: sample_count(c_sample, p, epsilon),
            scale: 1.0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn target(&self) -> &GroupFunction {
        &self.target
    }

    pub fn draw(&self, seed: u64) -> SampleReport {
        let d = self.decomposition;
        let mut rng = rng_from_seed(seed);
        let sigma: Vec<usize> = (0..self.k).map(|_| self.dist.sample(&mut rng)).collect();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d.len()];
        let inv_k = 1.0 / self.k as f64;
        for &j in &sigma {
            coeffs[j] += direction(d.weights[j]) * inv_k;
        }
        let approximant = d.combine(&coeffs);
        let diff = self.target.sub(&approximant).expect("same group");
        let lp_error = lp_norm(diff.values(), self.p).expect("p validated");
        SampleReport {
            k: self.k,
            sigma,
            approximant,
            epsilon: self.epsilon,
            p: self.p,
            lp_error,
            seed,
            rng_id: RNG_ID,
            scale: self.scale,
        }
    }
}

pub fn sample_approximant(
    d: &Decomposition,
    p: f64,
    epsilon: f64,
    seed: u64,
    c_sample: f64,
) -> Result<SampleReport> {
    Ok(Sampler::new(d, p, epsilon, c_sample)?.draw(seed))
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierSample {
    #[serde(flatten)]
    pub report: SampleReport,
    #[serde(skip)]
    pub characters: Vec<Character>,
    /// Unit coefficients `c_j = f^(γ_j)°`.
    #[serde(skip)]
    pub coefficients: Vec<Complex64>,
    pub spectral_l1: f64,
}

impl FourierSample {
    /// Distinct sampled characters in canonical order.
    pub fn distinct_characters(&self) -> Vec<Character> {
        let mut out = self.characters.clone();
        out.sort();
        out.dedup();
        out
    }
}

fn fourier_sample_from(d: &Decomposition, report: SampleReport) -> FourierSample {
    let g = d.group();
    let characters: Vec<Character> = report.sigma.iter().map(|&j| g.character(j)).collect();
    let coefficients = report.sigma.iter().map(|&j| direction(d.weights()[j])).collect();
    FourierSample { report, characters, coefficients, spectral_l1: d.l1() }
}

pub fn fourier_sample(
    f: &GroupFunction,
    p: f64,
    epsilon: f64,
    seed: u64,
    c_sample: f64,
) -> Result<FourierSample> {
    if f.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let d = Decomposition::fourier(f);
    let report = sample_approximant(&d, p, epsilon, seed, c_sample)?;
    Ok(fourier_sample_from(&d, report))
}

/// The physical-space decomposition of `1_A * 1_B` with parts rescaled to unit `L^p` norm.
pub fn physical_decomposition(a: &ElementSet, b: &ElementSet, p: f64) -> Result<(Decomposition, f64)> {
    a.group().ensure_same(&b.group())?;
    if a.is_empty() {
        return Err(Error::EmptySet("physical sampling needs a nonempty A"));
    }
    if b.is_empty() {
        return Err(Error::EmptySet("physical sampling needs a nonempty B"));
    }
    let g = a.group();
    let scale = b.density().powf(1.0 / p);
    let base = GroupFunction::indicator(b).scaled(Complex64::new(1.0 / scale, 0.0));
    let weight = Complex64::new(scale / g.order() as f64, 0.0);
    let shifts = a.indices().to_vec();
    let weights = vec![weight; shifts.len()];
    let d = Decomposition::build(g, weights, Parts::Translates { base, shifts })?;
    Ok((d, scale))
}

pub fn physical_sample(
    a: &ElementSet,
    b: &ElementSet,
    p: f64,
    epsilon: f64,
    seed: u64,
    c_sample: f64,
) -> Result<SampleReport> {
    check_sampling_params(p, epsilon, c_sample)?;
    let (d, scale) = physical_decomposition(a, b, p)?;
    let mut sampler = Sampler::new(&d, p, epsilon, c_sample)?;
    sampler.scale = scale;
    Ok(sampler.draw(seed))
}

/// Which sampling operation a failure-rate measurement repeats.
#[derive(Clone, Debug)]
pub enum SamplingTask {
    Decomposition { decomposition: Decomposition, p: f64, epsilon: f64 },
    Fourier { f: GroupFunction, p: f64, epsilon: f64 },
    Physical { a: ElementSet, b: ElementSet, p: f64, epsilon: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureReport {
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub k: usize,
    pub p: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub rng_id: &'static str,
    pub mean_error: f64,
}

/// Reruns the task with per-trial seeds `derive_seed(seed, i)` and counts `lp_error > ε`.
pub fn measure_failure_rate(task: &SamplingTask, trials: usize, seed: u64, c_sample: f64) -> Result<FailureReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let (decomposition, p, epsilon, scale) = match task {
        SamplingTask::Decomposition { decomposition, p, epsilon } => (decomposition.clone(), *p, *epsilon, 1.0),
        SamplingTask::Fourier { f, p, epsilon } => {
            if f.is_zero() {
                return Err(Error::ZeroFunction);
            }
            (Decomposition::fourier(f), *p, *epsilon, 1.0)
        }
        SamplingTask::Physical { a, b, p, epsilon } => {
            check_sampling_params(*p, *epsilon, c_sample)?;
            let (d, scale) = physical_decomposition(a, b, *p)?;
            (d, *p, *epsilon, scale)
        }
    };
    let mut sampler = Sampler::new(&decomposition, p, epsilon, c_sample)?;
    sampler.scale = scale;
    let errors: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| sampler.draw(derive_seed(seed, i)).lp_error)
        .collect();
    let failures = errors.iter().filter(|&&e| e > epsilon).count();
    Ok(FailureReport {
        trials,
        failures,
        failure_rate: failures as f64 / trials as f64,
        k: sampler.k(),
        p,
        epsilon,
        seed,
        rng_id: RNG_ID,
        mean_error: errors.iter().sum::<f64>() / trials as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{indicator_convolution, spectral_l1_norm};
    use rand::seq::SliceRandom;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_set(g: GroupSpec, size: usize, seed: u64) -> ElementSet {
        let mut idx: Vec<usize> = (0..g.order()).collect();
        idx.shuffle(&mut rng_from_seed(seed));
        ElementSet::new(g, idx[..size].to_vec()).unwrap()
    }

    #[test]
    fn single_part_is_exact() {
        let g = GroupSpec::cyclic(8).unwrap();
        let part = GroupFunction::from_real(g, &[0.5, -0.25, 1.0, 0.0, 0.3, 0.2, -1.0, 0.1]).unwrap();
        let d = Decomposition::new(vec![c(-2.0, 1.0)], vec![part]).unwrap();
        for seed in 0..5 {
            let r = sample_approximant(&d, 2.0, 0.1, seed, 4.0).unwrap();
            assert!(r.lp_error < 1e-12);
            assert!(r.sigma.iter().all(|&j| j == 0));
        }
    }

    #[test]
    fn identical_positive_parts_are_exact() {
        let g = GroupSpec::cyclic(5).unwrap();
        let part = GroupFunction::from_real(g, &[0.3, 0.1, -0.5, 0.2, 0.9]).unwrap();
        let d = Decomposition::new(vec![c(1.0, 0.0), c(3.0, 0.0), c(0.5, 0.0)], vec![part; 3]).unwrap();
        let r = sample_approximant(&d, 4.0, 0.3, 9, 4.0).unwrap();
        assert!(r.lp_error < 1e-12);
        let fr = measure_failure_rate(
            &SamplingTask::Decomposition { decomposition: d, p: 4.0, epsilon: 0.3 },
            20,
            1,
            4.0,
        )
        .unwrap();
        assert_eq!(fr.failures, 0);
    }

    #[test]
    fn zero_weights_never_sampled() {
        let g = GroupSpec::cyclic(3).unwrap();
        let parts: Vec<_> = (0..3).map(|r| GroupFunction::character(&g.character(r))).collect();
        let d = Decomposition::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], parts).unwrap();
        let r = sample_approximant(&d, 2.0, 0.5, 3, 4.0).unwrap();
        assert!(r.sigma.iter().all(|&j| j == 1));
        assert_eq!(direction(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn parameter_validation() {
        let g = GroupSpec::cyclic(3).unwrap();
        let part = GroupFunction::constant(g, c(1.0, 0.0));
        let d = Decomposition::new(vec![c(1.0, 0.0)], vec![part.clone()]).unwrap();
        assert!(sample_approximant(&d, 1.5, 0.5, 0, 4.0).is_err());
        assert!(sample_approximant(&d, 2.0, 1.0, 0, 4.0).is_err());
        assert!(sample_approximant(&d, 2.0, 0.0, 0, 4.0).is_err());
        let zero = Decomposition::new(vec![c(0.0, 0.0)], vec![part.clone()]).unwrap();
        assert!(sample_approximant(&zero, 2.0, 0.5, 0, 4.0).is_err());
        let big = Decomposition::new(vec![c(1.0, 0.0)], vec![part.scaled(c(2.0, 0.0))]).unwrap();
        assert!(sample_approximant(&big, 2.0, 0.5, 0, 4.0).is_err());
        assert!(Decomposition::new(vec![], vec![]).is_err());
        assert!(matches!(
            fourier_sample(&GroupFunction::zeros(g), 2.0, 0.5, 0, 4.0),
            Err(Error::ZeroFunction)
        ));
        let empty = ElementSet::new(g, vec![]).unwrap();
        assert!(physical_sample(&empty, &ElementSet::full(g), 2.0, 0.5, 0, 4.0).is_err());
    }

    #[test]
    fn reproducible_per_seed() {
        let g = GroupSpec::cyclic(31).unwrap();
        let f = indicator_convolution(&random_set(g, 10, 1), &random_set(g, 12, 2)).unwrap();
        let a = fourier_sample(&f, 2.0, 0.3, 77, 4.0).unwrap();
        let b = fourier_sample(&f, 2.0, 0.3, 77, 4.0).unwrap();
        assert_eq!(a.report.sigma, b.report.sigma);
        assert_eq!(a.report.approximant, b.report.approximant);
        assert_eq!(a.report.lp_error, b.report.lp_error);
    }

    #[test]
    fn fourier_sample_of_characters() {
        let g = GroupSpec::cyclic(12).unwrap();
        let one = GroupFunction::constant(g, c(1.0, 0.0));
        let r = fourier_sample(&one, 2.0, 0.2, 1, 4.0).unwrap();
        assert!(r.characters.iter().all(|ch| ch.is_principal()));
        assert!(r.report.lp_error < 1e-9);

        let chi = GroupFunction::character(&g.character(5));
        let r = fourier_sample(&chi, 4.0, 0.2, 2, 4.0).unwrap();
        assert!(r.characters.iter().all(|ch| ch.frequency == 5));
        assert!(r.coefficients.iter().all(|cj| (cj - 1.0).norm() < 1e-9));
        assert!(r.report.lp_error < 1e-9);
    }

    #[test]
    fn fourier_sample_coefficients_are_unit() {
        let g = GroupSpec::cyclic(40).unwrap();
        let f = indicator_convolution(&random_set(g, 15, 5), &random_set(g, 9, 6)).unwrap();
        let r = fourier_sample(&f, 2.0, 0.4, 3, 4.0).unwrap();
        assert!(r.coefficients.iter().all(|cj| (cj.norm() - 1.0).abs() < 1e-12));
        let l1 = spectral_l1_norm(&transform(&r.report.approximant));
        assert!(l1 <= 1.0 + 1e-9);
        // approximant recomputed independently from the drawn indices
        let mut again = vec![c(0.0, 0.0); g.order()];
        for (ch, cj) in r.characters.iter().zip(&r.coefficients) {
            for (x, v) in again.iter_mut().enumerate() {
                *v += cj * ch.value(x) / r.report.k as f64;
            }
        }
        let diff = r.report.approximant.values().iter().zip(&again).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn physical_sample_degenerate_cases() {
        let g = GroupSpec::cyclic(11).unwrap();
        let b = random_set(g, 4, 3);
        let single = ElementSet::new(g, vec![7]).unwrap();
        let r = physical_sample(&single, &b, 2.0, 0.3, 0, 4.0).unwrap();
        assert!(r.lp_error < 1e-12);
        let expected = GroupFunction::indicator(&b.translate(7)).scaled(c(1.0 / r.scale, 0.0));
        let diff = r.approximant.sub(&expected).unwrap().sup_norm();
        assert!(diff < 1e-12);

        let a = random_set(g, 5, 4);
        let r = physical_sample(&a, &ElementSet::full(g), 3.0, 0.3, 1, 4.0).unwrap();
        assert!(r.lp_error < 1e-12);
        assert!((r.scale - 1.0).abs() < 1e-15);
    }

    #[test]
    fn physical_target_is_scaled_convolution() {
        let g = GroupSpec::cyclic(23).unwrap();
        let a = random_set(g, 6, 8);
        let b = random_set(g, 9, 9);
        let (d, scale) = physical_decomposition(&a, &b, 2.0).unwrap();
        let mu_a = GroupFunction::measure(&a).unwrap();
        let expected = crate::fourier::convolve(&mu_a, &GroupFunction::indicator(&b))
            .unwrap()
            .scaled(c(1.0 / scale, 0.0));
        assert!(d.normalized_target().sub(&expected).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn index_distribution_matches_weights() {
        let g = GroupSpec::cyclic(4).unwrap();
        let parts: Vec<_> = (0..4).map(|r| GroupFunction::character(&g.character(r))).collect();
        let weights = vec![c(1.0, 0.0), c(0.0, -2.0), c(3.0, 0.0), c(-0.5, 0.5)];
        let d = Decomposition::new(weights.clone(), parts).unwrap();
        let sampler = Sampler::new(&d, 2.0, 0.01, 1.0).unwrap();
        let r = sampler.draw(123);
        assert!(r.k >= 10_000);
        let mut counts = [0usize; 4];
        r.sigma.iter().for_each(|&j| counts[j] += 1);
        let total: f64 = weights.iter().map(|w| w.norm()).sum();
        let tv: f64 = counts
            .iter()
            .zip(&weights)
            .map(|(&n, w)| (n as f64 / r.k as f64 - w.norm() / total).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }

    #[test]
    fn mean_error_decreases_with_k() {
        let g = GroupSpec::cyclic(64).unwrap();
        let f = indicator_convolution(&random_set(g, 30, 1), &random_set(g, 25, 2)).unwrap();
        let d = Decomposition::fourier(&f);
        // ε chosen so k = ceil(2/ε²) lands on 4, 16, 64, 256 with C = 1, p = 2
        let means: Vec<f64> = [4usize, 16, 64, 256]
            .iter()
            .map(|&k| {
                let eps = (2.0 / k as f64).sqrt().min(0.999);
                let sampler = Sampler::new(&d, 2.0, eps, 1.0).unwrap();
                assert!(sampler.k() >= k && sampler.k() <= k + 1);
                (0..100).map(|s| sampler.draw(derive_seed(5, s)).lp_error).sum::<f64>() / 100.0
            })
            .collect();
        for w in means.windows(2) {
            assert!(w[1] <= w[0], "{means:?}");
        }
    }
}
