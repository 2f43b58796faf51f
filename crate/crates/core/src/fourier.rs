//! Fourier analysis on `Z/N` and `F_p^n` under the averaged normalization
//!
//! ```text
//! f^(γ)   = E_x f(x) conj(γ(x))
//! f(x)    = Σ_γ f^(γ) γ(x)
//! f*g(x)  = E_y f(y) g(x - y)
//! ‖f‖_p   = (E_x |f(x)|^p)^(1/p)
//! ```
//!
//! The fast path runs `rustfft` along every axis of the group (one axis for
//! `Z/N`, `n` axes of length `p` for `F_p^n`). [`FourierMode::Direct`] sums
//! the definition term by term and serves as the reference for the fast path.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::groups::{unit_root, Character, ElementSet, GroupElement, GroupSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FourierMode {
    #[default]
    Fast,
    Direct,
}

/// A complex-valued function on a group, indexed by canonical element order.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupFunction {
    group: GroupSpec,
    values: Vec<Complex64>,
}

/// Fourier coefficients indexed by canonical character order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    group: GroupSpec,
    coeffs: Vec<Complex64>,
}

impl GroupFunction {
    pub fn new(group: GroupSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != group.order() {
            return Err(Error::InvalidParameter(format!(
                "function on {group} needs {} values, got {}",
                group.order(),
                values.len()
            )));
        }
        Ok(GroupFunction { group, values })
    }

    pub fn from_real(group: GroupSpec, values: &[f64]) -> Result<Self> {
        Self::new(group, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(group: GroupSpec) -> Self {
        GroupFunction { group, values: vec![Complex64::new(0.0, 0.0); group.order()] }
    }

    pub fn constant(group: GroupSpec, c: Complex64) -> Self {
        GroupFunction { group, values: vec![c; group.order()] }
    }

    /// `1_A`.
    pub fn indicator(set: &ElementSet) -> Self {
        let mut f = Self::zeros(set.group());
        for &i in set.indices() {
            f.values[i] = Complex64::new(1.0, 0.0);
        }
        f
    }

    /// `μ_A = 1_A / μ_G(A)`, so that `E_x μ_A(x) = 1`.
    pub fn measure(set: &ElementSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptySet("a normalized measure needs a nonempty support"));
        }
        let mut f = Self::indicator(set);
        let scale = 1.0 / set.density();
        f.values.iter_mut().for_each(|v| *v *= scale);
        Ok(f)
    }

    pub fn character(c: &Character) -> Self {
        let n = c.group.order();
        GroupFunction { group: c.group, values: (0..n).map(|x| c.value(x)).collect() }
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, x: usize) -> Complex64 {
        self.values[x]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// `x ↦ f(x + t)`.
    pub fn translate(&self, t: usize) -> GroupFunction {
        let g = self.group;
        let values = (0..g.order()).map(|x| self.values[g.add(x, t)]).collect();
        GroupFunction { group: g, values }
    }

    /// `x ↦ f(-x)`.
    pub fn reflect(&self) -> GroupFunction {
        let g = self.group;
        let values = (0..g.order()).map(|x| self.values[g.neg(x)]).collect();
        GroupFunction { group: g, values }
    }

    pub fn scaled(&self, c: Complex64) -> GroupFunction {
        GroupFunction { group: self.group, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &GroupFunction) -> Result<GroupFunction> {
        self.group.ensure_same(&other.group)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GroupFunction { group: self.group, values })
    }

    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    /// `‖f‖_{L^p}` under the averaged measure; `p = ∞` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(&self.values, p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Support `{x : f(x) ≠ 0}` up to an absolute tolerance.
    pub fn support(&self, tol: f64) -> ElementSet {
        let mask: Vec<bool> = self.values.iter().map(|v| v.norm() > tol).collect();
        ElementSet::from_mask(self.group, &mask)
    }
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("L^p exponent must be ≥ 1, got {p}")));
    }
    Ok(())
}

/// Averaged `L^p` norm of a value slice.
pub fn lp_norm(values: &[Complex64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    if values.is_empty() {
        return Ok(0.0);
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let mean = values.iter().map(|v| v.norm().powf(p)).sum::<f64>() / values.len() as f64;
    Ok(mean.powf(1.0 / p))
}

impl Spectrum {
    pub fn new(group: GroupSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != group.order() {
            return Err(Error::InvalidParameter(format!(
                "spectrum on {group} needs {} coefficients, got {}",
                group.order(),
                coeffs.len()
            )));
        }
        Ok(Spectrum { group, coeffs })
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn at(&self, frequency: usize) -> Complex64 {
        self.coeffs[frequency]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized DFT along every axis of the group's index layout.
fn fft_axes(group: GroupSpec, data: &mut [Complex64], direction: FftDirection) {
    let (len, axes) = match group {
        GroupSpec::Cyclic { modulus } => (modulus as usize, 1u32),
        GroupSpec::Vector { prime, dim } => (prime as usize, dim),
    };
    if len <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction));
    if axes == 1 {
        fft.process(data);
        return;
    }
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    let mut stride = 1usize;
    for _ in 0..axes {
        let block = stride * len;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
        stride = block;
    }
}

fn root_table(m: u64) -> Vec<Complex64> {
    (0..m).map(|k| unit_root(k, m)).collect()
}

pub fn transform(f: &GroupFunction) -> Spectrum {
    transform_with(f, FourierMode::Fast)
}

pub fn transform_with(f: &GroupFunction, mode: FourierMode) -> Spectrum {
    let g = f.group;
    let n = g.order();
    let scale = 1.0 / n as f64;
    let coeffs = match mode {
        FourierMode::Fast => {
            let mut data = f.values.clone();
            fft_axes(g, &mut data, FftDirection::Forward);
            data.iter_mut().for_each(|v| *v *= scale);
            data
        }
        FourierMode::Direct => {
            let m = g.phase_modulus();
            let roots = root_table(m);
            (0..n)
                .map(|r| {
                    let s: Complex64 = (0..n)
                        .map(|x| f.values[x] * roots[g.pairing(r, x) as usize].conj())
                        .sum();
                    s * scale
                })
                .collect()
        }
    };
    Spectrum { group: g, coeffs }
}

pub fn inverse(s: &Spectrum) -> GroupFunction {
    inverse_with(s, FourierMode::Fast)
}

pub fn inverse_with(s: &Spectrum, mode: FourierMode) -> GroupFunction {
    let g = s.group;
    let n = g.order();
    let values = match mode {
        FourierMode::Fast => {
            let mut data = s.coeffs.clone();
            fft_axes(g, &mut data, FftDirection::Inverse);
            data
        }
        FourierMode::Direct => {
            let roots = root_table(g.phase_modulus());
            (0..n)
                .map(|x| (0..n).map(|r| s.coeffs[r] * roots[g.pairing(r, x) as usize]).sum())
                .collect()
        }
    };
    GroupFunction { group: g, values }
}

pub fn convolve(f: &GroupFunction, g: &GroupFunction) -> Result<GroupFunction> {
    convolve_with(f, g, FourierMode::Fast)
}

pub fn convolve_with(f: &GroupFunction, h: &GroupFunction, mode: FourierMode) -> Result<GroupFunction> {
    f.group.ensure_same(&h.group)?;
    let g = f.group;
    match mode {
        FourierMode::Fast => {
            let fs = transform(f);
            let hs = transform(h);
            let coeffs = fs.coeffs.iter().zip(&hs.coeffs).map(|(a, b)| a * b).collect();
            Ok(inverse(&Spectrum { group: g, coeffs }))
        }
        FourierMode::Direct => {
            let n = g.order();
            let scale = 1.0 / n as f64;
            let values = (0..n)
                .map(|x| {
                    let s: Complex64 = (0..n).map(|y| f.values[y] * h.values[g.sub(x, y)]).sum();
                    s * scale
                })
                .collect();
            Ok(GroupFunction { group: g, values })
        }
    }
}

/// `f^{(k)} = f * f * ... * f` (k factors), computed as a k-th power in Fourier space.
pub fn convolution_power(f: &GroupFunction, k: u32) -> Result<GroupFunction> {
    if k == 0 {
        return Err(Error::InvalidParameter("convolution power needs k ≥ 1".into()));
    }
    if k == 1 {
        return Ok(f.clone());
    }
    let s = transform(f);
    let coeffs = s.coeffs.iter().map(|c| c.powu(k)).collect();
    Ok(inverse(&Spectrum { group: f.group, coeffs }))
}

/// `Σ_γ |s(γ)|`.
pub fn spectral_l1_norm(s: &Spectrum) -> f64 {
    s.coeffs.iter().map(|c| c.norm()).sum()
}

/// `‖f(x + t) - f(x)‖_{L^p(x)}`; `p = ∞` gives the sup norm.
pub fn lp_translate_distance(f: &GroupFunction, t: &GroupElement, p: f64) -> Result<f64> {
    f.group.ensure_same(&t.group)?;
    translate_distance(f, t.index, p)
}

/// Index form of [`lp_translate_distance`].
pub fn translate_distance(f: &GroupFunction, t: usize, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let g = f.group;
    let n = g.order();
    if p.is_infinite() {
        return Ok((0..n).map(|x| (f.values[g.add(x, t)] - f.values[x]).norm()).fold(0.0, f64::max));
    }
    let total: f64 = (0..n)
        .map(|x| (f.values[g.add(x, t)] - f.values[x]).norm().powf(p))
        .sum();
    Ok((total / n as f64).powf(1.0 / p))
}

/// `1_A * 1_B`, the normalized convolution of two indicators.
pub fn indicator_convolution(a: &ElementSet, b: &ElementSet) -> Result<GroupFunction> {
    convolve(&GroupFunction::indicator(a), &GroupFunction::indicator(b))
}

#[derive(Serialize, Deserialize)]
struct FunctionWire {
    group: GroupSpec,
    values: Vec<[f64; 2]>,
}

impl Serialize for GroupFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionWire {
            group: self.group,
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = FunctionWire::deserialize(d)?;
        let values = wire.values.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        GroupFunction::new(wire.group, values).map_err(D::Error::custom)
    }
}

impl Serialize for Spectrum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FunctionWire {
            group: self.group,
            values: self.coeffs.iter().map(|v| [v.re, v.im]).collect(),
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_function(g: GroupSpec, rng: &mut ChaCha20Rng) -> GroupFunction {
        let values = (0..g.order())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        GroupFunction::new(g, values).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_transforms_to_delta() {
        for g in [GroupSpec::cyclic(9).unwrap(), GroupSpec::vector(3, 2).unwrap()] {
            let s = transform(&GroupFunction::constant(g, c(1.0)));
            assert!((s.at(0) - 1.0).norm() < 1e-12);
            assert!(s.coeffs()[1..].iter().all(|v| v.norm() < 1e-12));
        }
    }

    #[test]
    fn point_mass_has_flat_spectrum() {
        let g = GroupSpec::cyclic(4).unwrap();
        let f = GroupFunction::indicator(&ElementSet::new(g, vec![0]).unwrap());
        for v in transform(&f).coeffs() {
            assert!((v - 0.25).norm() < 1e-12);
        }
    }

    #[test]
    fn two_point_indicator_on_z3() {
        let g = GroupSpec::cyclic(3).unwrap();
        let f = GroupFunction::indicator(&ElementSet::new(g, vec![0, 1]).unwrap());
        let s = transform(&f);
        // (1 + e^{-2πi/3}) / 3 has modulus 1/3
        let oracle = (c(1.0) + Complex64::from_polar(1.0, -std::f64::consts::TAU / 3.0)) / 3.0;
        assert!((s.at(1) - oracle).norm() < 1e-12);
        assert!((s.at(1).norm() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        let g = GroupSpec::cyclic(6).unwrap();
        let mut coeffs = vec![c(0.0); 6];
        coeffs[0] = c(1.0);
        let f = inverse(&Spectrum::new(g, coeffs).unwrap());
        assert!(f.values().iter().all(|v| (v - 1.0).norm() < 1e-12));
        let z = inverse(&Spectrum::new(g, vec![c(0.0); 6]).unwrap());
        assert!(z.is_zero());

        let g = GroupSpec::cyclic(101).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let f = random_function(g, &mut rng);
        let back = inverse(&transform(&f));
        assert!(max_diff(back.values(), f.values()) < 1e-9);
    }

    #[test]
    fn fast_matches_direct() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for g in [
            GroupSpec::cyclic(1).unwrap(),
            GroupSpec::cyclic(12).unwrap(),
            GroupSpec::cyclic(97).unwrap(),
            GroupSpec::vector(2, 5).unwrap(),
            GroupSpec::vector(3, 3).unwrap(),
            GroupSpec::vector(5, 2).unwrap(),
        ] {
            let f = random_function(g, &mut rng);
            let a = transform_with(&f, FourierMode::Fast);
            let b = transform_with(&f, FourierMode::Direct);
            assert!(max_diff(a.coeffs(), b.coeffs()) < 1e-10, "{g}");
            let fa = inverse_with(&a, FourierMode::Fast);
            let fb = inverse_with(&a, FourierMode::Direct);
            assert!(max_diff(fa.values(), fb.values()) < 1e-10, "{g}");
        }
    }

    #[test]
    fn convolution_examples() {
        let g = GroupSpec::cyclic(8).unwrap();
        let full = GroupFunction::constant(g, c(1.0));
        let ff = convolve(&full, &full).unwrap();
        assert!(ff.values().iter().all(|v| (v - 1.0).norm() < 1e-12));

        // A = B = {0,1} in Z/5: counts of (a, b) with a + b = x are 1, 2, 1, 0, 0
        let g5 = GroupSpec::cyclic(5).unwrap();
        let ab = ElementSet::new(g5, vec![0, 1]).unwrap();
        let conv = indicator_convolution(&ab, &ab).unwrap();
        let expected = [0.2, 0.4, 0.2, 0.0, 0.0];
        for (v, e) in conv.values().iter().zip(expected) {
            assert!((v - e).norm() < 1e-12);
        }

        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let f = random_function(g5, &mut rng);
        let delta = GroupFunction::indicator(&ElementSet::new(g5, vec![0]).unwrap());
        let fd = convolve(&f, &delta).unwrap();
        assert!(max_diff(fd.values(), f.scaled(c(0.2)).values()) < 1e-12);

        let other = GroupFunction::zeros(GroupSpec::cyclic(6).unwrap());
        assert!(matches!(convolve(&f, &other), Err(Error::GroupMismatch { .. })));
    }

    #[test]
    fn convolution_power_examples() {
        let g = GroupSpec::cyclic(16).unwrap();
        let mu_g = GroupFunction::measure(&ElementSet::full(g)).unwrap();
        for k in 1..5 {
            let p = convolution_power(&mu_g, k).unwrap();
            assert!(p.values().iter().all(|v| (v - 1.0).norm() < 1e-12));
        }
        let g7 = GroupSpec::cyclic(7).unwrap();
        let mu = GroupFunction::measure(&ElementSet::new(g7, vec![0, 1]).unwrap()).unwrap();
        assert_eq!(convolution_power(&mu, 1).unwrap(), mu);
        let twice = convolve_with(&mu, &mu, FourierMode::Direct).unwrap();
        assert!(max_diff(convolution_power(&mu, 2).unwrap().values(), twice.values()) < 1e-12);
        assert!(convolution_power(&mu, 0).is_err());
    }

    #[test]
    fn spectral_l1_examples() {
        let g = GroupSpec::cyclic(10).unwrap();
        let chi = GroupFunction::character(&g.character(3));
        assert!((spectral_l1_norm(&transform(&chi)) - 1.0).abs() < 1e-12);
        assert_eq!(spectral_l1_norm(&transform(&GroupFunction::zeros(g))), 0.0);

        let g5 = GroupSpec::cyclic(5).unwrap();
        let ab = ElementSet::new(g5, vec![0, 1]).unwrap();
        let conv = indicator_convolution(&ab, &ab).unwrap();
        let direct = spectral_l1_norm(&transform_with(&conv, FourierMode::Direct));
        assert!((spectral_l1_norm(&transform(&conv)) - direct).abs() < 1e-12);
        assert!(direct <= 0.4 + 1e-9);
    }

    #[test]
    fn translate_distance_examples() {
        let g = GroupSpec::cyclic(4).unwrap();
        let f = GroupFunction::indicator(&ElementSet::new(g, vec![0]).unwrap());
        let d = lp_translate_distance(&f, &g.element(1), 2.0).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(lp_translate_distance(&f, &g.element(0), 3.0).unwrap(), 0.0);
        assert_eq!(lp_translate_distance(&f, &g.element(0), f64::INFINITY).unwrap(), 0.0);
        assert_eq!(lp_translate_distance(&f, &g.element(2), f64::INFINITY).unwrap(), 1.0);
        let k = GroupFunction::constant(g, c(2.5));
        assert_eq!(lp_translate_distance(&k, &g.element(3), 2.0).unwrap(), 0.0);
        assert!(lp_translate_distance(&f, &g.element(1), 0.5).is_err());
        let other = GroupSpec::cyclic(5).unwrap();
        assert!(lp_translate_distance(&f, &other.element(1), 2.0).is_err());
    }

    #[test]
    fn measures_have_unit_mean() {
        let g = GroupSpec::vector(2, 4).unwrap();
        let s = ElementSet::new(g, vec![1, 4, 9]).unwrap();
        let mu = GroupFunction::measure(&s).unwrap();
        assert!((mu.mean() - 1.0).norm() < 1e-12);
        assert!(GroupFunction::measure(&ElementSet::new(g, vec![]).unwrap()).is_err());
    }

    #[test]
    fn json_shape() {
        let g = GroupSpec::cyclic(2).unwrap();
        let f = GroupFunction::from_real(g, &[1.0, -0.5]).unwrap();
        let j = serde_json::to_value(&f).unwrap();
        assert_eq!(j, serde_json::json!({"group": "zN:2", "values": [[1.0, 0.0], [-0.5, 0.0]]}));
        let back: GroupFunction = serde_json::from_value(j).unwrap();
        assert_eq!(back, f);
        let bad = serde_json::json!({"group": "zN:3", "values": [[1.0, 0.0]]});
        assert!(serde_json::from_value::<GroupFunction>(bad).is_err());
    }
}
