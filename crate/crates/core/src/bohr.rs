//! Bohr sets `Bohr(Γ, δ) = {x : |γ(x) - 1| ≤ δ for all γ ∈ Γ}`, their size and
//! progression content, exact annihilators in `F_p^n`, and the reduction of a
//! large-spectrum Bohr set to a low-rank one through a greedy dissociated basis.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{transform, GroupFunction};
use crate::groups::{Character, ElementSet, GroupSpec, DEFAULT_ENUMERATION_CAP};
use crate::progression::{Ambient, ProgressionWitness};
use crate::subspace::Subspace;

/// Largest dissociated set whose sign patterns are enumerated exhaustively.
pub const DISSOCIATED_CAP: usize = 14;

#[derive(Debug)]
pub struct BohrDescriptor {
    group: GroupSpec,
    frequencies: Vec<Character>,
    delta: f64,
    members: OnceLock<Vec<usize>>,
}

impl Clone for BohrDescriptor {
    fn clone(&self) -> Self {
        let members = OnceLock::new();
        if let Some(m) = self.members.get() {
            let _ = members.set(m.clone());
        }
        BohrDescriptor { group: self.group, frequencies: self.frequencies.clone(), delta: self.delta, members }
    }
}

impl PartialEq for BohrDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.frequencies == other.frequencies && self.delta == other.delta
    }
}

impl BohrDescriptor {
    /// Drops the principal character and duplicates; keeps canonical order.
    pub fn new(group: GroupSpec, frequencies: impl IntoIterator<Item = Character>, delta: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("Bohr radius must lie in [0, 2], got {delta}")));
        }
        let mut freqs = Vec::new();
        for c in frequencies {
            group.ensure_same(&c.group)?;
            if !c.is_principal() {
                freqs.push(c);
            }
        }
        freqs.sort();
        freqs.dedup();
        Ok(BohrDescriptor { group, frequencies: freqs, delta, members: OnceLock::new() })
    }

    pub fn from_frequencies(group: GroupSpec, frequencies: &[usize], delta: f64) -> Result<Self> {
        let order = group.order();
        if let Some(&bad) = frequencies.iter().find(|&&r| r >= order) {
            return Err(Error::InvalidParameter(format!("frequency {bad} outside {group}")));
        }
        Self::new(group, frequencies.iter().map(|&r| group.character(r)), delta)
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn frequencies(&self) -> &[Character] {
        &self.frequencies
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rank(&self) -> usize {
        self.frequencies.len()
    }

    /// Largest `|γ(x) - 1|` over the frequency set (0 when the set is empty).
    pub fn max_distance(&self, x: usize) -> f64 {
        self.frequencies.iter().map(|c| c.distance(x)).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: usize) -> bool {
        self.frequencies.iter().all(|c| c.distance(x) <= self.delta)
    }

    pub fn materialize(&self) -> Result<ElementSet> {
        self.materialize_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn materialize_with_cap(&self, cap: u64) -> Result<ElementSet> {
        self.group.check_cap(cap)?;
        let members = self
            .members
            .get_or_init(|| (0..self.group.order()).filter(|&x| self.contains(x)).collect());
        ElementSet::new(self.group, members.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "group": self.group.to_string(),
            "frequencies": self.frequencies.iter().map(|c| self.group.element_json(c.frequency)).collect::<Vec<_>>(),
            "delta": self.delta,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let group: GroupSpec = v
            .get("group")
            .and_then(|g| g.as_str())
            .ok_or_else(|| Error::Parse("descriptor needs a \"group\" string".into()))?
            .parse()?;
        let freqs = v
            .get("frequencies")
            .and_then(|f| f.as_array())
            .ok_or_else(|| Error::Parse("descriptor needs a \"frequencies\" array".into()))?
            .iter()
            .map(|f| group.element_from_json(f))
            .collect::<Result<Vec<_>>>()?;
        let delta = v
            .get("delta")
            .and_then(|d| d.as_f64())
            .ok_or_else(|| Error::Parse("descriptor needs a numeric \"delta\"".into()))?;
        Self::from_frequencies(group, &freqs, delta)
    }
}

impl Serialize for BohrDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SizeBound {
    pub actual: usize,
    pub bound: f64,
    pub pass: bool,
}

/// `|Bohr(Γ, δ)| ≥ (δ/2π)^d |G|`.
pub fn size_bound_check(b: &BohrDescriptor) -> Result<SizeBound> {
    let actual = b.materialize()?.len();
    let bound = (b.delta / TAU).powi(b.rank() as i32) * b.group.order() as f64;
    Ok(SizeBound { actual, bound, pass: actual as f64 >= bound })
}

/// `max(1, floor(δ N^{1/d} / 2π))`, the progression length a Bohr set in `Z/N` must contain.
pub fn ap_length_guarantee(b: &BohrDescriptor) -> usize {
    let n = b.group.order() as f64;
    if b.rank() == 0 {
        return b.group.order();
    }
    let g = (b.delta * n.powf(1.0 / b.rank() as f64) / TAU).floor();
    (g as usize).max(1)
}

/// A centred progression `{j·u : |j| ≤ L}` inside a Bohr set of `Z/N`, `N` prime.
///
/// Every step `u` is scored by `m(u) = max_γ |γ(u) - 1|`; since
/// `|γ(ju) - 1| ≤ |j|·|γ(u) - 1|`, the progression with `L = floor(δ/m(u))`
/// lies in the set. The best step wins, ties going to the smallest `u`.
pub fn find_ap_in_bohr(b: &BohrDescriptor) -> Result<ProgressionWitness> {
    if !b.group.is_prime_cyclic() {
        return Err(Error::NotPrimeCyclic(b.group));
    }
    if !(b.delta > 0.0 && b.delta <= 2.0) {
        return Err(Error::InvalidParameter(format!("AP extraction needs 0 < δ ≤ 2, got {}", b.delta)));
    }
    let n = b.group.order();
    let modulus = n as u64;
    if b.rank() == 0 {
        let mut w = ProgressionWitness::new(Ambient::Cyclic { modulus }, 0, 1, n);
        w.containment_verified = true;
        return Ok(w);
    }
    let half = (n - 1) / 2;
    let mut best = (0usize, 1usize);
    for u in 1..n {
        let mut m = 0.0f64;
        for c in &b.frequencies {
            m = m.max(c.distance(u));
            if m > b.delta {
                break;
            }
        }
        if m > b.delta {
            continue;
        }
        let l = ((b.delta / m).floor() as usize).min(half);
        if l > best.0 {
            best = (l, u);
            if l == half {
                break;
            }
        }
    }
    let (mut l, u) = best;
    // rounding in δ/m(u) can overshoot by one term; shrink until every term checks out
    while l > 0 && !(1..=l).all(|j| b.contains(b.group.scale(j as i64, u))) {
        l -= 1;
    }
    let base = -(l as i64) * u as i64;
    let mut w = ProgressionWitness::new(Ambient::Cyclic { modulus }, base, u as i64, 2 * l + 1);
    let ok = w.verify_with(|x| b.contains(x as usize));
    if !ok {
        return Err(Error::Internal("extracted progression left the Bohr set".into()));
    }
    Ok(w)
}

/// `|e^{2πi/p} - 1|`: below this radius a Bohr set of `F_p^n` is an exact annihilator.
pub fn exactness_threshold(prime: u64) -> f64 {
    2.0 * (std::f64::consts::PI / prime as f64).sin()
}

/// The subspace `Γ^⊥`, verified element by element against the Bohr condition.
pub fn find_subspace_in_bohr(b: &BohrDescriptor) -> Result<Subspace> {
    let prime = match b.group {
        GroupSpec::Vector { prime, .. } => prime,
        other => return Err(Error::NotVectorSpace(other)),
    };
    let limit = exactness_threshold(prime);
    if b.delta >= limit {
        return Err(Error::RadiusTooLarge { delta: b.delta, limit });
    }
    let freqs: Vec<usize> = b.frequencies.iter().map(|c| c.frequency).collect();
    let s = Subspace::annihilator(b.group, &freqs)?;
    if !s.elements().into_iter().all(|x| b.contains(x)) {
        return Err(Error::Internal("annihilator element outside the Bohr set".into()));
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralEntry {
    pub frequency: usize,
    pub magnitude: f64,
}

/// `{γ : |f^(γ)| ≥ θ}` with magnitudes, in canonical frequency order.
pub fn large_spectrum(f: &GroupFunction, theta: f64) -> Result<Vec<SpectralEntry>> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("spectrum threshold must be positive, got {theta}")));
    }
    let s = transform(f);
    let tol = 1e-12 * theta.max(1.0);
    Ok(s.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= theta - tol)
        .map(|(r, c)| SpectralEntry { frequency: r, magnitude: c.norm() })
        .collect())
}

/// Witness that a character is a `{-1,0,1}`-combination of the basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpanCertificate {
    pub frequency: usize,
    pub coefficients: Vec<i8>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChangReduction {
    pub group: GroupSpec,
    /// Input frequencies (principal removed), in the greedy visiting order.
    pub spectrum: Vec<usize>,
    /// Greedy dissociated basis `Λ`.
    pub basis: Vec<usize>,
    pub certificates: Vec<SpanCertificate>,
    pub tau: f64,
    pub delta: f64,
    pub reduced_radius: f64,
    /// `C_chang · log(1/τ)`; reported, never enforced.
    pub rank_bound: f64,
    pub reduced: BohrDescriptor,
}

/// Is there no nontrivial `{-1,0,1}` combination of the given characters summing to zero?
/// Enumerates all `3^m` sign patterns.
pub fn is_dissociated(group: GroupSpec, frequencies: &[usize]) -> Result<bool> {
    let m = frequencies.len();
    if m > DISSOCIATED_CAP {
        return Err(Error::DissociativityCap { cap: DISSOCIATED_CAP });
    }
    let total = 3usize.pow(m as u32);
    for code in 1..total {
        let mut rest = code;
        let mut acc = group.zero();
        for &r in frequencies {
            match rest % 3 {
                1 => acc = group.add(acc, r),
                2 => acc = group.sub(acc, r),
                _ => {}
            }
            rest /= 3;
        }
        if acc == group.zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn combine(group: GroupSpec, basis: &[usize], coefficients: &[i8]) -> usize {
    basis.iter().zip(coefficients).fold(group.zero(), |acc, (&r, &c)| match c {
        1 => group.add(acc, r),
        -1 => group.sub(acc, r),
        _ => acc,
    })
}

/// Greedy dissociated basis of `Γ` (visited by decreasing magnitude, ties in
/// canonical order) and the reduced Bohr set `Bohr(Λ, c·δ/|Λ|)`.
///
/// A candidate joins `Λ` exactly when it is not already a `{-1,0,1}`
/// combination of `Λ`; the reachable combinations are tracked as a map from
/// group element to one coefficient vector, which makes both the
/// dissociativity test and the span certificates exact.
pub fn chang_reduce(
    group: GroupSpec,
    spectrum: &[SpectralEntry],
    delta: f64,
    tau: f64,
    radius_factor: f64,
    c_chang: f64,
) -> Result<ChangReduction> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("τ must lie in (0, 1], got {tau}")));
    }
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::InvalidParameter(format!("δ must lie in (0, 2], got {delta}")));
    }
    let order = group.order();
    let mut entries: Vec<SpectralEntry> = spectrum.iter().copied().filter(|e| e.frequency != 0).collect();
    if let Some(bad) = entries.iter().find(|e| e.frequency >= order) {
        return Err(Error::InvalidParameter(format!("frequency {} outside {group}", bad.frequency)));
    }
    entries.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude).then(a.frequency.cmp(&b.frequency)));
    entries.dedup_by_key(|e| e.frequency);

    let mut basis: Vec<usize> = Vec::new();
    let mut reach: BTreeMap<usize, Vec<i8>> = BTreeMap::from([(group.zero(), Vec::new())]);
    let mut pending: Vec<(usize, Vec<i8>)> = Vec::new();
    for e in &entries {
        if let Some(coeffs) = reach.get(&e.frequency) {
            pending.push((e.frequency, coeffs.clone()));
            continue;
        }
        if basis.len() == DISSOCIATED_CAP {
            return Err(Error::DissociativityCap { cap: DISSOCIATED_CAP });
        }
        let r = e.frequency;
        let mut grown = reach.clone();
        for (&s, coeffs) in &reach {
            for (target, sign) in [(group.add(s, r), 1i8), (group.sub(s, r), -1i8)] {
                grown.entry(target).or_insert_with(|| {
                    let mut c = coeffs.clone();
                    c.resize(basis.len(), 0);
                    c.push(sign);
                    c
                });
            }
        }
        basis.push(r);
        pending.push((r, {
            let mut c = vec![0i8; basis.len() - 1];
            c.push(1);
            c
        }));
        reach = grown;
    }
    let certificates = pending
        .into_iter()
        .map(|(frequency, mut coefficients)| {
            coefficients.resize(basis.len(), 0);
            SpanCertificate { frequency, coefficients }
        })
        .collect();
    let reduced_radius = if basis.is_empty() {
        delta
    } else {
        (radius_factor * delta / basis.len() as f64).min(2.0)
    };
    let reduced = BohrDescriptor::from_frequencies(group, &basis, reduced_radius)?;
    Ok(ChangReduction {
        group,
        spectrum: entries.iter().map(|e| e.frequency).collect(),
        basis,
        certificates,
        tau,
        delta,
        reduced_radius,
        rank_bound: c_chang * (1.0 / tau).ln(),
        reduced,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChangVerification {
    pub dissociated: bool,
    pub span_certified: bool,
    pub containment: Option<bool>,
}

impl ChangVerification {
    pub fn all_ok(&self) -> bool {
        self.dissociated && self.span_certified && self.containment.unwrap_or(true)
    }
}

impl ChangReduction {
    /// Independent re-check: exhaustive dissociativity, every certificate
    /// recombined, and (when `check_containment`) `Bohr(Λ, δ/|Λ|) ⊆ Bohr(Γ, δ)`
    /// by materializing both sets.
    pub fn verify(&self, check_containment: bool) -> Result<ChangVerification> {
        let dissociated = is_dissociated(self.group, &self.basis)?;
        let covered: Vec<usize> = self.certificates.iter().map(|c| c.frequency).collect();
        let span_certified = self.spectrum.iter().all(|r| covered.contains(r))
            && self.certificates.iter().all(|c| {
                c.coefficients.len() == self.basis.len()
                    && c.coefficients.iter().all(|&x| (-1..=1).contains(&x))
                    && combine(self.group, &self.basis, &c.coefficients) == c.frequency
            });
        let containment = if check_containment {
            let original = BohrDescriptor::from_frequencies(self.group, &self.spectrum, self.delta)?;
            Some(self.reduced.materialize()?.is_subset_of(&original.materialize()?))
        } else {
            None
        };
        Ok(ChangVerification { dissociated, span_certified, containment })
    }
}
