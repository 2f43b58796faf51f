//! Integer sumsets, doubling statistics, and the model-lemma embedding of a
//! pair of integer sets into `Z/N` with an explicit, exactly chosen `ξ`.

use std::collections::HashMap;

use num_rational::Ratio;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Default limit on materialized sumset work and on verification states.
pub const SUMSET_CAP: u128 = 100_000_000;
pub const VERIFY_CAP: u64 = 10_000_000;
const SAMPLED_TUPLES: usize = 200_000;

pub type Rational = Ratio<i128>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct IntSet(Vec<i64>);

impl IntSet {
    pub fn new(mut elements: Vec<i64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptySet("integer set"));
        }
        elements.sort_unstable();
        elements.dedup();
        Ok(IntSet(elements))
    }

    pub fn range(lo: i64, hi: i64) -> Result<Self> {
        Self::new((lo..=hi).collect())
    }

    pub fn elements(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> i64 {
        self.0[0]
    }

    pub fn max(&self) -> i64 {
        self.0[self.0.len() - 1]
    }

    pub fn contains(&self, x: i64) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn negated(&self) -> IntSet {
        IntSet(self.0.iter().rev().map(|&x| -x).collect())
    }

    pub fn translate(&self, t: i64) -> IntSet {
        IntSet(self.0.iter().map(|&x| x + t).collect())
    }

    pub fn is_subset_of(&self, other: &IntSet) -> bool {
        self.0.iter().all(|&x| other.contains(x))
    }
}

impl<'de> Deserialize<'de> for IntSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<i64>::deserialize(d)?;
        IntSet::new(v).map_err(serde::de::Error::custom)
    }
}

/// `X + Y`, through a bitmap over the sum range when it is small enough and
/// through sorted pairwise sums otherwise.
pub fn sumset(x: &IntSet, y: &IntSet) -> Result<IntSet> {
    let lo = x.min() + y.min();
    let span = (x.max() + y.max() - lo) as u128 + 1;
    if span <= SUMSET_CAP {
        let mut mask = vec![false; span as usize];
        for &a in x.elements() {
            for &b in y.elements() {
                mask[(a + b - lo) as usize] = true;
            }
        }
        let out = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| lo + i as i64).collect();
        return Ok(IntSet(out));
    }
    let pairs = x.len() as u128 * y.len() as u128;
    if pairs > SUMSET_CAP {
        return Err(Error::SizeCap { what: "sumset pairs", size: pairs, cap: SUMSET_CAP });
    }
    IntSet::new(x.elements().iter().flat_map(|&a| y.elements().iter().map(move |&b| a + b)).collect())
}

pub fn difference(x: &IntSet, y: &IntSet) -> Result<IntSet> {
    sumset(x, &y.negated())
}

/// `kX` by repeated doubling.
pub fn multiple(x: &IntSet, k: usize) -> Result<IntSet> {
    if k == 0 {
        return Ok(IntSet(vec![0]));
    }
    let mut acc: Option<IntSet> = None;
    let mut base = x.clone();
    let mut k = k;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => sumset(&a, &base)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = sumset(&base, &base)?;
    }
    Ok(acc.expect("k > 0"))
}

/// `kA - kA + kB - kB`.
pub fn iterated_combination(a: &IntSet, b: &IntSet, k: usize) -> Result<IntSet> {
    combination_of(&[a.clone(), b.clone()], k)
}

/// `Σ_i (kA_i - kA_i)`.
pub fn combination_of(sets: &[IntSet], k: usize) -> Result<IntSet> {
    let mut acc = IntSet(vec![0]);
    for s in sets {
        let ks = multiple(s, k)?;
        acc = sumset(&acc, &difference(&ks, &ks)?)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingStats {
    pub sumset_size: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub k_a: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub k_b: Rational,
    pub k_a_real: f64,
    pub k_b_real: f64,
}

pub fn doubling_stats(a: &IntSet, b: &IntSet) -> Result<DoublingStats> {
    let s = sumset(a, b)?.len() as i128;
    let k_a = Ratio::new(s, a.len() as i128);
    let k_b = Ratio::new(s, b.len() as i128);
    Ok(DoublingStats { sumset_size: s as usize, k_a_real: ratio_f64(&k_a), k_b_real: ratio_f64(&k_b), k_a, k_b })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlunneckeReport {
    pub actual: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub k: Rational,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// `|2A-2A+2B-2B|` against `K^11 |B|` with `K = |A+B| / min(|A|, |B|)`.
pub fn plunnecke_quantities(a: &IntSet, b: &IntSet) -> Result<PlunneckeReport> {
    let actual = iterated_combination(a, b, 2)?.len();
    let s = sumset(a, b)?.len() as i128;
    let k = Ratio::new(s, a.len().min(b.len()) as i128);
    let bound = ratio_f64(&k).powi(11) * b.len() as f64;
    Ok(PlunneckeReport { actual, k, bound, slack: bound - actual as f64, pass: actual as f64 <= bound })
}

pub fn ratio_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    RationalWire::from(*r).serialize(s)
}

/// JSON form of an exact rational.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalWire {
    pub num: i128,
    pub den: i128,
}

impl From<Rational> for RationalWire {
    fn from(r: Rational) -> Self {
        RationalWire { num: *r.numer(), den: *r.denom() }
    }
}

impl TryFrom<RationalWire> for Rational {
    type Error = Error;
    fn try_from(w: RationalWire) -> Result<Rational> {
        if w.den == 0 {
            return Err(Error::Parse("rational with zero denominator".into()));
        }
        Ok(Ratio::new(w.num, w.den))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XiChoice {
    #[serde(serialize_with = "ser_ratio")]
    pub xi: Rational,
    pub xi_real: f64,
    pub modulus: u64,
    pub k: usize,
    pub d_size: usize,
    pub interval_count: usize,
    /// Measure of the union of excluded intervals inside `[0, N]`.
    pub excluded: f64,
    /// Sum of the individual clipped interval lengths; exactly `|D| - 1`.
    #[serde(serialize_with = "ser_ratio")]
    pub excluded_total: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub gap_length: Rational,
}

/// A `ξ ∈ [0, N]` avoiding `(dN + (-1, 1))/t` for every positive `t ∈ D`
/// and `0 ≤ d ≤ t`: the midpoint of the largest gap (earliest on ties).
pub fn choose_xi_for(d: &IntSet, modulus: u64, k: usize) -> Result<XiChoice> {
    if (modulus as u128) < d.len() as u128 {
        return Err(Error::HypothesisViolated(format!(
            "modulus {modulus} is smaller than |D| = {}",
            d.len()
        )));
    }
    let n = modulus as i128;
    // intervals as (lo_num, hi_num, den) with endpoints lo_num/den, hi_num/den
    let mut intervals: Vec<(i128, i128, i128)> = Vec::new();
    let mut total = Ratio::from_integer(0i128);
    for &t in d.elements().iter().filter(|&&t| t > 0) {
        let t = t as i128;
        for dd in 0..=t {
            let lo = (dd * n - 1).max(0);
            let hi = (dd * n + 1).min(t * n);
            intervals.push((lo, hi, t));
        }
        total += Ratio::from_integer(2);
    }
    let n_rat = Ratio::from_integer(n);
    intervals.sort_unstable_by(|a, b| (a.0 * b.2).cmp(&(b.0 * a.2)));
    let mut excluded = 0.0f64;
    let mut best: Option<(Rational, Rational)> = None;
    let mut cursor = Ratio::from_integer(0i128);
    let consider = |lo: Rational, hi: Rational, best: &mut Option<(Rational, Rational)>| {
        if hi > lo && best.as_ref().is_none_or(|(l, h)| hi - lo > *h - *l) {
            *best = Some((lo, hi));
        }
    };
    let mut run: Option<(Rational, Rational)> = None;
    for &(lo_n, hi_n, den) in &intervals {
        let lo = Ratio::new(lo_n, den);
        let hi = Ratio::new(hi_n, den);
        match run {
            Some((rlo, rhi)) if lo < rhi => run = Some((rlo, rhi.max(hi))),
            _ => {
                if let Some((rlo, rhi)) = run {
                    excluded += ratio_f64(&(rhi - rlo));
                    cursor = rhi;
                }
                consider(cursor, lo, &mut best);
                run = Some((lo, hi));
            }
        }
    }
    if let Some((rlo, rhi)) = run {
        excluded += ratio_f64(&(rhi - rlo));
        cursor = rhi;
    }
    consider(cursor, n_rat, &mut best);
    let (glo, ghi) = best.ok_or_else(|| Error::Internal("excluded intervals cover [0, N]".into()))?;
    let xi = (glo + ghi) / Ratio::from_integer(2);
    if total != Ratio::from_integer(d.len() as i128 - 1) || excluded > ratio_f64(&total) + 1e-9 {
        return Err(Error::Internal("excluded measure exceeds |D| - 1".into()));
    }
    Ok(XiChoice {
        xi,
        xi_real: ratio_f64(&xi),
        modulus,
        k,
        d_size: d.len(),
        interval_count: intervals.len(),
        excluded,
        excluded_total: total,
        gap_length: ghi - glo,
    })
}

pub fn choose_xi(a: &IntSet, b: &IntSet, k: usize, modulus: u64) -> Result<XiChoice> {
    check_k(k)?;
    choose_xi_for(&iterated_combination(a, b, k)?, modulus, k)
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("isomorphism order must be at least 2, got {k}")));
    }
    Ok(())
}

/// `floor(ξ a)` exactly.
pub fn floor_mul(xi: &Rational, a: i64) -> i128 {
    (xi.numer() * a as i128).div_euclid(*xi.denom())
}

/// Band index `j ∈ 1..=bands` with `(j-1)/bands ≤ {ξa} < j/bands`.
pub fn band_of(xi: &Rational, a: i64, bands: usize) -> usize {
    let den = *xi.denom();
    let frac_num = (xi.numer() * a as i128).rem_euclid(den);
    (frac_num * bands as i128 / den) as usize + 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationMethod {
    Exhaustive,
    Sampled { samples: usize },
    Skipped,
}

/// Two k-sum tuples whose integer and modular equalities disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub left: Vec<Vec<i64>>,
    pub right: Vec<Vec<i64>>,
    pub left_sum: i64,
    pub right_sum: i64,
    pub left_image: u64,
    pub right_image: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsomorphismCheck {
    pub verified: bool,
    pub method: VerificationMethod,
    /// Equal integer sums always gave equal integer image sums, not just congruent ones.
    pub integer_forward: bool,
    pub states: u64,
    pub counterexample: Option<Counterexample>,
}

impl IsomorphismCheck {
    pub fn probabilistic(&self) -> bool {
        matches!(self.method, VerificationMethod::Sampled { .. })
    }
}

type State = (i64, i128);

/// Checks `Σ x = Σ x'  ⇔  Σ φ(x) ≡ Σ φ(x') (mod N)` over all choices of `k`
/// elements from each set on both sides.
///
/// Tuples are not enumerated one by one: all reachable pairs
/// (integer sum, image sum) are built layer by layer with back-pointers,
/// which is equivalent to the full tuple check and yields explicit witnesses.
/// When the number of pairs exceeds `cap`, random tuples are checked instead.
pub fn verify_k_isomorphism(
    phi: &HashMap<i64, i128>,
    sets: &[IntSet],
    k: usize,
    modulus: u64,
    cap: u64,
    seed: u64,
) -> Result<IsomorphismCheck> {
    if k == 0 || modulus == 0 {
        return Err(Error::InvalidParameter("need k ≥ 1 and N ≥ 1".into()));
    }
    for s in sets {
        if let Some(x) = s.elements().iter().find(|x| !phi.contains_key(x)) {
            return Err(Error::InvalidParameter(format!("map undefined at {x}")));
        }
    }
    let layers_sets: Vec<&IntSet> = sets.iter().flat_map(|s| std::iter::repeat_n(s, k)).collect();
    let mut layers: Vec<HashMap<State, (State, i64)>> = Vec::with_capacity(layers_sets.len());
    let mut frontier: Vec<State> = vec![(0, 0)];
    let mut states = 1u64;
    let mut exhausted = false;
    for set in &layers_sets {
        let mut next: HashMap<State, (State, i64)> = HashMap::new();
        for &(s, f) in &frontier {
            for &x in set.elements() {
                next.entry((s + x, f + phi[&x])).or_insert(((s, f), x));
            }
        }
        states += next.len() as u64;
        if states > cap {
            exhausted = true;
            break;
        }
        frontier = next.keys().copied().collect();
        // back-pointers depend on visiting order
        frontier.sort_unstable();
        layers.push(next);
    }
    if exhausted {
        return sampled_check(phi, &layers_sets, k, modulus, seed);
    }
    let witness = |state: State| -> Vec<Vec<i64>> {
        let mut flat = Vec::with_capacity(layers.len());
        let mut cur = state;
        for layer in layers.iter().rev() {
            let (prev, x) = layer[&cur];
            flat.push(x);
            cur = prev;
        }
        flat.reverse();
        flat.chunks(k).map(<[i64]>::to_vec).collect()
    };
    let last = layers.last().expect("at least one layer");
    let mut final_states: Vec<State> = last.keys().copied().collect();
    final_states.sort_unstable();
    let n = modulus as i128;
    let mut integer_forward = true;
    let mut by_sum: HashMap<i64, State> = HashMap::new();
    let mut by_image: HashMap<u64, State> = HashMap::new();
    let mut counterexample = None;
    for &st in &final_states {
        let image = st.1.rem_euclid(n) as u64;
        if let Some(&other) = by_sum.get(&st.0) {
            if other.1 != st.1 {
                integer_forward = false;
            }
            if other.1.rem_euclid(n) as u64 != image {
                counterexample.get_or_insert((other, st));
            }
            continue;
        }
        if let Some(&other) = by_image.get(&image) {
            counterexample.get_or_insert((other, st));
        }
        by_sum.insert(st.0, st);
        by_image.entry(image).or_insert(st);
    }
    let counterexample = counterexample.map(|(l, r)| Counterexample {
        left: witness(l),
        right: witness(r),
        left_sum: l.0,
        right_sum: r.0,
        left_image: l.1.rem_euclid(n) as u64,
        right_image: r.1.rem_euclid(n) as u64,
    });
    Ok(IsomorphismCheck {
        verified: counterexample.is_none(),
        method: VerificationMethod::Exhaustive,
        integer_forward,
        states,
        counterexample,
    })
}

fn sampled_check(
    phi: &HashMap<i64, i128>,
    layers_sets: &[&IntSet],
    k: usize,
    modulus: u64,
    seed: u64,
) -> Result<IsomorphismCheck> {
    let mut rng = rng_from_seed(seed);
    let n = modulus as i128;
    let mut by_sum: HashMap<i64, (i128, Vec<i64>)> = HashMap::new();
    let mut by_image: HashMap<u64, (i64, Vec<i64>)> = HashMap::new();
    let mut integer_forward = true;
    let mut counterexample = None;
    for _ in 0..SAMPLED_TUPLES {
        let tuple: Vec<i64> = layers_sets.iter().map(|s| s.elements()[rng.gen_range(0..s.len())]).collect();
        let s: i64 = tuple.iter().sum();
        let f: i128 = tuple.iter().map(|x| phi[x]).sum();
        let image = f.rem_euclid(n) as u64;
        let mk = |l: &[i64], r: &[i64], ls, rs, li, ri| Counterexample {
            left: l.chunks(k).map(<[i64]>::to_vec).collect(),
            right: r.chunks(k).map(<[i64]>::to_vec).collect(),
            left_sum: ls,
            right_sum: rs,
            left_image: li,
            right_image: ri,
        };
        if let Some((f0, t0)) = by_sum.get(&s) {
            if *f0 != f {
                integer_forward = false;
            }
            let i0 = f0.rem_euclid(n) as u64;
            if i0 != image && counterexample.is_none() {
                counterexample = Some(mk(t0, &tuple, s, s, i0, image));
            }
            continue;
        }
        if let Some((s0, t0)) = by_image.get(&image) {
            if *s0 != s && counterexample.is_none() {
                counterexample = Some(mk(t0, &tuple, *s0, s, image, image));
            }
        }
        by_image.entry(image).or_insert((s, tuple.clone()));
        by_sum.insert(s, (f, tuple));
    }
    Ok(IsomorphismCheck {
        verified: counterexample.is_none(),
        method: VerificationMethod::Sampled { samples: SAMPLED_TUPLES },
        integer_forward,
        states: 0,
        counterexample,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingCertificate {
    #[serde(serialize_with = "ser_ratio")]
    pub xi: Rational,
    pub modulus: u64,
    pub k: usize,
    /// Chosen band (1-based) of each input set.
    pub bands: Vec<usize>,
    pub band_count: usize,
    /// The retained subsets `A', B', ...`.
    pub subsets: Vec<IntSet>,
    pub input_sizes: Vec<usize>,
    /// `(x, floor(ξx))` for every retained element.
    pub raw_floors: Vec<(i64, i128)>,
    /// `(x, φ(x))` with `φ(x) = floor(ξx) mod N`.
    pub phi: Vec<(i64, u64)>,
    pub verified: bool,
    pub check: IsomorphismCheck,
    pub xi_report: XiChoice,
}

impl EmbeddingCertificate {
    pub fn phi_of(&self, x: i64) -> Option<u64> {
        self.phi.binary_search_by_key(&x, |&(a, _)| a).ok().map(|i| self.phi[i].1)
    }

    pub fn raw_table(&self) -> HashMap<i64, i128> {
        self.raw_floors.iter().copied().collect()
    }

    /// `|A'| ≥ ceil(|A| / mk)` for every set.
    pub fn band_sizes_ok(&self) -> bool {
        self.subsets
            .iter()
            .zip(&self.input_sizes)
            .all(|(s, &n)| s.len() * self.band_count >= n)
    }

    /// Re-derives φ, the bands, and the isomorphism property from `ξ` alone.
    pub fn reverify(&self, cap: u64) -> Result<IsomorphismCheck> {
        let n = self.modulus as i128;
        for s in &self.subsets {
            let band = band_of(&self.xi, s.min(), self.band_count);
            for &x in s.elements() {
                if band_of(&self.xi, x, self.band_count) != band {
                    return Err(Error::Internal(format!("{x} outside its band")));
                }
                if self.phi_of(x) != Some(floor_mul(&self.xi, x).rem_euclid(n) as u64) {
                    return Err(Error::Internal(format!("φ({x}) disagrees with floor(ξx) mod N")));
                }
            }
        }
        let table: HashMap<i64, i128> =
            self.subsets.iter().flat_map(|s| s.elements().iter().map(|&x| (x, floor_mul(&self.xi, x)))).collect();
        verify_k_isomorphism(&table, &self.subsets, self.k, self.modulus, cap, 0)
    }
}

/// The two-set model lemma: `A' + B'` is `k`-isomorphic to a subset of `Z/N`.
pub fn embed_pair(a: &IntSet, b: &IntSet, k: usize, modulus: u64) -> Result<EmbeddingCertificate> {
    embed_many(&[a.clone(), b.clone()], k, modulus, VERIFY_CAP)
}

/// The model lemma for `m` sets, with `mk` fractional-part bands.
pub fn embed_many(sets: &[IntSet], k: usize, modulus: u64, cap: u64) -> Result<EmbeddingCertificate> {
    check_k(k)?;
    if sets.is_empty() {
        return Err(Error::EmptySet("list of sets"));
    }
    let d = combination_of(sets, k)?;
    let xi_report = choose_xi_for(&d, modulus, k)?;
    let xi = xi_report.xi;
    let band_count = sets.len() * k;
    let n = modulus as i128;
    let mut bands = Vec::new();
    let mut subsets = Vec::new();
    for s in sets {
        let mut buckets: Vec<Vec<i64>> = vec![Vec::new(); band_count];
        for &x in s.elements() {
            buckets[band_of(&xi, x, band_count) - 1].push(x);
        }
        let best = (0..band_count).max_by(|&i, &j| buckets[i].len().cmp(&buckets[j].len()).then(j.cmp(&i))).expect("bands");
        bands.push(best + 1);
        subsets.push(IntSet::new(std::mem::take(&mut buckets[best]))?);
    }
    let mut raw: Vec<(i64, i128)> =
        subsets.iter().flat_map(|s| s.elements().iter().map(|&x| (x, floor_mul(&xi, x)))).collect();
    raw.sort_unstable();
    raw.dedup();
    let phi = raw.iter().map(|&(x, f)| (x, f.rem_euclid(n) as u64)).collect();
    let table: HashMap<i64, i128> = raw.iter().copied().collect();
    let check = verify_k_isomorphism(&table, &subsets, k, modulus, cap, 0)?;
    Ok(EmbeddingCertificate {
        xi,
        modulus,
        k,
        bands,
        band_count,
        input_sizes: sets.iter().map(IntSet::len).collect(),
        subsets,
        raw_floors: raw,
        phi,
        verified: check.verified,
        check,
        xi_report,
    })
}
