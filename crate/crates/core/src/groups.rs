//! Finite abelian groups `Z/N` and `F_p^n`, their elements, and their characters.
//!
//! Elements and characters are both addressed by a canonical index in
//! `0..order`. For `Z/N` the index is the residue itself; for `F_p^n` it is
//! the base-`p` number whose digits are the coordinates, most significant
//! first, so ascending index order is lexicographic order on coordinates.
//! Characters use the same indexing through self-duality: the character with
//! frequency `r` sends `x` to `exp(2πi <r,x> / m)` where `m` is `N` or `p`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::primes::is_prime;

/// Default upper bound on the number of elements any operation materializes.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupSpec {
    Cyclic { modulus: u64 },
    Vector { prime: u64, dim: u32 },
}

impl GroupSpec {
    pub fn cyclic(modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidGroup("cyclic modulus must be at least 1".into()));
        }
        if modulus > usize::MAX as u64 {
            return Err(Error::InvalidGroup(format!("modulus {modulus} does not fit in memory indices")));
        }
        Ok(GroupSpec::Cyclic { modulus })
    }

    pub fn vector(prime: u64, dim: u32) -> Result<Self> {
        Self::vector_with_cap(prime, dim, DEFAULT_ENUMERATION_CAP)
    }

    /// `F_p^n` with an explicit bound on `p^n`.
    pub fn vector_with_cap(prime: u64, dim: u32, cap: u64) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::InvalidGroup(format!("{prime} is not prime")));
        }
        if dim == 0 {
            return Err(Error::InvalidGroup("vector dimension must be at least 1".into()));
        }
        let order = (prime as u128).checked_pow(dim).unwrap_or(u128::MAX);
        if order > cap as u128 {
            return Err(Error::CapExceeded { order, cap });
        }
        Ok(GroupSpec::Vector { prime, dim })
    }

    pub fn order(&self) -> usize {
        match *self {
            GroupSpec::Cyclic { modulus } => modulus as usize,
            GroupSpec::Vector { prime, dim } => (prime as usize).pow(dim),
        }
    }

    /// Denominator of character phases: `N` for `Z/N`, `p` for `F_p^n`.
    pub fn phase_modulus(&self) -> u64 {
        match *self {
            GroupSpec::Cyclic { modulus } => modulus,
            GroupSpec::Vector { prime, .. } => prime,
        }
    }

    pub fn is_prime_cyclic(&self) -> bool {
        matches!(*self, GroupSpec::Cyclic { modulus } if is_prime(modulus))
    }

    pub fn check_cap(&self, cap: u64) -> Result<()> {
        let order = self.order() as u128;
        if order > cap as u128 {
            Err(Error::CapExceeded { order, cap })
        } else {
            Ok(())
        }
    }

    pub fn ensure_same(&self, other: &GroupSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GroupMismatch { left: *self, right: *other })
        }
    }

    /// Coordinates of the element (or frequency) with the given index.
    pub fn coords(&self, index: usize) -> Vec<u64> {
        match *self {
            GroupSpec::Cyclic { .. } => vec![index as u64],
            GroupSpec::Vector { prime, dim } => {
                let mut out = vec![0u64; dim as usize];
                let mut rest = index as u64;
                for slot in out.iter_mut().rev() {
                    *slot = rest % prime;
                    rest /= prime;
                }
                out
            }
        }
    }

    /// Canonical index of a coordinate vector, reducing entries first.
    pub fn index_of(&self, coords: &[i64]) -> Result<usize> {
        match *self {
            GroupSpec::Cyclic { modulus } => {
                if coords.len() != 1 {
                    return Err(Error::Parse(format!("expected one coordinate, got {}", coords.len())));
                }
                Ok(coords[0].rem_euclid(modulus as i64) as usize)
            }
            GroupSpec::Vector { prime, dim } => {
                if coords.len() != dim as usize {
                    return Err(Error::Parse(format!("expected {dim} coordinates, got {}", coords.len())));
                }
                Ok(coords
                    .iter()
                    .fold(0u64, |acc, &c| acc * prime + c.rem_euclid(prime as i64) as u64)
                    as usize)
            }
        }
    }

    pub fn zero(&self) -> usize {
        0
    }

    pub fn add(&self, x: usize, y: usize) -> usize {
        match *self {
            GroupSpec::Cyclic { modulus } => {
                let s = x as u64 + y as u64;
                (if s >= modulus { s - modulus } else { s }) as usize
            }
            GroupSpec::Vector { prime: 2, .. } => x ^ y,
            GroupSpec::Vector { prime, .. } => self.digitwise(x, y, |a, b| (a + b) % prime),
        }
    }

    pub fn neg(&self, x: usize) -> usize {
        match *self {
            GroupSpec::Cyclic { modulus } => {
                if x == 0 {
                    0
                } else {
                    (modulus - x as u64) as usize
                }
            }
            GroupSpec::Vector { prime: 2, .. } => x,
            GroupSpec::Vector { prime, .. } => self.digitwise(x, 0, |a, _| (prime - a) % prime),
        }
    }

    pub fn sub(&self, x: usize, y: usize) -> usize {
        self.add(x, self.neg(y))
    }

    /// `k·x` for an integer multiplier `k`.
    pub fn scale(&self, k: i64, x: usize) -> usize {
        match *self {
            GroupSpec::Cyclic { modulus } => {
                let k = k.rem_euclid(modulus as i64) as u128;
                ((k * x as u128) % modulus as u128) as usize
            }
            GroupSpec::Vector { prime, .. } => {
                let k = k.rem_euclid(prime as i64) as u64;
                self.digitwise(x, 0, |a, _| (a * k) % prime)
            }
        }
    }

    fn digitwise(&self, x: usize, y: usize, op: impl Fn(u64, u64) -> u64) -> usize {
        let p = self.phase_modulus();
        let (mut x, mut y) = (x as u64, y as u64);
        let mut place = 1u64;
        let mut out = 0u64;
        let dim = match *self {
            GroupSpec::Vector { dim, .. } => dim,
            GroupSpec::Cyclic { .. } => 1,
        };
        for _ in 0..dim {
            out += op(x % p, y % p) * place;
            x /= p;
            y /= p;
            place *= p;
        }
        out as usize
    }

    /// `<r, x>` reduced into `0..phase_modulus()`.
    pub fn pairing(&self, r: usize, x: usize) -> u64 {
        match *self {
            GroupSpec::Cyclic { modulus } => ((r as u128 * x as u128) % modulus as u128) as u64,
            GroupSpec::Vector { prime: 2, .. } => ((r & x).count_ones() & 1) as u64,
            GroupSpec::Vector { prime, dim } => {
                let (mut r, mut x) = (r as u64, x as u64);
                let mut acc = 0u64;
                for _ in 0..dim {
                    acc += (r % prime) * (x % prime);
                    r /= prime;
                    x /= prime;
                }
                acc % prime
            }
        }
    }

    pub fn element(&self, index: usize) -> GroupElement {
        debug_assert!(index < self.order());
        GroupElement { group: *self, index }
    }

    pub fn character(&self, frequency: usize) -> Character {
        debug_assert!(frequency < self.order());
        Character { group: *self, frequency }
    }

    /// JSON form of an element: an integer for `Z/N`, a coordinate array for `F_p^n`.
    pub fn element_json(&self, index: usize) -> Value {
        match self {
            GroupSpec::Cyclic { .. } => Value::from(index as u64),
            GroupSpec::Vector { .. } => Value::from(self.coords(index)),
        }
    }

    pub fn element_from_json(&self, v: &Value) -> Result<usize> {
        match v {
            Value::Number(n) => {
                let x = n
                    .as_i64()
                    .ok_or_else(|| Error::Parse(format!("element {n} is not an integer")))?;
                self.index_of(&[x])
            }
            Value::Array(items) => {
                let coords = items
                    .iter()
                    .map(|c| c.as_i64().ok_or_else(|| Error::Parse(format!("bad coordinate {c}"))))
                    .collect::<Result<Vec<_>>>()?;
                self.index_of(&coords)
            }
            other => Err(Error::Parse(format!("cannot read a group element from {other}"))),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic { modulus } => write!(f, "zN:{modulus}"),
            GroupSpec::Vector { prime, dim } => write!(f, "vec:{prime}^{dim}"),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unrecognized group literal {s:?} (expected zN:<N> or vec:<p>^<n>)"));
        if let Some(rest) = s.strip_prefix("zN:") {
            let n: u64 = rest.trim().parse().map_err(|_| bad())?;
            GroupSpec::cyclic(n)
        } else if let Some(rest) = s.strip_prefix("vec:") {
            let (p, n) = rest.split_once('^').ok_or_else(bad)?;
            let p: u64 = p.trim().parse().map_err(|_| bad())?;
            let n: u32 = n.trim().parse().map_err(|_| bad())?;
            GroupSpec::vector(p, n)
        } else {
            Err(bad())
        }
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub group: GroupSpec,
    pub index: usize,
}

impl GroupElement {
    pub fn coords(&self) -> Vec<u64> {
        self.group.coords(self.index)
    }

    pub fn add(&self, other: &GroupElement) -> Result<GroupElement> {
        self.group.ensure_same(&other.group)?;
        Ok(self.group.element(self.group.add(self.index, other.index)))
    }

    pub fn neg(&self) -> GroupElement {
        self.group.element(self.group.neg(self.index))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Character {
    pub group: GroupSpec,
    pub frequency: usize,
}

impl Character {
    pub fn is_principal(&self) -> bool {
        self.frequency == 0
    }

    pub fn frequency_coords(&self) -> Vec<u64> {
        self.group.coords(self.frequency)
    }

    /// Phase numerator `k` with `γ(x) = exp(2πi k/m)`.
    pub fn phase(&self, x: usize) -> u64 {
        self.group.pairing(self.frequency, x)
    }

    pub fn value(&self, x: usize) -> Complex64 {
        unit_root(self.phase(x), self.group.phase_modulus())
    }

    pub fn eval(&self, x: &GroupElement) -> Result<Complex64> {
        self.group.ensure_same(&x.group)?;
        Ok(self.value(x.index))
    }

    /// `|γ(x) - 1|` by index, without the group check.
    pub fn distance(&self, x: usize) -> f64 {
        phase_distance(self.phase(x), self.group.phase_modulus())
    }

    /// The conjugate character `-γ`.
    pub fn conj(&self) -> Character {
        self.group.character(self.group.neg(self.frequency))
    }
}

/// `exp(2πi k/m)`, evaluated on the reduced phase so that conjugate pairs are exact mirrors.
pub fn unit_root(k: u64, m: u64) -> Complex64 {
    let k = k % m;
    let (num, sign) = if 2 * k > m { (m - k, -1.0) } else { (k, 1.0) };
    let theta = std::f64::consts::TAU * num as f64 / m as f64;
    Complex64::new(theta.cos(), sign * theta.sin())
}

/// `|exp(2πi k/m) - 1| = 2|sin(πk/m)|`, symmetric in `k ↔ m-k` bit for bit.
pub fn phase_distance(k: u64, m: u64) -> f64 {
    let k = k % m;
    let num = k.min(m - k);
    2.0 * (std::f64::consts::PI * num as f64 / m as f64).sin()
}

pub fn character_distance(c: &Character, x: &GroupElement) -> Result<f64> {
    c.group.ensure_same(&x.group)?;
    Ok(c.distance(x.index))
}

pub fn enumerate_group(g: &GroupSpec) -> Result<Vec<GroupElement>> {
    enumerate_group_with_cap(g, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_group_with_cap(g: &GroupSpec, cap: u64) -> Result<Vec<GroupElement>> {
    g.check_cap(cap)?;
    Ok((0..g.order()).map(|i| g.element(i)).collect())
}

/// All characters, principal first, in canonical frequency order.
pub fn enumerate_dual(g: &GroupSpec) -> Result<Vec<Character>> {
    enumerate_dual_with_cap(g, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_dual_with_cap(g: &GroupSpec, cap: u64) -> Result<Vec<Character>> {
    g.check_cap(cap)?;
    Ok((0..g.order()).map(|r| g.character(r)).collect())
}

/// A subset of a group, kept as sorted distinct canonical indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ElementSet {
    group: GroupSpec,
    indices: Vec<usize>,
}

impl ElementSet {
    pub fn new(group: GroupSpec, mut indices: Vec<usize>) -> Result<Self> {
        let order = group.order();
        if let Some(&bad) = indices.iter().find(|&&i| i >= order) {
            return Err(Error::InvalidParameter(format!("index {bad} outside group {group}")));
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(ElementSet { group, indices })
    }

    pub fn from_mask(group: GroupSpec, mask: &[bool]) -> Self {
        debug_assert_eq!(mask.len(), group.order());
        let indices = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        ElementSet { group, indices }
    }

    /// Residues of integers, for `Z/N`.
    pub fn from_integers(group: GroupSpec, values: &[i64]) -> Result<Self> {
        let idx = values
            .iter()
            .map(|&v| group.index_of(&[v]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, idx)
    }

    pub fn full(group: GroupSpec) -> Self {
        ElementSet { group, indices: (0..group.order()).collect() }
    }

    pub fn group(&self) -> GroupSpec {
        self.group
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn density(&self) -> f64 {
        self.len() as f64 / self.group.order() as f64
    }

    pub fn contains(&self, x: usize) -> bool {
        self.indices.binary_search(&x).is_ok()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.group.order()];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }

    pub fn is_subset_of(&self, other: &ElementSet) -> bool {
        self.group == other.group && self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn negated(&self) -> ElementSet {
        let g = self.group;
        let idx = self.indices.iter().map(|&i| g.neg(i)).collect();
        ElementSet::new(g, idx).expect("negation stays in the group")
    }

    pub fn translate(&self, t: usize) -> ElementSet {
        let g = self.group;
        let idx = self.indices.iter().map(|&i| g.add(i, t)).collect();
        ElementSet::new(g, idx).expect("translation stays in the group")
    }

    /// Exact sumset `X + Y` inside the group.
    pub fn sumset(&self, other: &ElementSet) -> Result<ElementSet> {
        self.group.ensure_same(&other.group)?;
        let g = self.group;
        let mut mask = vec![false; g.order()];
        for &x in &self.indices {
            for &y in &other.indices {
                mask[g.add(x, y)] = true;
            }
        }
        Ok(ElementSet::from_mask(g, &mask))
    }

    pub fn difference_set(&self, other: &ElementSet) -> Result<ElementSet> {
        self.sumset(&other.negated())
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "group": self.group.to_string(),
            "support": self.indices.iter().map(|&i| self.group.element_json(i)).collect::<Vec<_>>(),
        })
    }

    /// Reads `{group, support}` or, given a default group, a bare array.
    pub fn from_json(v: &Value, default_group: Option<GroupSpec>) -> Result<ElementSet> {
        match v {
            Value::Object(map) => {
                let group: GroupSpec = map
                    .get("group")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Parse("set object needs a \"group\" string".into()))?
                    .parse()?;
                let support = map
                    .get("support")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("set object needs a \"support\" array".into()))?;
                let idx = support
                    .iter()
                    .map(|e| group.element_from_json(e))
                    .collect::<Result<Vec<_>>>()?;
                ElementSet::new(group, idx)
            }
            Value::Array(items) => {
                let group = default_group
                    .ok_or_else(|| Error::Parse("bare element arrays need an explicit group".into()))?;
                let idx = items
                    .iter()
                    .map(|e| group.element_from_json(e))
                    .collect::<Result<Vec<_>>>()?;
                ElementSet::new(group, idx)
            }
            other => Err(Error::Parse(format!("cannot read a set from {other}"))),
        }
    }
}

impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}
