use serde::Serialize;

use crate::groups::{ElementSet, GroupSpec};
use crate::subspace::Subspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ambient {
    Integers,
    Cyclic { modulus: u64 },
}

/// `{base + j·step : 0 ≤ j < length}`, in `Z` or reduced into `Z/N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProgressionWitness {
    pub ambient: Ambient,
    pub base: i64,
    pub step: i64,
    pub length: usize,
    pub containment_verified: bool,
}

impl ProgressionWitness {
    pub fn new(ambient: Ambient, base: i64, step: i64, length: usize) -> Self {
        let (base, step) = match ambient {
            Ambient::Integers => (base, step),
            Ambient::Cyclic { modulus } => {
                let m = modulus as i64;
                (base.rem_euclid(m), step.rem_euclid(m))
            }
        };
        ProgressionWitness { ambient, base, step, length, containment_verified: false }
    }

    pub fn elements(&self) -> Vec<i64> {
        (0..self.length as i64)
            .map(|j| {
                let v = self.base as i128 + j as i128 * self.step as i128;
                match self.ambient {
                    Ambient::Integers => v as i64,
                    Ambient::Cyclic { modulus } => v.rem_euclid(modulus as i128) as i64,
                }
            })
            .collect()
    }

    /// Checks membership of every element and records the outcome.
    pub fn verify_with(&mut self, contains: impl Fn(i64) -> bool) -> bool {
        self.containment_verified = self.elements().into_iter().all(contains);
        self.containment_verified
    }
}

/// `base + V` for a subspace `V` of `F_p^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubspaceWitness {
    pub group: GroupSpec,
    pub base: usize,
    pub basis: Vec<usize>,
    pub dim: usize,
    pub containment_verified: bool,
}

impl SubspaceWitness {
    pub fn new(base: usize, subspace: &Subspace) -> Self {
        SubspaceWitness {
            group: subspace.group,
            base,
            basis: subspace.basis.clone(),
            dim: subspace.dim(),
            containment_verified: false,
        }
    }

    pub fn elements(&self) -> Vec<usize> {
        let s = Subspace { group: self.group, basis: self.basis.clone() };
        s.elements().into_iter().map(|v| self.group.add(self.base, v)).collect()
    }

    pub fn verify_in(&mut self, set: &ElementSet) -> bool {
        self.containment_verified = set.group() == self.group && self.elements().into_iter().all(|x| set.contains(x));
        self.containment_verified
    }
}
