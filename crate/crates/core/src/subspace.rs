//! Linear algebra over `F_p` for subspaces of `F_p^n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{ElementSet, GroupSpec};

fn inv_mod(a: u64, p: u64) -> u64 {
    // p is prime, so a^(p-2) is the inverse
    let mut base = a % p;
    let mut exp = p - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Reduced row echelon form in place; returns pivot columns.
fn rref(rows: &mut Vec<Vec<u64>>, p: u64) -> Vec<usize> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows.len()).find(|&i| rows[i][c] % p != 0) else {
            continue;
        };
        rows.swap(r, pivot);
        let inv = inv_mod(rows[r][c], p);
        for v in rows[r].iter_mut() {
            *v = *v * inv % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let factor = rows[i][c];
                for j in 0..cols {
                    rows[i][j] = (rows[i][j] + p * p - factor * rows[r][j] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

fn vector_params(group: GroupSpec) -> Result<(u64, usize)> {
    match group {
        GroupSpec::Vector { prime, dim } => Ok((prime, dim as usize)),
        other => Err(Error::NotVectorSpace(other)),
    }
}

/// A linear subspace of `F_p^n` given by a basis in reduced row echelon form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subspace {
    pub group: GroupSpec,
    pub basis: Vec<usize>,
}

impl Subspace {
    /// Span of arbitrary generators.
    pub fn span_of(group: GroupSpec, generators: &[usize]) -> Result<Self> {
        let (p, _) = vector_params(group)?;
        let mut rows: Vec<Vec<u64>> = generators.iter().map(|&g| group.coords(g)).collect();
        rref(&mut rows, p);
        let basis = rows
            .iter()
            .map(|r| group.index_of(&r.iter().map(|&v| v as i64).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Subspace { group, basis })
    }

    /// `{x : <r, x> = 0 for every r in frequencies}`.
    pub fn annihilator(group: GroupSpec, frequencies: &[usize]) -> Result<Self> {
        let (p, n) = vector_params(group)?;
        let mut rows: Vec<Vec<u64>> = frequencies.iter().map(|&r| group.coords(r)).collect();
        let pivots = rref(&mut rows, p);
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        let mut kernel = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![0i64; n];
            v[f] = 1;
            for (row, &pc) in rows.iter().zip(&pivots) {
                v[pc] = ((p - row[f]) % p) as i64;
            }
            kernel.push(group.index_of(&v)?);
        }
        Self::span_of(group, &kernel)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn size(&self) -> usize {
        (self.group.phase_modulus() as usize).pow(self.dim() as u32)
    }

    pub fn codim(&self) -> usize {
        vector_params(self.group).map(|(_, n)| n).unwrap_or(0) - self.dim()
    }

    /// All elements of the span, in the order of their coefficient vectors.
    pub fn elements(&self) -> Vec<usize> {
        let g = self.group;
        let p = g.phase_modulus() as usize;
        let mut out = vec![0usize];
        for &b in &self.basis {
            let mut next = Vec::with_capacity(out.len() * p);
            for c in 0..p {
                let cb = g.scale(c as i64, b);
                next.extend(out.iter().map(|&x| g.add(x, cb)));
            }
            out = next;
        }
        out
    }

    pub fn to_set(&self) -> ElementSet {
        ElementSet::new(self.group, self.elements()).expect("span elements lie in the group")
    }

    pub fn contains(&self, x: usize) -> bool {
        let mut gens = self.basis.clone();
        gens.push(x);
        Subspace::span_of(self.group, &gens).map(|s| s.dim() == self.dim()).unwrap_or(false)
    }

    /// A subspace of `self` spanned by the first `dim` basis vectors.
    pub fn truncated(&self, dim: usize) -> Subspace {
        Subspace { group: self.group, basis: self.basis[..dim.min(self.dim())].to_vec() }
    }
}

/// Dimension of the span of the given vectors.
pub fn rank(group: GroupSpec, vectors: &[usize]) -> Result<usize> {
    Ok(Subspace::span_of(group, vectors)?.dim())
}
