use std::collections::HashMap;

use serde::Serialize;

use super::bootstrap::doubling;
use super::{averaging_scan, centred_offsets, exp_cap, floor_p, BootstrapRun, ConstantsConfig, XSource};
use crate::bohr::find_ap_in_bohr;
use crate::error::{Error, Result};
use crate::freiman::{doubling_stats, embed_pair, iterated_combination, sumset, EmbeddingCertificate, IntSet};
use crate::groups::{ElementSet, GroupSpec};
use crate::pipelines::bootstrap_strong_lp;
use crate::primes::least_prime_at_least;
use crate::progression::{Ambient, ProgressionWitness};

#[derive(Clone, Debug, Serialize)]
pub struct SmallDoublingReport {
    pub witness: ProgressionWitness,
    /// Whether `A` and `B` were exchanged so that `K_B ≤ K_A`.
    pub swapped: bool,
    pub k_a: f64,
    pub k_b: f64,
    pub d_size: usize,
    pub modulus: u64,
    pub embedding: EmbeddingCertificate,
    /// Translations applied to `A'` and `B'` so both contain 0.
    pub shifts: (i64, i64),
    pub image_k_a: f64,
    pub image_k_b: f64,
    pub epsilon: f64,
    pub p: f64,
    pub length_cap: usize,
    pub bootstrap: BootstrapRun,
    pub bohr_ap_length: usize,
    /// `min(bohr_ap_length, length_cap)`, the length first scanned for.
    pub first_length: usize,
    pub shrinks: usize,
    pub constants: ConstantsConfig,
    pub seed: u64,
}

/// Progression in `A + B` for integer sets of small doubling, through the
/// model lemma into `Z/N` and the Bohr set of the bootstrap.
pub fn find_progression_small_doubling(
    a: &IntSet,
    b: &IntSet,
    seed: u64,
    cfg: &ConstantsConfig,
) -> Result<SmallDoublingReport> {
    cfg.validate()?;
    let stats = doubling_stats(a, b)?;
    let swapped = stats.k_b > stats.k_a;
    let (a, b) = if swapped { (b, a) } else { (a, b) };
    let (k_a, k_b) = if swapped { (stats.k_b_real, stats.k_a_real) } else { (stats.k_a_real, stats.k_b_real) };

    let d = iterated_combination(a, b, 2)?;
    let modulus = least_prime_at_least(d.len() as u64 + 1);
    let embedding = embed_pair(a, b, 2, modulus)?;
    if !embedding.verified {
        return Err(Error::VerificationFailed("model embedding failed its isomorphism check".into()));
    }
    let (a1, b1) = (&embedding.subsets[0], &embedding.subsets[1]);
    let shifts = (a1.min(), b1.min());
    let g = GroupSpec::cyclic(modulus)?;
    let phi = |x: i64| embedding.phi_of(x).expect("retained element");
    let (phi_a0, phi_b0) = (phi(shifts.0), phi(shifts.1));
    // images of A' - a0 and B' - b0 under φ translated to fix 0
    let image = |x: i64, base: u64| ((phi(x) + modulus - base) % modulus) as usize;
    let ia = ElementSet::new(g, a1.elements().iter().map(|&x| image(x, phi_a0)).collect())?;
    let ib = ElementSet::new(g, b1.elements().iter().map(|&x| image(x, phi_b0)).collect())?;
    // ψ^{-1}: image of (a - a0) + (b - b0) back to the integer a + b
    let mut inverse: HashMap<usize, i64> = HashMap::new();
    for &x in a1.elements() {
        for &y in b1.elements() {
            let key = g.add(image(x, phi_a0), image(y, phi_b0));
            if let Some(&prev) = inverse.get(&key) {
                if prev != x + y {
                    return Err(Error::Internal("ψ is not injective on A' + B'".into()));
                }
            }
            inverse.insert(key, x + y);
        }
    }

    let (image_k_a, image_k_b, image_sum) = doubling(&ia, &ib)?;
    let epsilon = (cfg.c_eps / (std::f64::consts::E * image_k_b.sqrt())).min(1.0 / image_k_b.sqrt());
    let p = floor_p(cfg.c_p * ((modulus as f64).ln() / (image_k_b * (2.0 * image_k_a).ln().powi(3))).sqrt());
    let length_cap = exp_cap(p);
    let integer_sumset = sumset(a, b)?;

    // with the exact almost-period set the Bohr set does not depend on the
    // seed, so a failed scan goes straight to halving the progression
    let bootstrap = bootstrap_strong_lp(&ia, &ib, p, epsilon, XSource::Oracle, seed, cfg)?;
    let ap = find_ap_in_bohr(&bootstrap.periodicity.bohr)?;
    let bohr_ap_length = ap.length;
    let mut m = ap.length.min(length_cap);
    let first_length = m;
    let mut shrinks = 0;
    let found = loop {
        let offsets = centred_offsets(g, ap.step as usize, m);
        if let Some(x) = averaging_scan(&image_sum, &offsets) {
            break (x, offsets);
        }
        if m == 1 {
            return Err(Error::NoProgressionFound { attempts: shrinks + 1 });
        }
        m = (m / 2).max(1);
        shrinks += 1;
    };
    let (x, offsets) = found;
    let lifted: Vec<i64> = offsets
        .iter()
        .map(|&t| inverse.get(&g.add(x, t)).copied().ok_or_else(|| Error::Internal("term outside ψ(A' + B')".into())))
        .collect::<Result<_>>()?;
    let (base, step) = as_progression(&lifted)?;
    let mut witness = ProgressionWitness::new(Ambient::Integers, base, step, lifted.len());
    if !witness.verify_with(|v| integer_sumset.contains(v)) {
        return Err(Error::Internal("pulled-back progression is not inside A + B".into()));
    }
    Ok(SmallDoublingReport {
        witness,
        swapped,
        k_a,
        k_b,
        d_size: d.len(),
        modulus,
        embedding,
        shifts,
        image_k_a,
        image_k_b,
        epsilon,
        p,
        length_cap,
        bootstrap,
        bohr_ap_length,
        first_length,
        shrinks,
        constants: *cfg,
        seed,
    })
}

/// Base and positive step of a sequence of integers that must be an arithmetic progression.
fn as_progression(terms: &[i64]) -> Result<(i64, i64)> {
    if terms.len() == 1 {
        return Ok((terms[0], 1));
    }
    let step = terms[1] - terms[0];
    if step == 0 || terms.windows(2).any(|w| w[1] - w[0] != step) {
        return Err(Error::Internal("pull-back of a progression is not a progression".into()));
    }
    Ok(if step < 0 { (terms[terms.len() - 1], -step) } else { (terms[0], step) })
}
