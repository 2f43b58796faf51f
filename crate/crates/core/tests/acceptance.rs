use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use sumsetlab::bohr::{ap_length_guarantee, find_ap_in_bohr, size_bound_check, BohrDescriptor};
use sumsetlab::fourier::{
    convolve_with, indicator_convolution, inverse_with, spectral_l1_norm, transform_with, FourierMode, GroupFunction,
};
use sumsetlab::freiman::{combination_of, embed_pair, IntSet, VerificationMethod};
use sumsetlab::groups::{ElementSet, GroupSpec};
use sumsetlab::pipelines::*;
use sumsetlab::primes::{is_prime, least_prime_at_least};
use sumsetlab::rng::{derive_seed, rng_from_seed, Rng as ChaCha};
use sumsetlab::sampling::{fourier_sample, measure_failure_rate, SamplingTask};
use sumsetlab::subspace::Subspace;

const IDENTITY_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_function(g: GroupSpec, rng: &mut ChaCha) -> GroupFunction {
    let values = (0..g.order()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    GroupFunction::new(g, values).unwrap()
}

fn random_subset(g: GroupSpec, size: usize, rng: &mut ChaCha) -> ElementSet {
    let mut idx: Vec<usize> = (0..g.order()).collect();
    idx.shuffle(rng);
    ElementSet::new(g, idx[..size.max(1)].to_vec()).unwrap()
}

fn max_gap(x: &[Complex64], y: &[Complex64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn test_groups() -> Vec<GroupSpec> {
    let mut gs: Vec<GroupSpec> = (2..=64).chain([97, 101, 128, 199, 4096]).map(|n| GroupSpec::cyclic(n).unwrap()).collect();
    gs.extend((1..=10).map(|n| GroupSpec::vector(2, n).unwrap()));
    gs
}

/// Sumset by listing every pair, independent of the library's bitmap routines.
fn naive_sumset(g: GroupSpec, a: &[usize], b: &[usize]) -> HashSet<usize> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| g.add(x, y))).collect()
}

fn naive_integer_sumset(a: &[i64], b: &[i64]) -> HashSet<i64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x + y)).collect()
}

fn fourier_identities() -> Outcome {
    let start = Instant::now();
    let groups = test_groups();
    let mut rng = rng_from_seed(101);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let g = groups[i % groups.len()];
        let f = random_function(g, &mut rng);
        let h = random_function(g, &mut rng);
        let fh = transform_with(&f, FourierMode::Fast);
        // Parseval: E|f|^2 = Σ|f^|^2
        let energy: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / g.order() as f64;
        let spectral: f64 = fh.coeffs().iter().map(|v| v.norm_sqr()).sum();
        worst = worst.max((energy - spectral).abs());
        let back = inverse_with(&fh, FourierMode::Fast);
        worst = worst.max(max_gap(back.values(), f.values()));
        // (f*h)^ = f^ h^, with the convolution done by direct summation
        let conv = convolve_with(&f, &h, FourierMode::Direct).unwrap();
        let lhs = transform_with(&conv, FourierMode::Fast);
        let hh = transform_with(&h, FourierMode::Fast);
        let rhs: Vec<Complex64> = fh.coeffs().iter().zip(hh.coeffs()).map(|(x, y)| x * y).collect();
        worst = worst.max(max_gap(lhs.coeffs(), &rhs));
        if g.order() <= 256 {
            let direct = transform_with(&f, FourierMode::Direct);
            worst = worst.max(max_gap(direct.coeffs(), fh.coeffs()));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= IDENTITY_TOL && elapsed < Duration::from_secs(60),
        format!("500 functions, max deviation {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn spectral_bound() -> Outcome {
    let groups = test_groups();
    let mut rng = rng_from_seed(202);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = 0;
    for i in 0..500 {
        let g = groups[(i * 7) % groups.len()];
        let n = g.order();
        let a = random_subset(g, rng.gen_range(1..=n), &mut rng);
        let b = random_subset(g, rng.gen_range(1..=n), &mut rng);
        let f = convolve_with(&GroupFunction::indicator(&a), &GroupFunction::indicator(&b), FourierMode::Direct).unwrap();
        let l1 = spectral_l1_norm(&transform_with(&f, FourierMode::Fast));
        let excess = l1 - (a.density() * b.density()).sqrt();
        worst_excess = worst_excess.max(excess);
        if excess > IDENTITY_TOL {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("500 pairs, {failures} violations, max ‖f^‖₁ - √(αβ) = {worst_excess:.2e}"))
}

fn bohr_size_bound() -> Outcome {
    let mut rng = rng_from_seed(303);
    let mut failures = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..1000 {
        let g = if rng.gen_bool(0.7) {
            GroupSpec::cyclic(rng.gen_range(2..=4096)).unwrap()
        } else {
            let prime = [2u64, 3, 5, 7][rng.gen_range(0..4)];
            let max_dim = (4096f64.ln() / (prime as f64).ln()).floor() as u32;
            GroupSpec::vector(prime, rng.gen_range(1..=max_dim)).unwrap()
        };
        let d = rng.gen_range(0..=6);
        let freqs: Vec<usize> = (0..d).map(|_| rng.gen_range(0..g.order())).collect();
        let delta = 2.0 * (1.0 - rng.gen::<f64>());
        let b = BohrDescriptor::from_frequencies(g, &freqs, delta).unwrap();
        let sb = size_bound_check(&b).unwrap();
        // recount by testing every element against every character
        let count = (0..g.order()).filter(|&x| b.frequencies().iter().all(|c| c.distance(x) <= delta + 1e-12)).count();
        if !sb.pass || count != sb.actual {
            failures += 1;
        }
        tightest = tightest.min(sb.actual as f64 / sb.bound.max(f64::MIN_POSITIVE));
    }
    outcome(failures == 0, format!("1000 descriptors, {failures} failures, min |B|/bound = {tightest:.3}"))
}

fn ap_in_bohr() -> Outcome {
    let mut rng = rng_from_seed(404);
    let primes: Vec<u64> = (3..=5000).filter(|&n| is_prime(n)).collect();
    let mut failures = 0;
    let mut total_len = 0usize;
    for _ in 0..200 {
        let n = *primes.choose(&mut rng).unwrap();
        let g = GroupSpec::cyclic(n).unwrap();
        let d = rng.gen_range(1..=6);
        let freqs: Vec<usize> = (0..d).map(|_| rng.gen_range(1..n as usize)).collect();
        let delta = 2.0 * (1.0 - rng.gen::<f64>());
        let b = BohrDescriptor::from_frequencies(g, &freqs, delta).unwrap();
        let w = find_ap_in_bohr(&b).unwrap();
        let inside = w.elements().iter().all(|&x| b.frequencies().iter().all(|c| c.distance(x as usize) <= delta + 1e-12));
        let rank = b.rank().max(1) as f64;
        let guarantee = ((delta * (n as f64).powf(1.0 / rank) / std::f64::consts::TAU).floor() as usize).max(1);
        let distinct = w.elements().iter().collect::<HashSet<_>>().len() == w.length;
        if !inside || !distinct || w.length < guarantee || guarantee != ap_length_guarantee(&b) {
            failures += 1;
        }
        total_len += w.length;
    }
    outcome(failures == 0, format!("200 descriptors, {failures} failures, mean length {:.1}", total_len as f64 / 200.0))
}

fn sampling_failure_rate() -> Outcome {
    let start = Instant::now();
    let cfg = ConstantsConfig::default();
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for (n, seed) in [(64u64, 11u64), (101, 12)] {
        let g = GroupSpec::cyclic(n).unwrap();
        let mut rng = rng_from_seed(seed);
        let a = random_subset(g, n as usize / 2, &mut rng);
        let b = random_subset(g, n as usize / 2, &mut rng);
        let f = indicator_convolution(&a, &b).unwrap();
        for p in [2.0, 4.0] {
            for epsilon in [0.25, 0.4] {
                let task = SamplingTask::Fourier { f: f.clone(), p, epsilon };
                let r = measure_failure_rate(&task, 500, derive_seed(seed, p as u64), cfg.c_sample).unwrap();
                worst = worst.max(r.failure_rate);
                lines.push(format!("Z/{n} p={p} ε={epsilon}: {:.3}", r.failure_rate));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.05 && elapsed < Duration::from_secs(120),
        format!("C_sample={}, worst failure rate {worst:.3} over 8 instances, {:.1}s", cfg.c_sample, elapsed.as_secs_f64()),
    )
}

fn almost_period_pipeline() -> Outcome {
    let g = GroupSpec::cyclic(199).unwrap();
    let cfg = ConstantsConfig::default();
    let mut passes = 0;
    let mut escapes = 0;
    let mut recheck_gap = 0.0f64;
    for run in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(600, run));
        let a = random_subset(g, 100, &mut rng);
        let b = random_subset(g, 100, &mut rng);
        let f = indicator_convolution(&a, &b).unwrap();
        let r = almost_period_bohr(&f, 2.0, 0.4, run, &cfg).unwrap();
        recheck_gap = recheck_gap.max((r.periodicity.recompute_max_distance(&f).unwrap() - r.periodicity.max_distance).abs());
        if r.periodicity.pass {
            passes += 1;
            let fd = convolve_with(&GroupFunction::indicator(&a), &GroupFunction::indicator(&b), FourierMode::Direct).unwrap();
            let truth = brute_force_almost_periods(&fd, 2.0, 0.4, ReferenceNorm::SpectralL1).unwrap();
            if !r.periodicity.bohr.materialize().unwrap().is_subset_of(&truth) {
                escapes += 1;
            }
        }
    }
    outcome(
        passes >= 90 && escapes == 0 && recheck_gap <= IDENTITY_TOL,
        format!("{passes}/100 pass, {escapes} Bohr sets outside the true almost-period set, recheck gap {recheck_gap:.1e}"),
    )
}

fn model_lemma() -> Outcome {
    let mut rng = rng_from_seed(707);
    let mut failures = 0;
    for _ in 0..100 {
        let draw = |rng: &mut ChaCha| {
            let size = rng.gen_range(1..=10);
            IntSet::new((0..size).map(|_| rng.gen_range(-60..=60)).collect()).unwrap()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let d = combination_of(&[a.clone(), b.clone()], 2).unwrap();
        let n = least_prime_at_least(d.len() as u64);
        let cert = embed_pair(&a, &b, 2, n).unwrap();
        let (a1, b1) = (&cert.subsets[0], &cert.subsets[1]);
        let band_ok = 4 * a1.len() >= a.len() && 4 * b1.len() >= b.len() && cert.band_sizes_ok();
        // ψ(a + b) = φ(a) + φ(b) must be well defined and injective on A' + B'
        let mut iso = true;
        let pairs: Vec<(i64, u64)> = a1
            .elements()
            .iter()
            .flat_map(|&x| b1.elements().iter().map(move |&y| (x, y)))
            .map(|(x, y)| (x + y, (cert.phi_of(x).unwrap() + cert.phi_of(y).unwrap()) % n))
            .collect();
        for (i, &(s, t)) in pairs.iter().enumerate() {
            for &(s2, t2) in &pairs[i + 1..] {
                if (s == s2) != (t == t2) {
                    iso = false;
                }
            }
        }
        let exhaustive = matches!(cert.check.method, VerificationMethod::Exhaustive);
        if !(band_ok && iso && cert.verified && exhaustive) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("100 instances, {failures} failures"))
}

fn dense_progressions() -> Outcome {
    let cfg = ConstantsConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [50u64, 100, 200] {
        let mut found = 0;
        let mut bad = 0;
        let mut lengths = Vec::new();
        for run in 0..50u64 {
            let mut rng = rng_from_seed(derive_seed(800 + n, run));
            let pick = |rng: &mut ChaCha| {
                let density = rng.gen_range(0.4..0.9);
                let mut v: Vec<i64> = (1..=n as i64).collect();
                v.shuffle(rng);
                v.truncate(((density * n as f64).ceil() as usize).max(1));
                IntSet::new(v).unwrap()
            };
            let a = pick(&mut rng);
            let b = pick(&mut rng);
            let Ok(r) = find_progression_dense(&a, &b, n, run, &cfg) else { continue };
            let sum = naive_integer_sumset(a.elements(), b.elements());
            let members = r.witness.elements().iter().all(|v| sum.contains(v));
            let mut all: Vec<i64> = sum.into_iter().collect();
            all.sort_unstable();
            let oracle = longest_ap_integers(&all).unwrap();
            if r.witness.containment_verified && members && r.witness.length <= oracle.length {
                found += 1;
                lengths.push(r.witness.length);
            } else {
                bad += 1;
            }
        }
        ok &= found >= 45 && bad == 0;
        lines.push(format!("N={n}: {found}/50, max length {}", lengths.iter().max().unwrap_or(&0)));
    }
    outcome(ok, lines.join("; "))
}

fn bootstrap_runs() -> Outcome {
    let g = GroupSpec::cyclic(101).unwrap();
    let cfg = ConstantsConfig::default();
    let mut passes = 0;
    let mut cert_failures = 0;
    for run in 0..50u64 {
        let mut rng = rng_from_seed(derive_seed(900, run));
        let a = random_subset(g, 40, &mut rng);
        let k_b = a.sumset(&a).unwrap().len() as f64 / a.len() as f64;
        let r = bootstrap_strong_lp(&a, &a, 2.0, 1.0 / k_b.sqrt(), XSource::Oracle, run, &cfg).unwrap();
        let f = sumsetlab::fourier::convolve(&GroupFunction::measure(&a).unwrap(), &GroupFunction::indicator(&a)).unwrap();
        let recheck = r.periodicity.recompute_max_distance(&f).unwrap();
        let independent_certs = r.chang.verify(true).unwrap();
        if !(r.chang_check.all_ok() && independent_certs.all_ok()) {
            cert_failures += 1;
        }
        if r.periodicity.pass && recheck <= r.periodicity.threshold + 1e-12 {
            passes += 1;
        }
    }
    outcome(
        cert_failures == 0 && passes >= 45,
        format!("{passes}/50 pass the L^p inequality, {cert_failures} certificate failures"),
    )
}

fn small_doubling() -> Outcome {
    let cfg = ConstantsConfig::default();
    let mut found = 0;
    let mut bad = 0;
    let mut max_len = 0;
    for run in 0..50u64 {
        let mut rng = rng_from_seed(derive_seed(1000, run));
        // 30 points of [0, 60) keep |A + A| ≤ 119 < 4|A|
        let mut v: Vec<i64> = (0..60).collect();
        v.shuffle(&mut rng);
        v.truncate(30);
        let a = IntSet::new(v).unwrap();
        let sum = naive_integer_sumset(a.elements(), a.elements());
        assert!(sum.len() as f64 <= 4.0 * 30.0);
        match find_progression_small_doubling(&a, &a, run, &cfg) {
            Ok(r) => {
                if r.witness.containment_verified && r.witness.elements().iter().all(|v| sum.contains(v)) {
                    found += 1;
                    max_len = max_len.max(r.witness.length);
                } else {
                    bad += 1;
                }
            }
            Err(_) => {}
        }
    }
    outcome(found >= 40 && bad == 0, format!("{found}/50 verified witnesses, {bad} bad, max length {max_len}"))
}

fn bogolyubov() -> Outcome {
    let cfg = ConstantsConfig::default();
    let mut false_containments = 0;
    let mut subspace_escapes = 0;
    let mut runs = 0;
    for run in 0..25u64 {
        let g = GroupSpec::cyclic(101).unwrap();
        let mut rng = rng_from_seed(derive_seed(1100, run));
        let a = random_subset(g, 45, &mut rng);
        let r = bogolyubov_bohr(&a, run, &cfg).unwrap();
        let diff = naive_sumset(g, a.indices(), a.negated().indices());
        let diff: Vec<usize> = diff.into_iter().collect();
        let target = naive_sumset(g, &diff, &diff);
        let t = r.bootstrap.periodicity.bohr.materialize().unwrap();
        false_containments += t.indices().iter().filter(|x| !target.contains(x)).count();
        runs += 1;
    }
    for run in 0..25u64 {
        let g = GroupSpec::vector(2, 8).unwrap();
        let mut rng = rng_from_seed(derive_seed(1200, run));
        let mut gens = Vec::new();
        let mut sub = Subspace::span_of(g, &[]).unwrap();
        while sub.dim() < 5 {
            gens.push(rng.gen_range(1..256));
            sub = Subspace::span_of(g, &gens).unwrap();
        }
        let a = sub.to_set();
        let r = bogolyubov_bohr(&a, run, &cfg).unwrap();
        let t = r.bootstrap.periodicity.bohr.materialize().unwrap();
        let diff: Vec<usize> = naive_sumset(g, a.indices(), a.negated().indices()).into_iter().collect();
        let target = naive_sumset(g, &diff, &diff);
        false_containments += t.indices().iter().filter(|x| !target.contains(x)).count();
        subspace_escapes += t.indices().iter().filter(|&&x| !a.contains(x)).count();
        runs += 1;
    }
    outcome(
        false_containments == 0 && subspace_escapes == 0,
        format!("{runs} runs, {false_containments} false containments, {subspace_escapes} elements outside the subspace"),
    )
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap()
}

/// Every pipeline's report, serialized.
fn all_reports(seed: u64) -> Vec<String> {
    let cfg = ConstantsConfig::default();
    let g = GroupSpec::cyclic(101).unwrap();
    let mut rng = rng_from_seed(seed);
    let a = random_subset(g, 45, &mut rng);
    let b = random_subset(g, 50, &mut rng);
    let f = indicator_convolution(&a, &b).unwrap();
    let ints = IntSet::new((0..25).map(|_| rng.gen_range(1..=60)).collect()).unwrap();
    let small = IntSet::new((0..20).map(|_| rng.gen_range(0..40)).collect()).unwrap();
    let v = GroupSpec::vector(2, 6).unwrap();
    let va = random_subset(v, 32, &mut rng);
    vec![
        json(&fourier_sample(&f, 2.0, 0.3, seed, cfg.c_sample).unwrap().report),
        json(&almost_period_bohr(&f, 2.0, 0.4, seed, &cfg).unwrap()),
        json(&find_progression_dense(&ints, &ints, 60, seed, &cfg).unwrap()),
        json(&bootstrap_strong_lp(&a, &a, 2.0, 0.3, XSource::Oracle, seed, &cfg).unwrap()),
        json(&find_progression_small_doubling(&small, &small, seed, &cfg).unwrap()),
        json(&finite_field_translate(&va, &va, &FfVariant::Green, seed, &cfg).unwrap()),
        json(&finite_field_translate(&va, &va, &FfVariant::Improved, seed, &cfg).unwrap()),
        json(&bogolyubov_bohr(&a, seed, &cfg).unwrap()),
        json(&embed_pair(&small, &ints, 2, 100_003).unwrap()),
    ]
}

fn determinism() -> Outcome {
    let first = all_reports(1234);
    let second = all_reports(1234);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| all_reports(1234));
    let other = all_reports(4321);
    let same = first == second && first == serial;
    for (i, ((x, y), z)) in first.iter().zip(&second).zip(&serial).enumerate() {
        if x != y || x != z {
            eprintln!("report {i} differs: rerun {} serial {}", x != y, x != z);
        }
    }
    let differs = first != other;
    outcome(same && differs, format!("{} reports identical across reruns and thread counts: {same}", first.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("fourier identities", fourier_identities),
        ("spectral Cauchy-Schwarz bound", spectral_bound),
        ("Bohr size bound", bohr_size_bound),
        ("progression in Bohr set", ap_in_bohr),
        ("sampling failure rate", sampling_failure_rate),
        ("almost-period Bohr set", almost_period_pipeline),
        ("model lemma embedding", model_lemma),
        ("dense progression in A+B", dense_progressions),
        ("bootstrap almost-periods", bootstrap_runs),
        ("small-doubling progression", small_doubling),
        ("Bogolyubov containment", bogolyubov),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        println!(
            "criterion {:>2} {:<32} {} ({}; {:.1}s)",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
