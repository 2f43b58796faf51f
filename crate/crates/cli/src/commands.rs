use num_complex::Complex64;
use serde_json::{json, Value};
use sumsetlab::bohr::{
    ap_length_guarantee, chang_reduce, find_ap_in_bohr, find_subspace_in_bohr, large_spectrum, size_bound_check,
    BohrDescriptor, SpectralEntry,
};
use sumsetlab::fourier::{
    convolve_with, indicator_convolution, inverse_with, spectral_l1_norm, transform_with, FourierMode, GroupFunction,
};
use sumsetlab::freiman::{embed_pair, iterated_combination, sumset, IntSet};
use sumsetlab::groups::{ElementSet, GroupSpec};
use sumsetlab::pipelines::{
    almost_period_bohr, bogolyubov_bohr, bound_table, brute_force_almost_periods, find_progression_dense,
    find_progression_small_doubling, finite_field_translate, longest_ap_cyclic, longest_ap_integers, ConstantsConfig,
    FfVariant, ReferenceNorm, AP_SCAN_BUDGET,
};
use sumsetlab::primes::least_prime_at_least;
use sumsetlab::progression::SubspaceWitness;
use sumsetlab::sampling::{fourier_sample, measure_failure_rate, physical_sample, SamplingTask};
use sumsetlab::subspace::Subspace;
use sumsetlab::Error;

use crate::input::{group_pair, group_set, int_set, ln_of_literal, read_json};
use crate::report::{CliError, CliResult, Outcome};
use crate::{experiment, BohrArgs, Cli, Command, FindAp, FourierArgs, Oracle};

const IDENTITY_TOL: f64 = 1e-9;
/// Work bound on the longest-progression comparisons attached to witnesses.
const ORACLE_SUMSET_CAP: usize = 20_000;
const REVERIFY_CAP: u64 = 1 << 22;

pub fn dispatch(cli: &Cli, cfg: &ConstantsConfig) -> CliResult<Outcome> {
    let group = cli.group;
    let seed = cli.seed;
    match &cli.command {
        Command::Fourier(a) => fourier(a, group),
        Command::Bohr(a) => bohr(a, group, cfg),
        Command::Sample(a) => {
            let (sa, sb) = group_pair(&a.a, &a.b, group)?;
            match cli.trials {
                Some(trials) => {
                    let task = if a.physical {
                        SamplingTask::Physical { a: sa, b: sb, p: a.p, epsilon: a.epsilon }
                    } else {
                        SamplingTask::Fourier { f: indicator_convolution(&sa, &sb)?, p: a.p, epsilon: a.epsilon }
                    };
                    let r = measure_failure_rate(&task, trials, seed, cfg.c_sample)?;
                    let ok = r.failure_rate <= a.max_failure_rate;
                    let summary = format!(
                        "{} failures in {} trials (rate {:.4}, k = {}, mean error {:.4})",
                        r.failures, r.trials, r.failure_rate, r.k, r.mean_error
                    );
                    Outcome::new(json!({ "failure_rate": r, "max_failure_rate": a.max_failure_rate }), ok, summary)
                }
                None if a.physical => {
                    let r = physical_sample(&sa, &sb, a.p, a.epsilon, seed, cfg.c_sample)?;
                    let summary = format!("k = {}, L^p error {:.5} against ε = {}", r.k, r.lp_error, r.epsilon);
                    let ok = r.succeeded();
                    Outcome::new(r, ok, summary)
                }
                None => {
                    let f = indicator_convolution(&sa, &sb)?;
                    let s = fourier_sample(&f, a.p, a.epsilon, seed, cfg.c_sample)?;
                    let summary = format!(
                        "k = {}, {} distinct characters, L^p error {:.5} against ε = {}",
                        s.report.k,
                        s.distinct_characters().len(),
                        s.report.lp_error,
                        s.report.epsilon
                    );
                    let ok = s.report.succeeded();
                    let chars: Vec<Value> = s.distinct_characters().iter().map(|c| f.group().element_json(c.frequency)).collect();
                    Outcome::new(json!({ "sample": s, "distinct_characters": chars }), ok, summary)
                }
            }
        }
        Command::Embed(a) => {
            let (sa, sb) = (int_set(&a.a)?, int_set(&a.b)?);
            let modulus = match a.modulus {
                Some(m) => m,
                None => least_prime_at_least(iterated_combination(&sa, &sb, a.k)?.len() as u64),
            };
            let cert = embed_pair(&sa, &sb, a.k, modulus)?;
            let bands_ok = cert.band_sizes_ok();
            let recheck = cert.reverify(REVERIFY_CAP)?;
            let ok = cert.verified && bands_ok && recheck.verified;
            let summary = format!(
                "ξ = {}, N = {}, |A'| = {}, |B'| = {}, {}-isomorphism {}",
                cert.xi,
                cert.modulus,
                cert.subsets[0].len(),
                cert.subsets[1].len(),
                cert.k,
                if cert.verified { "verified" } else { "refuted" }
            );
            Outcome::new(json!({ "certificate": cert, "band_sizes_ok": bands_ok, "reverified": recheck }), ok, summary)
        }
        Command::FindAp(FindAp::Dense(a)) => {
            let (sa, sb) = (int_set(&a.a)?, int_set(&a.b)?);
            let r = find_progression_dense(&sa, &sb, a.n, seed, cfg)?;
            let s = sumset(&sa, &sb)?;
            let recheck = r.witness.elements().iter().all(|&v| s.contains(v));
            let oracle = integer_oracle(&s)?;
            let summary = format!(
                "progression of length {} (base {}, step {}) in A + B; N' = {}, p = {:.3}, ε = {:.4}, {} attempt(s), {} shrink(s)",
                r.witness.length,
                r.witness.base,
                r.witness.step,
                r.n_prime,
                r.p,
                r.epsilon,
                r.attempts.len(),
                r.shrinks
            );
            let ok = r.witness.containment_verified && recheck;
            Outcome::new(json!({ "result": r, "independent_check": recheck, "oracle": oracle }), ok, summary)
        }
        Command::FindAp(FindAp::Doubling(a)) => {
            let (sa, sb) = (int_set(&a.a)?, int_set(&a.b)?);
            let r = find_progression_small_doubling(&sa, &sb, seed, cfg)?;
            let s = sumset(&sa, &sb)?;
            let recheck = r.witness.elements().iter().all(|&v| s.contains(v));
            let oracle = integer_oracle(&s)?;
            let summary = format!(
                "progression of length {} (base {}, step {}) in A + B; K_A = {:.3}, K_B = {:.3}, model Z/{}, {} shrink(s)",
                r.witness.length, r.witness.base, r.witness.step, r.k_a, r.k_b, r.modulus, r.shrinks
            );
            let ok = r.witness.containment_verified && recheck;
            Outcome::new(json!({ "result": r, "independent_check": recheck, "oracle": oracle }), ok, summary)
        }
        Command::FindAp(FindAp::Ff(a)) => {
            let (sa, sb) = group_pair(&a.a, &a.b, group)?;
            let variant = match a.variant.as_str() {
                "green" => FfVariant::Green,
                "improved" => FfVariant::Improved,
                _ => {
                    let codim = a.codim.ok_or_else(|| CliError::Usage("the subset variant needs --codim".into()))?;
                    let subset = match &a.subset {
                        Some(s) => Some(
                            crate::input::int_list(&read_json(s)?)?
                                .into_iter()
                                .map(|v| usize::try_from(v).map_err(|_| CliError::Input(format!("negative subset code {v}"))))
                                .collect::<CliResult<Vec<_>>>()?,
                        ),
                        None => None,
                    };
                    FfVariant::Subset { codim, subset }
                }
            };
            let r = finite_field_translate(&sa, &sb, &variant, seed, cfg)?;
            let s = sa.sumset(&sb)?;
            let mut recheck = r.witness.elements().iter().all(|&x| s.contains(x));
            if let Some(sub) = &r.subset {
                recheck &= sub.subset.iter().all(|&v| s.contains(sa.group().add(sub.translate, v)));
            }
            let mut ok = r.witness.containment_verified && recheck;
            if let Some(sub) = &r.subset {
                ok &= sub.containment_verified;
            }
            let summary = format!(
                "{} variant: translate of a dimension-{} subspace in A + B (Bohr rank {}, dim cap {}, {} shrink(s))",
                r.variant, r.witness.dim, r.bohr_rank, r.dim_cap, r.shrinks
            );
            Outcome::new(json!({ "result": r, "independent_check": recheck }), ok, summary)
        }
        Command::AlmostPeriods(a) => {
            let (sa, sb) = group_pair(&a.a, &a.b, group)?;
            let f = indicator_convolution(&sa, &sb)?;
            let run = almost_period_bohr(&f, a.p, a.epsilon, seed, cfg)?;
            let mut ok = run.periodicity.pass;
            let mut oracle = Value::Null;
            if a.oracle {
                let fd = convolve_with(&GroupFunction::indicator(&sa), &GroupFunction::indicator(&sb), FourierMode::Direct)?;
                let truth = brute_force_almost_periods(&fd, a.p, a.epsilon, ReferenceNorm::SpectralL1)?;
                let contained = run.periodicity.bohr.materialize()?.is_subset_of(&truth);
                ok &= contained;
                oracle = json!({ "almost_periods": truth.len(), "contained": contained });
            }
            let summary = format!(
                "Bohr set of rank {} and radius {:.4} with {} elements; max distance {:.5} against threshold {:.5}",
                run.periodicity.bohr.rank(),
                run.radius,
                run.periodicity.bohr_size,
                run.periodicity.max_distance,
                run.periodicity.threshold
            );
            Outcome::new(json!({ "run": run, "oracle": oracle }), ok, summary)
        }
        Command::Bogolyubov(a) => {
            let sa = group_set(&a.a, group)?;
            let r = bogolyubov_bohr(&sa, seed, cfg)?;
            let summary = format!(
                "Bohr set of rank {} and radius {:.4} with {} elements; {} outside 2A - 2A",
                r.rank,
                r.radius,
                r.bohr_size,
                r.non_members.len()
            );
            let ok = r.containment_verified;
            Outcome::new(r, ok, summary)
        }
        Command::Oracle(Oracle::LongestAp(a)) => {
            let v = read_json(&a.set)?;
            let r = match (group, &v) {
                (None, Value::Array(_)) => longest_ap_integers(&crate::input::int_list(&v)?)?,
                _ => longest_ap_cyclic(&ElementSet::from_json(&v, group)?)?,
            };
            let summary = format!("longest progression: length {}, step {}, base {}", r.length, r.step, r.base);
            Outcome::new(r, true, summary)
        }
        Command::Oracle(Oracle::Periods(a)) => {
            let (sa, sb) = group_pair(&a.a, &a.b, group)?;
            let reference = match a.reference.as_str() {
                "spectral_l1" => ReferenceNorm::SpectralL1,
                "half_energy" => ReferenceNorm::HalfEnergy,
                other => ReferenceNorm::Explicit(
                    other.parse().map_err(|_| CliError::Usage(format!("unknown reference norm {other:?}")))?,
                ),
            };
            let f = convolve_with(&GroupFunction::indicator(&sa), &GroupFunction::indicator(&sb), FourierMode::Direct)?;
            let reference_norm = reference.evaluate(&f, a.p)?;
            let periods = brute_force_almost_periods(&f, a.p, a.epsilon, reference)?;
            let summary = format!("{} almost-periods out of {}", periods.len(), sa.group().order());
            Outcome::new(
                json!({
                    "reference": reference,
                    "reference_norm": reference_norm,
                    "threshold": a.epsilon * reference_norm,
                    "size": periods.len(),
                    "periods": periods,
                }),
                true,
                summary,
            )
        }
        Command::Bounds(a) => {
            let ln_n = ln_of_literal(&a.n)?;
            let pairs = a
                .doubling
                .iter()
                .map(|s| {
                    let (x, y) = s.split_once(':').ok_or_else(|| CliError::Usage(format!("doubling pair {s:?} is not K_A:K_B")))?;
                    let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad doubling constant {t:?}")));
                    Ok((parse(x)?, parse(y)?))
                })
                .collect::<CliResult<Vec<_>>>()?;
            let t = bound_table(&a.alpha, &a.beta, ln_n, &pairs, a.c)?;
            // only rows whose direct value is representable can be compared
            let comparable = |direct: &[f64]| direct.iter().all(|v| v.is_finite() && *v > 0.0);
            let mut overflow = 0;
            let mut ok = true;
            for r in &t.rows {
                if comparable(&[r.thm11, r.thm13]) {
                    ok &= r.agree;
                } else {
                    overflow += 1;
                }
            }
            for r in &t.doubling_rows {
                if comparable(&[r.thm14]) {
                    ok &= r.agree;
                } else {
                    overflow += 1;
                }
            }
            let summary = format!(
                "{} density rows, {} doubling rows, {} crossover point(s), {} overflowed direct value(s), max log gap {:.2e}",
                t.rows.len(),
                t.doubling_rows.len(),
                t.crossover.len(),
                overflow,
                t.max_log_gap
            );
            Outcome::new(json!({ "table": t, "direct_overflows": overflow }), ok, summary)
        }
        Command::Experiment(a) => experiment::run(a, cli, cfg),
    }
}

fn integer_oracle(s: &IntSet) -> CliResult<Value> {
    if s.len() > ORACLE_SUMSET_CAP || (s.len() as u128).pow(2) > AP_SCAN_BUDGET {
        return Ok(Value::Null);
    }
    Ok(serde_json::to_value(longest_ap_integers(s.elements())?).unwrap_or(Value::Null))
}

fn fourier(a: &FourierArgs, group: Option<GroupSpec>) -> CliResult<Outcome> {
    let f = match (&a.set, &a.values) {
        (Some(s), _) => GroupFunction::indicator(&group_set(s, group)?),
        (None, Some(v)) => {
            let g = group.ok_or_else(|| CliError::Usage("--values needs --group".into()))?;
            let items = match read_json(v)? {
                Value::Array(items) => items,
                other => return Err(CliError::Input(format!("function values must be an array, got {other}"))),
            };
            let values = items
                .iter()
                .map(|x| match x {
                    Value::Number(n) => n.as_f64().map(|re| Complex64::new(re, 0.0)),
                    Value::Array(pair) if pair.len() == 2 => {
                        Some(Complex64::new(pair[0].as_f64()?, pair[1].as_f64()?))
                    }
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| CliError::Input("function values must be numbers or [re, im] pairs".into()))?;
            GroupFunction::new(g, values)?
        }
        (None, None) => return Err(CliError::Usage("fourier needs --set or --values".into())),
    };
    let mode = if a.direct { FourierMode::Direct } else { FourierMode::Fast };
    let other = if a.direct { FourierMode::Fast } else { FourierMode::Direct };
    let s = transform_with(&f, mode);
    let physical: f64 = f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() / f.values().len() as f64;
    let spectral: f64 = s.coeffs().iter().map(|c| c.norm_sqr()).sum();
    let parseval_gap = (physical - spectral).abs();
    let back = inverse_with(&s, mode);
    let inversion_error = back.values().iter().zip(f.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let s2 = transform_with(&f, other);
    let route_gap = s.coeffs().iter().zip(s2.coeffs()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let spectrum_of = match a.theta {
        Some(theta) => Some(large_spectrum(&f, theta)?),
        None => None,
    };
    let l1 = spectral_l1_norm(&s);
    let ok = parseval_gap <= IDENTITY_TOL && inversion_error <= IDENTITY_TOL && route_gap <= IDENTITY_TOL;
    let summary = format!(
        "|G| = {}, ‖f^‖_1 = {:.6}, Parseval gap {:.2e}, inversion error {:.2e}, fast/direct gap {:.2e}",
        f.group().order(),
        l1,
        parseval_gap,
        inversion_error,
        route_gap
    );
    Outcome::new(
        json!({
            "group": f.group(),
            "mode": if a.direct { "direct" } else { "fast" },
            "spectrum": s,
            "spectral_l1": l1,
            "parseval": { "physical": physical, "spectral": spectral, "gap": parseval_gap },
            "inversion_error": inversion_error,
            "route_gap": route_gap,
            "large_spectrum": spectrum_of,
        }),
        ok,
        summary,
    )
}

fn parse_tau(s: &str) -> CliResult<f64> {
    let v = s.trim().strip_prefix("tau=").unwrap_or(s.trim());
    v.parse().map_err(|_| CliError::Usage(format!("--chang expects tau=<value>, got {s:?}")))
}

fn bohr(a: &BohrArgs, group: Option<GroupSpec>, cfg: &ConstantsConfig) -> CliResult<Outcome> {
    let (desc, spectrum) = if let Some(d) = &a.descriptor {
        let desc = BohrDescriptor::from_json(&read_json(d)?)?;
        let spectrum: Vec<SpectralEntry> =
            desc.frequencies().iter().map(|c| SpectralEntry { frequency: c.frequency, magnitude: 1.0 }).collect();
        (desc, spectrum)
    } else {
        let delta = a.delta.ok_or_else(|| CliError::Usage("bohr needs --delta or --descriptor".into()))?;
        let (g, spectrum) = if let Some(x) = &a.spectrum_of {
            let x = group_set(x, group)?;
            let theta = a.theta.unwrap_or((-1.0f64).exp());
            (x.group(), large_spectrum(&GroupFunction::measure(&x)?, theta)?)
        } else {
            let g = group.ok_or_else(|| CliError::Usage("bohr needs --group".into()))?;
            let items = match &a.frequencies {
                Some(f) => match read_json(f)? {
                    Value::Array(items) => items,
                    other => return Err(CliError::Input(format!("frequencies must be an array, got {other}"))),
                },
                None => Vec::new(),
            };
            let freqs = items.iter().map(|e| g.element_from_json(e)).collect::<sumsetlab::Result<Vec<_>>>()?;
            (g, freqs.into_iter().map(|r| SpectralEntry { frequency: r, magnitude: 1.0 }).collect())
        };
        let freqs: Vec<usize> = spectrum.iter().map(|e| e.frequency).collect();
        (BohrDescriptor::from_frequencies(g, &freqs, delta)?, spectrum)
    };
    let g = desc.group();
    let size = size_bound_check(&desc)?;
    let mut ok = size.pass;
    let mut report = json!({
        "descriptor": desc.to_json(),
        "rank": desc.rank(),
        "size_bound": size,
    });
    if a.materialize {
        report["members"] = desc.materialize()?.to_json();
    }
    if a.find_ap {
        match g {
            GroupSpec::Cyclic { .. } => {
                let w = find_ap_in_bohr(&desc)?;
                let guarantee = ap_length_guarantee(&desc);
                let recheck = w.elements().iter().all(|&x| desc.contains(x as usize));
                ok &= w.containment_verified && recheck && w.length >= guarantee;
                report["progression"] = json!({ "witness": w, "length_guarantee": guarantee, "independent_check": recheck });
            }
            GroupSpec::Vector { .. } => {
                let (sub, exact) = match find_subspace_in_bohr(&desc) {
                    Ok(s) => (s, true),
                    Err(Error::RadiusTooLarge { .. }) => {
                        let freqs: Vec<usize> = desc.frequencies().iter().map(|c| c.frequency).collect();
                        (Subspace::annihilator(g, &freqs)?, false)
                    }
                    Err(e) => return Err(e.into()),
                };
                let mut w = SubspaceWitness::new(g.zero(), &sub);
                ok &= w.verify_in(&desc.materialize()?);
                report["subspace"] = json!({ "witness": w, "exact_annihilator": exact });
            }
        }
    }
    if let Some(t) = &a.chang {
        let tau = parse_tau(t)?;
        let red = chang_reduce(g, &spectrum, desc.delta().min(2.0), tau, 1.0, cfg.c_chang)?;
        let check = red.verify(true)?;
        ok &= check.all_ok();
        report["chang"] = json!({ "reduction": red, "check": check });
    }
    let summary = format!(
        "Bohr set on {g} of rank {} and radius {}: {} elements against the bound {:.3}",
        desc.rank(),
        desc.delta(),
        size.actual,
        size.bound
    );
    Outcome::new(report, ok, summary)
}
