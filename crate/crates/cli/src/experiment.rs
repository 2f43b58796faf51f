//! Batch runner: seeded random instances, one pipeline per trial, aggregate statistics.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sumsetlab::bohr::size_bound_check;
use sumsetlab::fourier::{convolve_with, indicator_convolution, FourierMode, GroupFunction};
use sumsetlab::freiman::{sumset, IntSet};
use sumsetlab::groups::{ElementSet, GroupSpec};
use sumsetlab::pipelines::{
    almost_period_bohr, bogolyubov_bohr, brute_force_almost_periods, find_progression_dense,
    find_progression_small_doubling, finite_field_translate, longest_ap_integers, thm11_bound, thm14_bound,
    ConstantsConfig, FfVariant, ReferenceNorm,
};
use sumsetlab::rng::{derive_seed, rng_from_seed, Rng};
use sumsetlab::sampling::fourier_sample;

use crate::plot;
use crate::report::{CliError, CliResult, Outcome};
use crate::{Cli, ExperimentArgs};

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    AlmostPeriods,
    Sample,
    Dense,
    Doubling,
    FiniteField,
    Bogolyubov,
}

impl Pipeline {
    fn metric(self) -> &'static str {
        match self {
            Pipeline::AlmostPeriods | Pipeline::Bogolyubov => "bohr_set_size",
            Pipeline::Sample => "lp_error",
            Pipeline::Dense | Pipeline::Doubling => "progression_length",
            Pipeline::FiniteField => "subspace_dimension",
        }
    }
}

fn half() -> f64 {
    0.5
}

fn two() -> f64 {
    2.0
}

fn default_epsilon() -> f64 {
    0.4
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    pub pipeline: Pipeline,
    #[serde(default)]
    pub trials: usize,
    pub seed: Option<u64>,
    /// Overrides applied on top of the command-line constants.
    #[serde(default)]
    pub constants: Map<String, Value>,
    /// Ambient group for the group pipelines.
    pub group: Option<GroupSpec>,
    /// `A, B ⊆ {1..N}` for the dense pipeline.
    #[serde(rename = "N")]
    pub n: Option<u64>,
    /// `A, B` are `size`-subsets of `[0, interval)` for the doubling pipeline.
    pub interval: Option<i64>,
    pub size: Option<usize>,
    #[serde(default = "half")]
    pub density: f64,
    pub density_b: Option<f64>,
    /// Take `B = A`.
    #[serde(default)]
    pub same_set: bool,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub variant: Option<FfVariant>,
    /// Compare against the exhaustive oracle where one exists.
    #[serde(default = "yes")]
    pub oracle: bool,
    /// SVG path for the bound-versus-empirical plot.
    pub plot: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    /// False only when a returned witness fails the independent recheck.
    pub verified: bool,
    pub value: Option<f64>,
    pub oracle: Option<f64>,
    pub bound: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Summary { min: v[0], max: v[n - 1], mean: v.iter().sum::<f64>() / n as f64, median })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison {
    pub compared: usize,
    pub mean_oracle: f64,
    /// Mean of `value / oracle`.
    pub mean_ratio: f64,
    /// Every value is at most its oracle value.
    pub dominated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub pipeline: Pipeline,
    pub metric: &'static str,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: Option<f64>,
    pub errors: usize,
    pub verification_failures: usize,
    pub values: Option<Summary>,
    pub histogram: Vec<(f64, usize)>,
    pub oracle: Option<OracleComparison>,
    pub bounds: Option<Summary>,
    pub plot: Option<String>,
}

pub fn aggregate(pipeline: Pipeline, records: &[TrialRecord], plot: Option<String>) -> Aggregate {
    let values: Vec<f64> = records.iter().filter_map(|r| r.value).collect();
    let bounds: Vec<f64> = records.iter().filter_map(|r| r.bound).filter(|b| b.is_finite()).collect();
    let pairs: Vec<(f64, f64)> = records.iter().filter_map(|r| Some((r.value?, r.oracle?))).collect();
    let oracle = (!pairs.is_empty()).then(|| OracleComparison {
        compared: pairs.len(),
        mean_oracle: pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64,
        mean_ratio: pairs.iter().map(|&(v, o)| if o > 0.0 { v / o } else { 0.0 }).sum::<f64>() / pairs.len() as f64,
        dominated: pairs.iter().all(|&(v, o)| v <= o),
    });
    let mut histogram: Vec<(f64, usize)> = Vec::new();
    if pipeline != Pipeline::Sample {
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for v in sorted {
            match histogram.last_mut() {
                Some((x, c)) if *x == v => *c += 1,
                _ => histogram.push((v, 1)),
            }
        }
    }
    let successes = records.iter().filter(|r| r.success).count();
    Aggregate {
        pipeline,
        metric: pipeline.metric(),
        trials: records.len(),
        successes,
        success_rate: (!records.is_empty()).then(|| successes as f64 / records.len() as f64),
        errors: records.iter().filter(|r| r.error.is_some()).count(),
        verification_failures: records.iter().filter(|r| !r.verified).count(),
        values: Summary::of(&values),
        histogram,
        oracle,
        bounds: Summary::of(&bounds),
        plot,
    }
}

fn random_subset(pool: &[usize], density: f64, rng: &mut Rng) -> Vec<usize> {
    let m = ((density * pool.len() as f64).round() as usize).clamp(1, pool.len());
    let mut v = pool.to_vec();
    v.shuffle(rng);
    v.truncate(m);
    v.sort_unstable();
    v
}

fn check_density(name: &str, d: f64) -> CliResult<()> {
    if d > 0.0 && d <= 1.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("{name} must lie in (0, 1], got {d}")))
    }
}

impl BatchSpec {
    fn validate(&self) -> CliResult<()> {
        check_density("density", self.density)?;
        if let Some(d) = self.density_b {
            check_density("density_b", d)?;
        }
        let need_group = matches!(
            self.pipeline,
            Pipeline::AlmostPeriods | Pipeline::Sample | Pipeline::FiniteField | Pipeline::Bogolyubov
        );
        if need_group && self.group.is_none() {
            return Err(CliError::Input("this pipeline needs a \"group\"".into()));
        }
        if self.pipeline == Pipeline::FiniteField && !matches!(self.group, Some(GroupSpec::Vector { .. })) {
            return Err(CliError::Input("the finite_field pipeline needs a vector-space group".into()));
        }
        if self.pipeline == Pipeline::Dense && self.n.unwrap_or(0) == 0 {
            return Err(CliError::Input("the dense pipeline needs a positive \"N\"".into()));
        }
        if self.pipeline == Pipeline::Doubling {
            let (i, s) = (self.interval.unwrap_or(60), self.size.unwrap_or(30));
            if i < 1 || s == 0 || s as i64 > i {
                return Err(CliError::Input(format!("need 1 ≤ size ≤ interval, got size {s}, interval {i}")));
            }
        }
        Ok(())
    }

    fn group_pair(&self, g: GroupSpec, rng: &mut Rng) -> (ElementSet, ElementSet) {
        let pool: Vec<usize> = (0..g.order()).collect();
        let a = random_subset(&pool, self.density, rng);
        let b = if self.same_set { a.clone() } else { random_subset(&pool, self.density_b.unwrap_or(self.density), rng) };
        (ElementSet::new(g, a).expect("in range"), ElementSet::new(g, b).expect("in range"))
    }

    fn int_pair(&self, pool: &[usize], density_a: f64, density_b: f64, rng: &mut Rng) -> (IntSet, IntSet) {
        let a: Vec<i64> = random_subset(pool, density_a, rng).into_iter().map(|x| x as i64).collect();
        let b: Vec<i64> = if self.same_set {
            a.clone()
        } else {
            random_subset(pool, density_b, rng).into_iter().map(|x| x as i64).collect()
        };
        (IntSet::new(a).expect("nonempty"), IntSet::new(b).expect("nonempty"))
    }

    fn trial(&self, index: usize, seed: u64, cfg: &ConstantsConfig) -> TrialRecord {
        let mut rec = TrialRecord { trial: index, seed, success: false, verified: true, value: None, oracle: None, bound: None, error: None };
        let mut rng = rng_from_seed(seed);
        let run_seed = derive_seed(seed, 1);
        if let Err(e) = self.fill(&mut rec, &mut rng, run_seed, cfg) {
            rec.success = false;
            rec.error = Some(e.to_string());
        }
        rec
    }

    fn fill(&self, rec: &mut TrialRecord, rng: &mut Rng, seed: u64, cfg: &ConstantsConfig) -> sumsetlab::Result<()> {
        match self.pipeline {
            Pipeline::AlmostPeriods => {
                let (a, b) = self.group_pair(self.group.expect("validated"), rng);
                let f = indicator_convolution(&a, &b)?;
                let run = almost_period_bohr(&f, self.p, self.epsilon, seed, cfg)?;
                rec.value = Some(run.periodicity.bohr_size as f64);
                rec.bound = Some(size_bound_check(&run.periodicity.bohr)?.bound);
                rec.success = run.periodicity.pass;
                if self.oracle {
                    let fd = convolve_with(&GroupFunction::indicator(&a), &GroupFunction::indicator(&b), FourierMode::Direct)?;
                    let truth = brute_force_almost_periods(&fd, self.p, self.epsilon, ReferenceNorm::SpectralL1)?;
                    rec.oracle = Some(truth.len() as f64);
                    if run.periodicity.pass {
                        let contained = run.periodicity.bohr.materialize()?.is_subset_of(&truth);
                        rec.verified = contained;
                        rec.success = contained;
                    }
                }
            }
            Pipeline::Sample => {
                let (a, b) = self.group_pair(self.group.expect("validated"), rng);
                let s = fourier_sample(&indicator_convolution(&a, &b)?, self.p, self.epsilon, seed, cfg.c_sample)?;
                rec.value = Some(s.report.lp_error);
                rec.bound = Some(self.epsilon);
                rec.success = s.report.succeeded();
            }
            Pipeline::Dense => {
                let n = self.n.expect("validated");
                let pool: Vec<usize> = (1..=n as usize).collect();
                let (a, b) = self.int_pair(&pool, self.density, self.density_b.unwrap_or(self.density), rng);
                let r = find_progression_dense(&a, &b, n, seed, cfg)?;
                let s = sumset(&a, &b)?;
                rec.verified = r.witness.containment_verified && r.witness.elements().iter().all(|&v| s.contains(v));
                rec.success = rec.verified;
                rec.value = Some(r.witness.length as f64);
                rec.bound = Some(thm11_bound(cfg.c_p, r.alpha, r.beta, (r.n_prime as f64).ln()));
                if self.oracle {
                    rec.oracle = Some(longest_ap_integers(s.elements())?.length as f64);
                }
            }
            Pipeline::Doubling => {
                let pool: Vec<usize> = (0..self.interval.unwrap_or(60) as usize).collect();
                let frac = self.size.unwrap_or(30) as f64 / pool.len() as f64;
                let (a, b) = self.int_pair(&pool, frac, frac, rng);
                let r = find_progression_small_doubling(&a, &b, seed, cfg)?;
                let s = sumset(&a, &b)?;
                rec.verified = r.witness.containment_verified && r.witness.elements().iter().all(|&v| s.contains(v));
                rec.success = rec.verified;
                rec.value = Some(r.witness.length as f64);
                let ln_a = (if r.swapped { b.len() } else { a.len() } as f64).ln();
                rec.bound = Some(thm14_bound(cfg.c_p, (s.len() as f64).ln(), ln_a, r.k_a, r.k_b));
                if self.oracle {
                    rec.oracle = Some(longest_ap_integers(s.elements())?.length as f64);
                }
            }
            Pipeline::FiniteField => {
                let (a, b) = self.group_pair(self.group.expect("validated"), rng);
                let variant = self.variant.clone().unwrap_or(FfVariant::Green);
                let r = finite_field_translate(&a, &b, &variant, seed, cfg)?;
                let s = a.sumset(&b)?;
                rec.verified = r.witness.containment_verified && r.witness.elements().iter().all(|&x| s.contains(x));
                rec.success = rec.verified;
                rec.value = Some(r.witness.dim as f64);
                rec.bound = Some(r.dim_cap as f64);
            }
            Pipeline::Bogolyubov => {
                let g = self.group.expect("validated");
                let pool: Vec<usize> = (0..g.order()).collect();
                let a = ElementSet::new(g, random_subset(&pool, self.density, rng))?;
                let r = bogolyubov_bohr(&a, seed, cfg)?;
                rec.verified = r.containment_verified;
                rec.success = r.containment_verified;
                rec.value = Some(r.bohr_size as f64);
                if self.oracle {
                    let two_a = a.sumset(&a)?;
                    rec.oracle = Some(two_a.difference_set(&two_a)?.len() as f64);
                }
            }
        }
        Ok(())
    }
}

pub fn run(args: &ExperimentArgs, cli: &Cli, base: &ConstantsConfig) -> CliResult<Outcome> {
    let value = crate::input::read_json(&args.spec)?;
    let mut spec: BatchSpec =
        serde_json::from_value(value).map_err(|e| CliError::Input(format!("invalid batch spec: {e}")))?;
    spec.validate()?;
    if let Some(t) = cli.trials {
        spec.trials = t;
    }
    let mut fields = match serde_json::to_value(base) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    };
    fields.extend(spec.constants.clone());
    let cfg = ConstantsConfig::from_json_str(&Value::Object(fields).to_string())?;
    let seed = spec.seed.unwrap_or(cli.seed);

    let records: Vec<TrialRecord> = (0..spec.trials)
        .into_par_iter()
        .map(|i| spec.trial(i, derive_seed(seed, i as u64), &cfg))
        .collect();

    let plot_path: Option<PathBuf> = args.plot.clone().or_else(|| spec.plot.as_ref().map(PathBuf::from));
    let plot_ref = match &plot_path {
        Some(path) if !records.is_empty() => {
            plot::bound_vs_empirical(path, spec.pipeline.metric(), &records)?;
            Some(path.display().to_string())
        }
        _ => None,
    };
    let agg = aggregate(spec.pipeline, &records, plot_ref);
    let summary = match agg.success_rate {
        Some(rate) => format!(
            "{:?}: {} of {} trials succeeded (rate {:.3}), {} error(s), {} verification failure(s)",
            spec.pipeline, agg.successes, agg.trials, rate, agg.errors, agg.verification_failures
        ),
        None => format!("{:?}: empty batch", spec.pipeline),
    };
    let verified = agg.verification_failures == 0;
    let mut out = Outcome::new(
        serde_json::json!({ "spec": spec, "constants": cfg, "seed": seed, "aggregate": agg, "trials": records }),
        verified,
        summary,
    )?;
    out.constants = Some(cfg);
    out.seed = Some(seed);
    Ok(out)
}
