mod commands;
mod experiment;
mod input;
mod plot;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sumsetlab::groups::GroupSpec;

use report::{envelope, error_envelope, CliError, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "sumsetlab", version, about = "Almost-periodicity of convolutions, progressions in sumsets, and their oracles")]
pub struct Cli {
    /// Default group for bare element arrays, e.g. zN:101 or vec:2^8.
    #[arg(long, global = true)]
    pub group: Option<GroupSpec>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON object of constants overriding the defaults.
    #[arg(long, global = true)]
    pub constants: Option<PathBuf>,
    /// Fall back to the default constants when the --constants file is missing.
    #[arg(long, global = true)]
    pub defaults: bool,
    /// Single constant override, e.g. --constant C_sample=8.
    #[arg(long = "constant", global = true, value_name = "KEY=VALUE")]
    pub constant: Vec<String>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Suppress the human summary on stderr.
    #[arg(long, global = true)]
    pub json_only: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spectrum, Parseval and inversion checks for a set or a function.
    Fourier(FourierArgs),
    /// Bohr set size, progressions or subspaces inside it, and Chang reduction.
    Bohr(BohrArgs),
    /// Sampled approximation of 1_A * 1_B.
    Sample(SampleArgs),
    /// Freiman model of a pair of integer sets in Z/N.
    Embed(EmbedArgs),
    /// Long progression or subspace translate in A + B.
    #[command(subcommand)]
    FindAp(FindAp),
    /// Bohr set of L^p almost-periods of 1_A * 1_B.
    AlmostPeriods(PeriodArgs),
    /// Bohr set inside 2A - 2A.
    Bogolyubov(BogolyubovArgs),
    /// Exhaustive reference computations.
    #[command(subcommand)]
    Oracle(Oracle),
    /// Progression-length bounds evaluated directly and in log space.
    Bounds(BoundsArgs),
    /// Batch of seeded trials from a JSON spec.
    Experiment(ExperimentArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fourier(_) => "fourier",
            Command::Bohr(_) => "bohr",
            Command::Sample(_) => "sample",
            Command::Embed(_) => "embed",
            Command::FindAp(FindAp::Dense(_)) => "find-ap dense",
            Command::FindAp(FindAp::Doubling(_)) => "find-ap doubling",
            Command::FindAp(FindAp::Ff(_)) => "find-ap ff",
            Command::AlmostPeriods(_) => "almost-periods",
            Command::Bogolyubov(_) => "bogolyubov",
            Command::Oracle(Oracle::LongestAp(_)) => "oracle longest-ap",
            Command::Oracle(Oracle::Periods(_)) => "oracle periods",
            Command::Bounds(_) => "bounds",
            Command::Experiment(_) => "experiment",
        }
    }
}

#[derive(Args, Debug)]
pub struct FourierArgs {
    /// Set whose indicator is transformed.
    #[arg(long, conflicts_with = "values")]
    pub set: Option<String>,
    /// Function values as a JSON array of reals or [re, im] pairs, in canonical order.
    #[arg(long)]
    pub values: Option<String>,
    /// Use the O(|G|^2) reference transform.
    #[arg(long)]
    pub direct: bool,
    /// Also list the characters with |f^| >= theta.
    #[arg(long)]
    pub theta: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BohrArgs {
    /// JSON array of frequencies (integers, or coordinate vectors for vec groups).
    #[arg(long)]
    pub frequencies: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Descriptor object {group, frequencies, delta}.
    #[arg(long, conflicts_with_all = ["frequencies", "spectrum_of"])]
    pub descriptor: Option<String>,
    /// Take the frequencies from the large spectrum of the uniform measure on this set.
    #[arg(long)]
    pub spectrum_of: Option<String>,
    /// Threshold for --spectrum-of (default 1/e).
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub materialize: bool,
    #[arg(long)]
    pub find_ap: bool,
    /// Dissociated reduction, e.g. --chang tau=0.25.
    #[arg(long, value_name = "tau=VALUE")]
    pub chang: Option<String>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long = "A")]
    pub a: String,
    #[arg(long = "B")]
    pub b: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub epsilon: f64,
    /// Sample translates of 1_B instead of characters.
    #[arg(long)]
    pub physical: bool,
    /// Largest failure rate accepted when --trials is given.
    #[arg(long, default_value_t = 0.05)]
    pub max_failure_rate: f64,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[arg(long = "A")]
    pub a: String,
    #[arg(long = "B")]
    pub b: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Modulus of the model; defaults to the least prime at least |kA - kB|.
    #[arg(long)]
    pub modulus: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum FindAp {
    /// Dense sets A, B of {1..N}.
    Dense(DenseArgs),
    /// Integer sets of small doubling.
    Doubling(PairArgs),
    /// Subsets of a vector space F_q^n.
    Ff(FfArgs),
}

#[derive(Args, Debug)]
pub struct DenseArgs {
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long = "A")]
    pub a: String,
    #[arg(long = "B")]
    pub b: String,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    #[arg(long = "A")]
    pub a: String,
    #[arg(long = "B")]
    pub b: String,
}

#[derive(Args, Debug)]
pub struct FfArgs {
    #[arg(long = "A")]
    pub a: String,
    #[arg(long = "B")]
    pub b: String,
    #[arg(long, default_value = "green", value_parser = ["green", "improved", "subset"])]
    pub variant: String,
    /// Target codimension for the subset variant.
    #[arg(long)]
    pub codim: Option<usize>,
    /// Subset of V as coefficient vectors packed base q (subset variant).
    #[arg(long)]
    pub subset: Option<String>,
}

#[derive(Args, Debug)]
pub struct PeriodArgs {
    #[arg(long = "A")]
    pub a: String,
    #[arg(long = "B")]
    pub b: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub epsilon: f64,
    /// Compare against the exhaustive almost-period set.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Args, Debug)]
pub struct BogolyubovArgs {
    #[arg(long = "A")]
    pub a: String,
}

#[derive(Subcommand, Debug)]
pub enum Oracle {
    /// Longest progression in a set of integers, or of Z/N with --group.
    LongestAp(LongestApArgs),
    /// Every L^p almost-period of 1_A * 1_B.
    Periods(OraclePeriodArgs),
}

#[derive(Args, Debug)]
pub struct LongestApArgs {
    #[arg(long)]
    pub set: String,
}

#[derive(Args, Debug)]
pub struct OraclePeriodArgs {
    #[arg(long = "A")]
    pub a: String,
    #[arg(long = "B")]
    pub b: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub epsilon: f64,
    /// spectral_l1, half_energy, or a number.
    #[arg(long, default_value = "spectral_l1")]
    pub reference: String,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub beta: Vec<f64>,
    /// N as a decimal literal; may exceed the floating-point range, e.g. 1e1000.
    #[arg(long = "N")]
    pub n: String,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Doubling constants K_A:K_B for the small-doubling bound.
    #[arg(long, value_delimiter = ',')]
    pub doubling: Vec<String>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Batch spec JSON file.
    #[arg(long)]
    pub spec: String,
    /// SVG plot path, overriding the spec.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SUMSETLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("SUMSETLAB_THREADS must be a positive integer, got {raw:?}")))?;
    // a second build in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn emit(value: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = serde_json::to_writer_pretty(&mut out, value);
    let _ = writeln!(out);
}

fn run(argv: Vec<String>) -> u8 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            let err = CliError::Usage(e.kind().to_string());
            emit(&error_envelope(None, &err));
            return 1;
        }
    };
    let args = &argv[1..];
    let fail = |manifest: Option<&RunManifest>, err: CliError, json_only: bool| {
        if !json_only {
            eprintln!("error: {err}");
        }
        emit(&error_envelope(manifest, &err));
        err.exit_code()
    };
    if let Err(e) = init_threads() {
        return fail(None, e, cli.json_only);
    }
    let cfg = match input::load_constants(cli.constants.as_deref(), cli.defaults, &cli.constant) {
        Ok(cfg) => cfg,
        Err(e) => return fail(None, e, cli.json_only),
    };
    let mut manifest = RunManifest::new(cli.command.name(), args, cfg, cli.seed);
    match commands::dispatch(&cli, &cfg) {
        Ok(outcome) => {
            if let Some(c) = outcome.constants {
                manifest.constants = c;
            }
            if let Some(s) = outcome.seed {
                manifest.seed = s;
            }
            if !cli.json_only {
                eprintln!("{}", outcome.summary);
                eprintln!("verified: {}", outcome.verified);
            }
            emit(&envelope(&manifest, &outcome));
            if outcome.verified { 0 } else { 2 }
        }
        Err(e) => fail(Some(&manifest), e, cli.json_only),
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args().collect()))
}
