use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sumsetlab::pipelines::ConstantsConfig;
use sumsetlab::rng::RNG_ID;
use sumsetlab::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                Error::CapExceeded { .. } | Error::SizeCap { .. } => "cap_exceeded",
                Error::GroupMismatch { .. } | Error::InvalidGroup(_) => "invalid_group",
                Error::InvalidParameter(_) => "invalid_parameter",
                Error::ZeroFunction => "zero_function",
                Error::EmptySet(_) => "empty_set",
                Error::NotPrimeCyclic(_) | Error::NotVectorSpace(_) => "wrong_group_kind",
                Error::RadiusTooLarge { .. } => "radius_too_large",
                Error::HypothesisViolated(_) => "hypothesis_violated",
                Error::DissociativityCap { .. } => "dissociativity_cap",
                Error::NoProgressionFound { .. } => "no_progression_found",
                Error::VerificationFailed(_) => "verification_failed",
                Error::Internal(_) => "internal",
                Error::Parse(_) => "parse",
            },
        }
    }

    /// 2 when a construction ran but could not produce a verified witness.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NoProgressionFound { .. } | Error::VerificationFailed(_) | Error::Internal(_)) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub constants: ConstantsConfig,
    pub seed: u64,
    /// Seconds since the Unix epoch; the only field allowed to differ between reruns.
    pub timestamp: u64,
    pub version: &'static str,
    pub rng_id: &'static str,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String], constants: ConstantsConfig, seed: u64) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        RunManifest {
            command: command.to_string(),
            args: args.to_vec(),
            constants,
            seed,
            timestamp,
            version: env!("CARGO_PKG_VERSION"),
            rng_id: RNG_ID,
        }
    }
}

/// What a subcommand hands back to the dispatcher.
pub struct Outcome {
    pub report: Value,
    pub verified: bool,
    pub summary: String,
    /// Replaces the manifest's constants and seed when the command resolves its own.
    pub constants: Option<ConstantsConfig>,
    pub seed: Option<u64>,
}

impl Outcome {
    pub fn new(report: impl Serialize, verified: bool, summary: String) -> CliResult<Self> {
        let report = serde_json::to_value(report).map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))?;
        Ok(Outcome { report, verified, summary, constants: None, seed: None })
    }
}

pub fn envelope(manifest: &RunManifest, outcome: &Outcome) -> Value {
    json!({ "manifest": manifest, "verified": outcome.verified, "report": outcome.report })
}

pub fn error_envelope(manifest: Option<&RunManifest>, err: &CliError) -> Value {
    match manifest {
        Some(m) => json!({ "manifest": m, "error": err.to_json() }),
        None => json!({ "error": err.to_json() }),
    }
}
