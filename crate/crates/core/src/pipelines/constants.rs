use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The unnamed absolute constants, with desk-scale defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    /// `k = ceil(C_sample · p / ε²)` samples.
    #[serde(rename = "C_sample")]
    pub c_sample: f64,
    /// Multiplier on every exponent choice `p`.
    #[serde(rename = "C_p")]
    pub c_p: f64,
    /// Multiplier on the accuracy `ε` each pipeline picks, clamped to the admissible range.
    pub c_eps: f64,
    /// `C` in the reported rank bound `C log(1/τ)`.
    #[serde(rename = "C_chang")]
    pub c_chang: f64,
    /// Multiplier on the radius `ε/3` of the sampled Bohr set.
    #[serde(rename = "C_bohr_radius")]
    pub c_bohr_radius: f64,
    /// Averaging-scan retries with fresh seeds before the progression is shrunk.
    pub retries: u32,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        ConstantsConfig { c_sample: 4.0, c_p: 1.0, c_eps: 1.0, c_chang: 1.0, c_bohr_radius: 1.0, retries: 3 }
    }
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("C_sample", self.c_sample),
            ("C_p", self.c_p),
            ("c_eps", self.c_eps),
            ("C_chang", self.c_chang),
            ("C_bohr_radius", self.c_bohr_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("constant {name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Defaults overridden by the fields present in a JSON object.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ConstantsConfig = serde_json::from_str(s).map_err(|e| Error::Parse(format!("constants: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
