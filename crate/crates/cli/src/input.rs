use std::path::Path;

use serde_json::{Map, Value};
use sumsetlab::freiman::IntSet;
use sumsetlab::groups::{ElementSet, GroupSpec};
use sumsetlab::pipelines::ConstantsConfig;

use crate::report::{CliError, CliResult};

/// Inline JSON when the argument starts with `[` or `{`, a file path otherwise.
pub fn read_json(arg: &str) -> CliResult<Value> {
    let t = arg.trim_start();
    let text = if t.starts_with('[') || t.starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|source| CliError::Io { path: arg.to_string(), source })?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: invalid JSON: {e}", short(arg))))
}

fn short(arg: &str) -> String {
    if arg.len() > 40 { format!("{}...", &arg[..40]) } else { arg.to_string() }
}

pub fn group_set(arg: &str, default_group: Option<GroupSpec>) -> CliResult<ElementSet> {
    Ok(ElementSet::from_json(&read_json(arg)?, default_group)?)
}

/// The group of `A` fixes the group of the other sets.
pub fn group_pair(a: &str, b: &str, default_group: Option<GroupSpec>) -> CliResult<(ElementSet, ElementSet)> {
    let a = group_set(a, default_group)?;
    let b = group_set(b, Some(default_group.unwrap_or(a.group())))?;
    a.group().ensure_same(&b.group())?;
    Ok((a, b))
}

pub fn int_list(v: &Value) -> CliResult<Vec<i64>> {
    let items = match v {
        Value::Array(items) => items,
        Value::Object(map) => map
            .get("support")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::Input("integer set object needs a \"support\" array".into()))?,
        other => return Err(CliError::Input(format!("cannot read an integer set from {other}"))),
    };
    items
        .iter()
        .map(|x| x.as_i64().ok_or_else(|| CliError::Input(format!("{x} is not an integer"))))
        .collect()
}

pub fn int_set(arg: &str) -> CliResult<IntSet> {
    Ok(IntSet::new(int_list(&read_json(arg)?)?)?)
}

/// Defaults, then the constants file, then `KEY=VALUE` overrides.
pub fn load_constants(path: Option<&Path>, defaults: bool, overrides: &[String]) -> CliResult<ConstantsConfig> {
    let mut fields = Map::new();
    if let Some(path) = path {
        match std::fs::read_to_string(path) {
            Ok(text) => match serde_json::from_str(&text) {
                Ok(Value::Object(map)) => fields = map,
                Ok(_) => return Err(CliError::Input(format!("{}: constants file must hold a JSON object", path.display()))),
                Err(e) => return Err(CliError::Input(format!("{}: invalid JSON: {e}", path.display()))),
            },
            Err(_) if defaults => {}
            Err(source) => return Err(CliError::Io { path: path.display().to_string(), source }),
        }
    }
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("constant override {item:?} is not KEY=VALUE")))?;
        let value: Value = serde_json::from_str(value.trim())
            .map_err(|_| CliError::Usage(format!("constant override {item:?} needs a numeric value")))?;
        fields.insert(key.trim().to_string(), value);
    }
    Ok(ConstantsConfig::from_json_str(&Value::Object(fields).to_string())?)
}

/// `ln N` from a decimal literal such as `1e20` or `3.5e1000`, without overflow.
pub fn ln_of_literal(s: &str) -> CliResult<f64> {
    let bad = || CliError::Usage(format!("cannot read {s:?} as a positive number"));
    let t = s.trim();
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<f64>().map_err(|_| bad())?),
        None => (t, 0.0),
    };
    let m: f64 = mantissa.parse().map_err(|_| bad())?;
    if !(m > 0.0 && m.is_finite() && exponent.is_finite()) {
        return Err(bad());
    }
    Ok(m.ln() + exponent * std::f64::consts::LN_10)
}
