use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use serde_json::Value;
use sumsetlab::bohr::{find_ap_in_bohr, BohrDescriptor};
use sumsetlab::fourier::{indicator_convolution, inverse, transform, GroupFunction};
use sumsetlab::freiman::{embed_pair, iterated_combination, IntSet};
use sumsetlab::groups::{ElementSet, GroupSpec};
use sumsetlab::pipelines::{self, ConstantsConfig, FfVariant, ReferenceNorm};
use sumsetlab::primes::least_prime_at_least;
use sumsetlab::sampling::{fourier_sample, measure_failure_rate, SamplingTask};
use sumsetlab::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NoProgressionFound { .. } | Error::VerificationFailed(_) | Error::Internal(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_value(obj: &Bound<'_, PyAny>) -> PyResult<Value> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn group(s: &str) -> PyResult<GroupSpec> {
    s.parse().map_err(py_err)
}

fn element_set(g: GroupSpec, obj: &Bound<'_, PyAny>) -> PyResult<ElementSet> {
    ElementSet::from_json(&to_value(obj)?, Some(g)).map_err(py_err)
}

fn constants(obj: Option<&Bound<'_, PyAny>>) -> PyResult<ConstantsConfig> {
    match obj {
        None => Ok(ConstantsConfig::default()),
        Some(o) => ConstantsConfig::from_json_str(&to_value(o)?.to_string()).map_err(py_err),
    }
}

fn int_set(v: Vec<i64>) -> PyResult<IntSet> {
    IntSet::new(v).map_err(py_err)
}

/// Averaged Fourier coefficients of a function given in canonical element order.
#[pyfunction]
fn fourier_transform(group_literal: &str, values: Vec<num_complex::Complex64>) -> PyResult<Vec<num_complex::Complex64>> {
    let f = GroupFunction::new(group(group_literal)?, values).map_err(py_err)?;
    Ok(transform(&f).coeffs().to_vec())
}

#[pyfunction]
fn inverse_transform(group_literal: &str, coeffs: Vec<num_complex::Complex64>) -> PyResult<Vec<num_complex::Complex64>> {
    let s = sumsetlab::fourier::Spectrum::new(group(group_literal)?, coeffs).map_err(py_err)?;
    Ok(inverse(&s).into_values())
}

/// Values of `1_A * 1_B` in canonical order.
#[pyfunction]
fn indicator_convolution_values(group_literal: &str, a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
    let g = group(group_literal)?;
    let f = indicator_convolution(&element_set(g, a)?, &element_set(g, b)?).map_err(py_err)?;
    Ok(f.values().iter().map(|v| v.re).collect())
}

#[pyfunction]
fn bohr_set<'py>(py: Python<'py>, group_literal: &str, frequencies: &Bound<'py, PyAny>, delta: f64) -> PyResult<Bound<'py, PyAny>> {
    let g = group(group_literal)?;
    let freqs = element_set(g, frequencies)?;
    let b = BohrDescriptor::from_frequencies(g, freqs.indices(), delta).map_err(py_err)?;
    let members = b.materialize().map_err(py_err)?;
    to_py(py, &members)
}

#[pyfunction]
fn ap_in_bohr<'py>(py: Python<'py>, modulus: u64, frequencies: Vec<usize>, delta: f64) -> PyResult<Bound<'py, PyAny>> {
    let g = GroupSpec::cyclic(modulus).map_err(py_err)?;
    let b = BohrDescriptor::from_frequencies(g, &frequencies, delta).map_err(py_err)?;
    to_py(py, &find_ap_in_bohr(&b).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (group_literal, a, b, p, epsilon, trials, seed=0, c_sample=4.0))]
#[allow(clippy::too_many_arguments)]
fn sampling_failure_rate<'py>(
    py: Python<'py>,
    group_literal: &str,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    p: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
    c_sample: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = group(group_literal)?;
    let f = indicator_convolution(&element_set(g, a)?, &element_set(g, b)?).map_err(py_err)?;
    let r = measure_failure_rate(&SamplingTask::Fourier { f, p, epsilon }, trials, seed, c_sample).map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (group_literal, a, b, p, epsilon, seed=0, c_sample=4.0))]
#[allow(clippy::too_many_arguments)]
fn sample_convolution<'py>(
    py: Python<'py>,
    group_literal: &str,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    p: f64,
    epsilon: f64,
    seed: u64,
    c_sample: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = group(group_literal)?;
    let f = indicator_convolution(&element_set(g, a)?, &element_set(g, b)?).map_err(py_err)?;
    to_py(py, &fourier_sample(&f, p, epsilon, seed, c_sample).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (a, b, k=2, modulus=None))]
fn embed<'py>(py: Python<'py>, a: Vec<i64>, b: Vec<i64>, k: usize, modulus: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let (a, b) = (int_set(a)?, int_set(b)?);
    let modulus = match modulus {
        Some(m) => m,
        None => least_prime_at_least(iterated_combination(&a, &b, k).map_err(py_err)?.len() as u64),
    };
    to_py(py, &embed_pair(&a, &b, k, modulus).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (group_literal, a, b, p, epsilon, seed=0, constants=None))]
#[allow(clippy::too_many_arguments)]
fn almost_periods<'py>(
    py: Python<'py>,
    group_literal: &str,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    p: f64,
    epsilon: f64,
    seed: u64,
    constants: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let g = group(group_literal)?;
    let cfg = self::constants(constants)?;
    let f = indicator_convolution(&element_set(g, a)?, &element_set(g, b)?).map_err(py_err)?;
    to_py(py, &pipelines::almost_period_bohr(&f, p, epsilon, seed, &cfg).map_err(py_err)?)
}

/// Every `t` with `‖f(·+t) - f‖_p ≤ ε ‖f^‖_1` for `f = 1_A * 1_B`.
#[pyfunction]
fn brute_force_almost_periods<'py>(
    py: Python<'py>,
    group_literal: &str,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    p: f64,
    epsilon: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = group(group_literal)?;
    let f = indicator_convolution(&element_set(g, a)?, &element_set(g, b)?).map_err(py_err)?;
    to_py(py, &pipelines::brute_force_almost_periods(&f, p, epsilon, ReferenceNorm::SpectralL1).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (a, b, n, seed=0, constants=None))]
fn find_progression_dense<'py>(
    py: Python<'py>,
    a: Vec<i64>,
    b: Vec<i64>,
    n: u64,
    seed: u64,
    constants: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::constants(constants)?;
    let r = pipelines::find_progression_dense(&int_set(a)?, &int_set(b)?, n, seed, &cfg).map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (a, b, seed=0, constants=None))]
fn find_progression_small_doubling<'py>(
    py: Python<'py>,
    a: Vec<i64>,
    b: Vec<i64>,
    seed: u64,
    constants: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = self::constants(constants)?;
    let r = pipelines::find_progression_small_doubling(&int_set(a)?, &int_set(b)?, seed, &cfg).map_err(py_err)?;
    to_py(py, &r)
}

/// `variant` is "green", "improved" or "subset" (the last needs `codim`).
#[pyfunction]
#[pyo3(signature = (group_literal, a, b, variant="green", codim=None, seed=0, constants=None))]
#[allow(clippy::too_many_arguments)]
fn finite_field_translate<'py>(
    py: Python<'py>,
    group_literal: &str,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    variant: &str,
    codim: Option<usize>,
    seed: u64,
    constants: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let g = group(group_literal)?;
    let cfg = self::constants(constants)?;
    let variant = match (variant, codim) {
        ("green", _) => FfVariant::Green,
        ("improved", _) => FfVariant::Improved,
        ("subset", Some(codim)) => FfVariant::Subset { codim, subset: None },
        ("subset", None) => return Err(PyValueError::new_err("the subset variant needs codim")),
        (other, _) => return Err(PyValueError::new_err(format!("unknown variant {other:?}"))),
    };
    let r = pipelines::finite_field_translate(&element_set(g, a)?, &element_set(g, b)?, &variant, seed, &cfg)
        .map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (group_literal, a, seed=0, constants=None))]
fn bogolyubov<'py>(
    py: Python<'py>,
    group_literal: &str,
    a: &Bound<'py, PyAny>,
    seed: u64,
    constants: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let g = group(group_literal)?;
    let cfg = self::constants(constants)?;
    to_py(py, &pipelines::bogolyubov_bohr(&element_set(g, a)?, seed, &cfg).map_err(py_err)?)
}

/// `(length, step, base)` of the longest progression in a set of integers.
#[pyfunction]
fn longest_ap(values: Vec<i64>) -> PyResult<(usize, i64, i64)> {
    let r = pipelines::longest_ap_integers(&values).map_err(py_err)?;
    Ok((r.length, r.step, r.base))
}

#[pyfunction]
#[pyo3(signature = (alphas, betas, ln_n, k_pairs=Vec::new(), c=1.0))]
fn bound_table<'py>(
    py: Python<'py>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    ln_n: f64,
    k_pairs: Vec<(f64, f64)>,
    c: f64,
) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &pipelines::bound_table(&alphas, &betas, ln_n, &k_pairs, c).map_err(py_err)?)
}

#[pyfunction]
fn default_constants<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &ConstantsConfig::default())
}

#[pymodule]
pub fn pysumsetlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("RNG_ID", sumsetlab::rng::RNG_ID)?;
    m.add_function(wrap_pyfunction!(fourier_transform, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_transform, m)?)?;
    m.add_function(wrap_pyfunction!(indicator_convolution_values, m)?)?;
    m.add_function(wrap_pyfunction!(bohr_set, m)?)?;
    m.add_function(wrap_pyfunction!(ap_in_bohr, m)?)?;
    m.add_function(wrap_pyfunction!(sample_convolution, m)?)?;
    m.add_function(wrap_pyfunction!(sampling_failure_rate, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(almost_periods, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_almost_periods, m)?)?;
    m.add_function(wrap_pyfunction!(find_progression_dense, m)?)?;
    m.add_function(wrap_pyfunction!(find_progression_small_doubling, m)?)?;
    m.add_function(wrap_pyfunction!(finite_field_translate, m)?)?;
    m.add_function(wrap_pyfunction!(bogolyubov, m)?)?;
    m.add_function(wrap_pyfunction!(longest_ap, m)?)?;
    m.add_function(wrap_pyfunction!(bound_table, m)?)?;
    m.add_function(wrap_pyfunction!(default_constants, m)?)?;
    Ok(())
}
