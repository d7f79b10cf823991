//! Python bindings. Build with `maturin develop` from this directory, or
//! `cargo build -p dpbayes-py --release` and copy the shared library to
//! `dpbayes.so` on the Python path.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dpbayes::simulation::{self, CellParams};
use dpbayes::{querydb, Error, NoisyResponse, RunStream};

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::InvalidParameter(_) | Error::Parse { .. } => PyValueError::new_err(err.to_string()),
        Error::Numerical(_) | Error::Run { .. } => PyRuntimeError::new_err(err.to_string()),
    }
}

fn response(y: f64) -> PyResult<NoisyResponse> {
    NoisyResponse::new(y).map_err(to_py_err)
}

#[pyclass(name = "PrivacyLevel", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyPrivacyLevel(dpbayes::PrivacyLevel);

#[pymethods]
impl PyPrivacyLevel {
    #[new]
    fn new(epsilon: f64) -> PyResult<Self> {
        dpbayes::calibrate(epsilon).map(Self).map_err(to_py_err)
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon()
    }

    #[getter]
    fn scale_b(&self) -> f64 {
        self.0.scale_b()
    }

    #[getter]
    fn noise_std(&self) -> f64 {
        self.0.noise_std()
    }

    fn density(&self, z: f64) -> f64 {
        dpbayes::laplace_density(z, &self.0)
    }

    /// Draws `count` noise values from the stream keyed by (seed, stream).
    #[pyo3(signature = (seed, count = 1, stream = 0))]
    fn sample(&self, seed: u64, count: usize, stream: u64) -> Vec<f64> {
        let mut rng = RunStream::new(seed, stream);
        (0..count)
            .map(|_| dpbayes::sample_noise(&self.0, &mut rng).value())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("PrivacyLevel(epsilon={})", self.0.epsilon())
    }
}

#[pyclass(name = "BinomialPrior", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyBinomialPrior(dpbayes::BinomialPrior);

#[pymethods]
impl PyBinomialPrior {
    #[new]
    fn new(n: u64, p: f64) -> PyResult<Self> {
        dpbayes::BinomialPrior::new(n, p).map(Self).map_err(to_py_err)
    }

    #[getter]
    fn n(&self) -> u64 {
        self.0.n()
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p()
    }

    fn log_mass(&self, k: u64) -> PyResult<f64> {
        self.0.log_mass(k).map_err(to_py_err)
    }

    #[pyo3(signature = (seed, count = 1, stream = 0))]
    fn sample(&self, seed: u64, count: usize, stream: u64) -> Vec<u64> {
        let mut rng = RunStream::new(seed, stream);
        (0..count).map(|_| self.0.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!("BinomialPrior(n={}, p={})", self.0.n(), self.0.p())
    }
}

/// Posterior-mean estimator with the prior table cached.
#[pyclass(name = "BayesEstimator", frozen)]
struct PyBayesEstimator(dpbayes::BayesEstimator);

#[pymethods]
impl PyBayesEstimator {
    #[new]
    fn new(prior: PyBinomialPrior, level: PyPrivacyLevel) -> Self {
        Self(dpbayes::BayesEstimator::new(prior.0, level.0))
    }

    fn estimate(&self, y: f64) -> PyResult<f64> {
        self.0.estimate(response(y)?).map_err(to_py_err)
    }

    fn posterior(&self, y: f64) -> PyResult<Vec<f64>> {
        self.0
            .posterior(response(y)?)
            .map(|p| p.probs().to_vec())
            .map_err(to_py_err)
    }
}

#[pyfunction]
fn calibrate(epsilon: f64) -> PyResult<PyPrivacyLevel> {
    PyPrivacyLevel::new(epsilon)
}

#[pyfunction]
fn naive_estimate(y: f64) -> PyResult<f64> {
    Ok(dpbayes::naive_estimate(response(y)?))
}

#[pyfunction]
fn bayes_estimate(prior: PyBinomialPrior, level: PyPrivacyLevel, y: f64) -> PyResult<f64> {
    dpbayes::bayes_estimate(&prior.0, &level.0, response(y)?).map_err(to_py_err)
}

#[pyfunction]
fn posterior(prior: PyBinomialPrior, level: PyPrivacyLevel, y: f64) -> PyResult<Vec<f64>> {
    dpbayes::posterior(&prior.0, &level.0, response(y)?)
        .map(|p| p.probs().to_vec())
        .map_err(to_py_err)
}

#[pyfunction]
fn out_of_range_probability(a: u64, n: u64, level: PyPrivacyLevel) -> PyResult<f64> {
    dpbayes::out_of_range_probability(a, n, &level.0)
        .map(|r| r.probability)
        .map_err(to_py_err)
}

/// Returns `(max_prob, argmax, min_prob, argmin)`.
#[pyfunction]
fn out_of_range_bounds(n: u64, level: PyPrivacyLevel) -> PyResult<(f64, Vec<u64>, f64, Vec<u64>)> {
    let b = dpbayes::out_of_range_bounds(n, &level.0).map_err(to_py_err)?;
    Ok((b.max_prob, b.argmax, b.min_prob, b.argmin))
}

#[pyfunction]
fn dp_ratio_check(level: PyPrivacyLevel, a1: u64, a2: u64, grid: Vec<f64>) -> PyResult<bool> {
    dpbayes::dp_ratio_check(&level.0, a1, a2, &grid).map_err(to_py_err)
}

/// Returns `(binomial_width, laplace_width)`.
#[pyfunction]
fn uncertainty_widths(prior: PyBinomialPrior, level: PyPrivacyLevel) -> (f64, f64) {
    let w = dpbayes::uncertainty_widths(&prior.0, &level.0);
    (w.binomial_width, w.laplace_width)
}

#[pyfunction]
fn analytic_naive_error(level: PyPrivacyLevel) -> f64 {
    dpbayes::analytic_naive_error(&level.0)
}

/// In-memory record set loaded from CSV text.
#[pyclass(name = "RecordSet", frozen)]
struct PyRecordSet(dpbayes::RecordSet);

#[pymethods]
impl PyRecordSet {
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        querydb::load_records(text.as_bytes()).map(Self).map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn count(&self, predicate: &str) -> PyResult<u64> {
        let pred: dpbayes::Predicate = predicate.parse().map_err(to_py_err)?;
        Ok(dpbayes::count_query(&self.0, &pred))
    }

    /// Noisy answer as the one-line JSON the analyst receives.
    fn noisy_count(&self, predicate: &str, level: PyPrivacyLevel, seed: u64) -> PyResult<String> {
        let pred: dpbayes::Predicate = predicate.parse().map_err(to_py_err)?;
        let result = dpbayes::noisy_count_query(&self.0, &pred, &level.0, &mut RunStream::new(seed, 0));
        Ok(result.public_answer().to_json_line())
    }
}

/// Returns a dict of the aggregated metrics for one cell.
#[pyfunction]
#[pyo3(signature = (n, p, epsilon, runs, seed, shards = simulation::DEFAULT_SHARDS))]
fn run_cell<'py>(
    py: Python<'py>,
    n: u64,
    p: f64,
    epsilon: f64,
    runs: u64,
    seed: u64,
    shards: usize,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let r = py
        .detach(|| simulation::run_cell_sharded(CellParams { n, p, epsilon }, runs, seed, shards))
        .map_err(to_py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("p", r.p)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("noise_std", r.noise_std())?;
    d.set_item("avg_err_naive", r.avg_err_naive)?;
    d.set_item("avg_err_naive_analytic", r.avg_err_naive_analytic)?;
    d.set_item("avg_err_bayes", r.avg_err_bayes)?;
    d.set_item("prob_bayes_better", r.prob_bayes_better())?;
    d.set_item("se_naive", r.se_naive)?;
    d.set_item("se_bayes", r.se_bayes)?;
    d.set_item("ties", r.ties)?;
    d.set_item("runs", r.runs)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Runs a full sweep and returns the CSV table as a string.
#[pyfunction]
#[pyo3(signature = (n_values, p_values, epsilon_values, runs, seed, shards = simulation::DEFAULT_SHARDS))]
fn run_sweep_csv(
    py: Python<'_>,
    n_values: Vec<u64>,
    p_values: Vec<f64>,
    epsilon_values: Vec<f64>,
    runs: u64,
    seed: u64,
    shards: usize,
) -> PyResult<String> {
    let config = dpbayes::SweepConfig {
        n_values,
        p_values,
        epsilon_values,
        runs,
        seed,
        shards,
    };
    let result = py.detach(|| dpbayes::run_sweep(&config)).map_err(to_py_err)?;
    if let Some(f) = result.failures.first() {
        return Err(to_py_err(f.error.clone()));
    }
    Ok(result.to_csv())
}

#[pymodule]
#[pyo3(name = "dpbayes")]
fn dpbayes_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPrivacyLevel>()?;
    m.add_class::<PyBinomialPrior>()?;
    m.add_class::<PyBayesEstimator>()?;
    m.add_class::<PyRecordSet>()?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(naive_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(bayes_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(posterior, m)?)?;
    m.add_function(wrap_pyfunction!(out_of_range_probability, m)?)?;
    m.add_function(wrap_pyfunction!(out_of_range_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(dp_ratio_check, m)?)?;
    m.add_function(wrap_pyfunction!(uncertainty_widths, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_naive_error, m)?)?;
    m.add_function(wrap_pyfunction!(run_cell, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep_csv, m)?)?;
    m.add("CSV_HEADER", simulation::CSV_HEADER)?;
    Ok(())
}
