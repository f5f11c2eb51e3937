use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use ergodim::dimension::{verify_main_inequality, Direction, VerifyConfig};
use ergodim::entropy::{block_entropy_rate, brin_katok_local, BrinKatokMode, McBudget};
use ergodim::harness::{run_experiment, ExperimentConfig};
use ergodim::lyapunov::{estimate_chi, ChiConfig};
use ergodim::partitions::{delta_constant, hamming_ball_bound_check, FinitePartition};
use ergodim::systems::{sample_point, MeasureOracle, SystemDescriptor, WeightSequence};

fn err(e: ergodim::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serialize through JSON into plain Python objects.
fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

#[pyclass(name = "System", frozen)]
struct PySystem(SystemDescriptor);

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn cat_map() -> Self {
        PySystem(SystemDescriptor::cat_map())
    }

    #[staticmethod]
    fn toral(matrix: [[i64; 2]; 2]) -> PyResult<Self> {
        SystemDescriptor::toral(matrix).map(PySystem).map_err(err)
    }

    #[staticmethod]
    fn translation(dx: f64, dy: f64) -> Self {
        PySystem(SystemDescriptor::translation(dx, dy))
    }

    #[staticmethod]
    #[pyo3(signature = (alphabet_size = 2, window = 64))]
    fn dyadic_shift(alphabet_size: u8, window: i64) -> Self {
        PySystem(SystemDescriptor::dyadic_shift(alphabet_size, window))
    }

    /// Shift on the weighted space with `a_k = 1/(k^2 + 1)`.
    #[staticmethod]
    #[pyo3(signature = (window = 256))]
    fn weighted_shift(window: i64) -> Self {
        PySystem(SystemDescriptor::weighted_shift(WeightSequence::default(), window))
    }

    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let sys: SystemDescriptor = serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?;
        sys.validate().map_err(err)?;
        Ok(PySystem(sys))
    }

    fn inverse(&self) -> Self {
        PySystem(self.0.clone().inverse())
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).unwrap()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn __repr__(&self) -> String {
        format!("System({})", self.to_json())
    }
}

#[pyclass(name = "Oracle", frozen)]
struct PyOracle(MeasureOracle);

#[pymethods]
impl PyOracle {
    #[staticmethod]
    fn lebesgue() -> Self {
        PyOracle(MeasureOracle::LebesgueTorus)
    }

    #[staticmethod]
    fn bernoulli(p: Vec<f64>) -> PyResult<Self> {
        MeasureOracle::bernoulli(p).map(PyOracle).map_err(err)
    }

    #[staticmethod]
    fn markov(transition: Vec<Vec<f64>>) -> PyResult<Self> {
        MeasureOracle::markov(transition).map(PyOracle).map_err(err)
    }

    fn entropy_rate(&self) -> PyResult<f64> {
        self.0.entropy_rate().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Oracle({})", serde_json::to_string(&self.0).unwrap())
    }
}

#[pyfunction]
#[pyo3(signature = (system, oracle, r_schedule, n_max = 64, sample_points = 1000, probes = 64, seed = 0))]
#[pyo3(name = "estimate_chi")]
fn estimate_chi_py(
    py: Python<'_>,
    system: &PySystem,
    oracle: &PyOracle,
    r_schedule: Vec<f64>,
    n_max: usize,
    sample_points: usize,
    probes: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let cfg = ChiConfig { r_schedule, n_schedule: (1..=n_max).collect(), sample_points, probes, seed };
    let est = py.detach(|| estimate_chi(&system.0, &oracle.0, &cfg)).map_err(err)?;
    to_py(py, &est)
}

/// `(1/n) H(α_0^{n-1})` for the time-zero partition.
#[pyfunction]
#[pyo3(signature = (oracle, n, alphabet_size = 2, mc_samples = 100_000, seed = 0))]
#[pyo3(name = "block_entropy_rate")]
fn block_entropy_rate_py(py: Python<'_>, oracle: &PyOracle, n: usize, alphabet_size: u8, mc_samples: usize, seed: u64) -> PyResult<f64> {
    let alpha = FinitePartition::time_zero(alphabet_size);
    py.detach(|| block_entropy_rate(&oracle.0, &alpha, n, McBudget { samples: mc_samples, seed }))
        .map(|e| e.value)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (system, oracle, eps_schedule, n_schedule, monte_carlo_samples = None, seed = 0))]
fn brin_katok(
    py: Python<'_>,
    system: &PySystem,
    oracle: &PyOracle,
    eps_schedule: Vec<f64>,
    n_schedule: Vec<usize>,
    monte_carlo_samples: Option<usize>,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let mode = match monte_carlo_samples {
        Some(samples) => BrinKatokMode::MonteCarlo { samples },
        None => BrinKatokMode::ExactCylinder,
    };
    let rep = py
        .detach(|| {
            let x = sample_point(&system.0, &oracle.0, seed)?;
            brin_katok_local(&system.0, &oracle.0, &x, &eps_schedule, &n_schedule, mode, seed.wrapping_add(1))
        })
        .map_err(err)?;
    to_py(py, &rep)
}

/// Compare the unstable-set dimension proxy with `h / χ`.
#[pyfunction]
#[pyo3(signature = (system, oracle, delta, scales, r_schedule, n_max = 24, sample_points = 200, probes = 32,
                    budget = 4096, base_points = 20, backward = false, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn verify(
    py: Python<'_>,
    system: &PySystem,
    oracle: &PyOracle,
    delta: f64,
    scales: Vec<f64>,
    r_schedule: Vec<f64>,
    n_max: usize,
    sample_points: usize,
    probes: usize,
    budget: usize,
    base_points: usize,
    backward: bool,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let cfg = VerifyConfig {
        chi: ChiConfig { r_schedule, n_schedule: (1..=n_max).collect(), sample_points, probes, seed },
        delta,
        back_horizon: 40,
        budget,
        base_points,
        scales,
        chi_floor: 0.05,
        slack_tolerance: 0.05,
        h_value: None,
        seed,
    };
    let dir = if backward { Direction::Backward } else { Direction::Forward };
    let rep = py.detach(|| verify_main_inequality(&system.0, &oracle.0, dir, &cfg)).map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction(name = "delta_constant")]
#[pyo3(signature = (eps, alphabet_size = 2))]
fn delta_constant_py(eps: f64, alphabet_size: usize) -> PyResult<f64> {
    delta_constant(eps, alphabet_size).map(|d| d.value).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, eps, alphabet_size = 2))]
fn hamming_ball(py: Python<'_>, n: usize, eps: f64, alphabet_size: usize) -> PyResult<Py<PyAny>> {
    let r = hamming_ball_bound_check(n, alphabet_size, eps).map_err(err)?;
    to_py(py, &r)
}

/// Run a TOML experiment config and return the report as a dict.
#[pyfunction]
fn run_config(py: Python<'_>, toml_text: &str) -> PyResult<Py<PyAny>> {
    let cfg = ExperimentConfig::from_toml(toml_text).map_err(err)?;
    let rep = py.detach(|| run_experiment(&cfg)).map_err(err)?;
    to_py(py, &rep)
}

#[pymodule]
#[pyo3(name = "ergodim")]
fn ergodim_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyOracle>()?;
    m.add_function(wrap_pyfunction!(estimate_chi_py, m)?)?;
    m.add_function(wrap_pyfunction!(block_entropy_rate_py, m)?)?;
    m.add_function(wrap_pyfunction!(brin_katok, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(delta_constant_py, m)?)?;
    m.add_function(wrap_pyfunction!(hamming_ball, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
