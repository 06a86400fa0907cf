//! Python bindings: the direction and frame solvers, merit evaluation, and
//! the Monte Carlo simulators, with plain-Python types at the boundary
//! (half-integers as strings like `"1/2"` or floats, amplitudes as complex
//! lists).

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spinframe::direction;
use spinframe::frame;
use spinframe::numerics;
use spinframe::simulate;
use spinframe::spinmath;
use spinframe::spinmath::HalfInt;

fn half_int_from_py(value: &Bound<'_, PyAny>) -> PyResult<HalfInt> {
    if let Ok(s) = value.extract::<String>() {
        return s
            .parse::<HalfInt>()
            .map_err(|e| PyValueError::new_err(e.to_string()));
    }
    if let Ok(i) = value.extract::<i64>() {
        return Ok(HalfInt::from_int(i as i32));
    }
    if let Ok(f) = value.extract::<f64>() {
        let twice = 2.0 * f;
        if twice.fract() != 0.0 {
            return Err(PyValueError::new_err(format!(
                "{f} is not a half-integer"
            )));
        }
        return Ok(HalfInt::from_twice(twice as i32));
    }
    Err(PyValueError::new_err(
        "expected an int, float, or string like \"1/2\"",
    ))
}

fn direction_err(e: direction::DirectionError) -> PyErr {
    match e {
        direction::DirectionError::InvalidIndex(_) => PyValueError::new_err(e.to_string()),
        direction::DirectionError::Numerics(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn frame_err(e: frame::FrameError) -> PyErr {
    match e {
        frame::FrameError::Numerics(_) | frame::FrameError::DegenerateBlock { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn merit_kind(name: &str) -> PyResult<frame::MeritKind> {
    match name {
        "z" => Ok(frame::MeritKind::ZAxis),
        "xy" => Ok(frame::MeritKind::XYAxes),
        "xyz" => Ok(frame::MeritKind::AllAxes),
        other => Err(PyValueError::new_err(format!(
            "invalid merit {other:?} (expected \"z\", \"xy\", or \"xyz\")"
        ))),
    }
}

/// Solved direction-transmission optimum.
#[pyclass(name = "DirectionResult")]
struct PyDirectionResult {
    #[pyo3(get)]
    n_spins: u32,
    /// Magnetic index as a float (e.g. 0.5).
    #[pyo3(get)]
    m: f64,
    /// Optimal coefficients over j = m, m+1, …, N/2.
    #[pyo3(get)]
    coeffs: Vec<f64>,
    /// ⟨cos χ⟩ at the optimum.
    #[pyo3(get)]
    x_mean: f64,
    #[pyo3(get)]
    fidelity: f64,
    signal: direction::DirectionSignal,
}

#[pymethods]
impl PyDirectionResult {
    /// Outcome density p(x) of the measured direction cosine.
    fn density(&self, x: f64) -> f64 {
        direction::outcome_density(&self.signal, x)
    }

    fn __repr__(&self) -> String {
        format!(
            "DirectionResult(n_spins={}, m={}, fidelity={:.12})",
            self.n_spins, self.m, self.fidelity
        )
    }
}

/// Converged frame-transmission optimum.
#[pyclass(name = "FrameResult")]
struct PyFrameResult {
    #[pyo3(get)]
    n: u32,
    #[pyo3(get)]
    merit_kind: String,
    #[pyo3(get)]
    merit: f64,
    /// (cos ωx, cos ωy, cos ωz); x and y are the common average.
    #[pyo3(get)]
    per_axis: (f64, f64, f64),
    #[pyo3(get)]
    mse_total: f64,
    #[pyo3(get)]
    iters: u32,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    alice: Vec<Complex64>,
    #[pyo3(get)]
    bob: Vec<Complex64>,
}

#[pymethods]
impl PyFrameResult {
    fn __repr__(&self) -> String {
        format!(
            "FrameResult(n={}, merit_kind={:?}, merit={:.12}, converged={})",
            self.n, self.merit_kind, self.merit, self.converged
        )
    }
}

/// Monte Carlo estimate with its analytic reference.
#[pyclass(name = "Estimate")]
struct PyEstimate {
    #[pyo3(get)]
    mean: f64,
    #[pyo3(get)]
    stderr: f64,
    #[pyo3(get)]
    shots: u64,
    #[pyo3(get)]
    analytic: f64,
    #[pyo3(get)]
    sigma_distance: f64,
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(mean={:.8}, stderr={:.2e}, analytic={:.8}, sigma={:.2})",
            self.mean, self.stderr, self.analytic, self.sigma_distance
        )
    }
}

impl From<simulate::EstimateReport> for PyEstimate {
    fn from(r: simulate::EstimateReport) -> Self {
        PyEstimate {
            mean: r.mean,
            stderr: r.stderr,
            shots: r.shots,
            analytic: r.analytic,
            sigma_distance: r.sigma_distance,
        }
    }
}

/// Dimension of the accessible Hilbert space for N spins (each j counted
/// once).
#[pyfunction]
fn hilbert_dim(n_spins: u32) -> u64 {
    spinmath::hilbert_dim(n_spins)
}

/// Parallel-spin baseline fidelity (N+1)/(N+2).
#[pyfunction]
fn mp_baseline(n_spins: u32) -> f64 {
    direction::mp_baseline(n_spins)
}

/// Jacobi polynomial P_n^{(a,b)}(x).
#[pyfunction]
fn jacobi_poly(n: u32, a: u32, b: u32, x: f64) -> f64 {
    spinmath::jacobi_poly(n, a, b, x)
}

/// Wigner small-d matrix d^j(β) as nested lists, rows/cols ordered
/// m = j, j-1, …, -j.
#[pyfunction]
fn wigner_small_d(j: &Bound<'_, PyAny>, beta: f64) -> PyResult<Vec<Vec<f64>>> {
    let j = half_int_from_py(j)?;
    if !j.is_valid_j() {
        return Err(PyValueError::new_err("j must be non-negative"));
    }
    let d = spinmath::wigner_small_d(j, beta);
    Ok(d.rows().into_iter().map(|r| r.to_vec()).collect())
}

/// Optimal direction signal for N spins at magnetic index m
/// (default: 0 for even N, 1/2 for odd N).
#[pyfunction]
#[pyo3(signature = (n_spins, m = None, tol = 1e-12))]
fn direction_solve(
    n_spins: u32,
    m: Option<&Bound<'_, PyAny>>,
    tol: f64,
) -> PyResult<PyDirectionResult> {
    let m = match m {
        Some(v) => half_int_from_py(v)?,
        None => {
            if n_spins.is_multiple_of(2) {
                HalfInt::ZERO
            } else {
                HalfInt::HALF
            }
        }
    };
    let sol = direction::solve_optimal(n_spins, m, tol).map_err(direction_err)?;
    Ok(PyDirectionResult {
        n_spins,
        m: m.value(),
        coeffs: sol.signal.coeffs().to_vec(),
        x_mean: sol.x_mean,
        fidelity: sol.fidelity,
        signal: sol.signal,
    })
}

/// Max deviation of the numerically integrated POVM from the identity.
#[pyfunction]
#[pyo3(signature = (n_spins, m = None, quad_order = 40, phi_points = 64))]
fn povm_completeness_check(
    n_spins: u32,
    m: Option<&Bound<'_, PyAny>>,
    quad_order: usize,
    phi_points: usize,
) -> PyResult<f64> {
    let m = match m {
        Some(v) => half_int_from_py(v)?,
        None => {
            if n_spins.is_multiple_of(2) {
                HalfInt::ZERO
            } else {
                HalfInt::HALF
            }
        }
    };
    direction::povm_completeness_check(n_spins, m, quad_order, phi_points).map_err(direction_err)
}

/// Alternating optimization of the frame-transmission merit
/// ("z", "xy", or "xyz").
#[pyfunction]
#[pyo3(signature = (n, merit = "xyz", restarts = 5, tol = 1e-9, max_iters = 500, seed = 0))]
fn frame_optimize(
    n: u32,
    merit: &str,
    restarts: u32,
    tol: f64,
    max_iters: u32,
    seed: u64,
) -> PyResult<PyFrameResult> {
    let kind = merit_kind(merit)?;
    let options = frame::OptimizeOptions {
        tol,
        max_iters,
        restarts,
        seed,
        ..frame::OptimizeOptions::default()
    };
    let sol = frame::alternating_optimize(n, kind, &options).map_err(frame_err)?;
    Ok(PyFrameResult {
        n,
        merit_kind: merit.to_string(),
        merit: sol.merit,
        per_axis: (sol.per_axis[0], sol.per_axis[1], sol.per_axis[2]),
        mse_total: sol.mse_total,
        iters: sol.iters,
        converged: sol.converged,
        alice: sol.alice.amplitudes().to_vec(),
        bob: sol.bob.amplitudes().to_vec(),
    })
}

/// Contraction of the analytic merit tensor with explicit amplitudes
/// (layout: block j at offset j², m descending within the block).
#[pyfunction]
fn merit_expectation(
    n: u32,
    merit: &str,
    alice: Vec<Complex64>,
    bob: Vec<Complex64>,
) -> PyResult<f64> {
    let kind = merit_kind(merit)?;
    let tensor = frame::build_merit_tensor(kind, n).map_err(frame_err)?;
    let alice = frame::FrameSignal::new(n, alice).map_err(frame_err)?;
    let bob = frame::FiducialVector::new(n, bob).map_err(frame_err)?;
    frame::merit_expectation(&tensor, &alice, &bob).map_err(frame_err)
}

/// Split strategy vs collective measurement at N spins; returns
/// (split_per_axis_mse, collective_per_axis_mse, bbm_reference).
#[pyfunction]
fn split_strategy_compare(n_spins: u32) -> PyResult<(f64, f64, f64)> {
    let cmp = frame::split_strategy_compare(n_spins).map_err(frame_err)?;
    Ok((
        cmp.split_per_axis_mse,
        cmp.collective_per_axis_mse,
        cmp.bbm_reference,
    ))
}

/// Monte Carlo fidelity estimate for the optimal N-spin direction signal.
#[pyfunction]
#[pyo3(signature = (n_spins, shots, seed, m = None, workers = 1))]
fn simulate_direction(
    n_spins: u32,
    shots: u64,
    seed: u64,
    m: Option<&Bound<'_, PyAny>>,
    workers: usize,
) -> PyResult<PyEstimate> {
    let m = match m {
        Some(v) => half_int_from_py(v)?,
        None => {
            if n_spins.is_multiple_of(2) {
                HalfInt::ZERO
            } else {
                HalfInt::HALF
            }
        }
    };
    let sol = direction::solve_optimal(n_spins, m, 1e-12).map_err(direction_err)?;
    let config = simulate::SimConfig::new(shots, seed).with_workers(workers);
    let samples = simulate::sample_direction_outcomes(&sol.signal, &config);
    let report = simulate::estimate_direction_fidelity(&samples, sol.fidelity)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(report.into())
}

/// Monte Carlo merit estimate for the optimal level-n frame pair.
#[pyfunction]
#[pyo3(signature = (n, merit, shots, seed, workers = 1))]
fn simulate_frame(
    n: u32,
    merit: &str,
    shots: u64,
    seed: u64,
    workers: usize,
) -> PyResult<PyEstimate> {
    let kind = merit_kind(merit)?;
    let options = frame::OptimizeOptions {
        restarts: 2,
        ..frame::OptimizeOptions::default()
    };
    let sol = frame::alternating_optimize(n, kind, &options).map_err(frame_err)?;
    let config = simulate::SimConfig::new(shots, seed).with_workers(workers);
    let samples = simulate::sample_frame_outcomes(&sol.alice, &sol.bob, &config)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let report = simulate::estimate_frame_merit(&samples, kind, sol.merit)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(report.into())
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[pyfunction]
fn gauss_legendre(order: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    if order == 0 {
        return Err(PyValueError::new_err("order must be at least 1"));
    }
    let rule = numerics::gauss_legendre(order);
    Ok((rule.nodes, rule.weights))
}

#[pymodule]
fn spinframe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDirectionResult>()?;
    m.add_class::<PyFrameResult>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(hilbert_dim, m)?)?;
    m.add_function(wrap_pyfunction!(mp_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(jacobi_poly, m)?)?;
    m.add_function(wrap_pyfunction!(wigner_small_d, m)?)?;
    m.add_function(wrap_pyfunction!(direction_solve, m)?)?;
    m.add_function(wrap_pyfunction!(povm_completeness_check, m)?)?;
    m.add_function(wrap_pyfunction!(frame_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(merit_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(split_strategy_compare, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_direction, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_frame, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_legendre, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
