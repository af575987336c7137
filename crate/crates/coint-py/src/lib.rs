//! Python bindings: cointegration testing, segmentation and simulation
//! over plain lists of floats. All library errors surface as ValueError.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use coint_core::{
    bayes_test, classical_test, compute_residuals, map_phi, map_regimes, ols_fit, simulate,
    switch_em, switch_filter, CointError, DfNull, EmConfig, SeriesPair, SimSpec, SwitchConfig,
    XProcess,
};

fn to_py_err(e: CointError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pair(x: Vec<f64>, y: Vec<f64>) -> PyResult<SeriesPair> {
    SeriesPair::new(x, y).map_err(to_py_err)
}

/// Fitted regression y = alpha + beta * x with innovation variance.
#[pyclass(name = "RegressionFit", frozen)]
struct PyRegressionFit {
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    beta: f64,
    #[pyo3(get)]
    sigma2: f64,
}

#[pymethods]
impl PyRegressionFit {
    fn __repr__(&self) -> String {
        format!(
            "RegressionFit(alpha={}, beta={}, sigma2={})",
            self.alpha, self.beta, self.sigma2
        )
    }
}

/// Outcome of the Bayes-factor cointegration test.
#[pyclass(name = "TestResult", frozen)]
struct PyTestResult {
    #[pyo3(get)]
    log_l_rw: f64,
    #[pyo3(get)]
    log_l_c: f64,
    #[pyo3(get)]
    log_bayes_factor: f64,
    #[pyo3(get)]
    threshold_log_c: f64,
    #[pyo3(get)]
    cointegrated: bool,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    beta: f64,
    #[pyo3(get)]
    sigma2: f64,
    #[pyo3(get)]
    phi_mean: f64,
    #[pyo3(get)]
    phi_m2: f64,
}

#[pymethods]
impl PyTestResult {
    fn __repr__(&self) -> String {
        format!(
            "TestResult(cointegrated={}, log_bayes_factor={})",
            self.cointegrated, self.log_bayes_factor
        )
    }
}

/// Outcome of the classical Dickey-Fuller test on OLS residuals.
#[pyclass(name = "ClassicalResult", frozen)]
struct PyClassicalResult {
    #[pyo3(get)]
    tau: f64,
    #[pyo3(get)]
    critical_value: f64,
    #[pyo3(get)]
    reject_unit_root: bool,
}

#[pymethods]
impl PyClassicalResult {
    fn __repr__(&self) -> String {
        format!(
            "ClassicalResult(tau={}, critical_value={}, reject_unit_root={})",
            self.tau, self.critical_value, self.reject_unit_root
        )
    }
}

/// Per-time segmentation of a pair into cointegrated and random-walk
/// regimes. Vectors cover t = 2..=T.
#[pyclass(name = "SegmentResult", frozen)]
struct PySegmentResult {
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    beta: f64,
    #[pyo3(get)]
    sigma2: f64,
    #[pyo3(get)]
    loglik: f64,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    filtered_rw_prob: Vec<f64>,
    #[pyo3(get)]
    smoothed_rw_prob: Vec<f64>,
    #[pyo3(get)]
    regimes: Vec<u32>,
    #[pyo3(get)]
    phi: Vec<f64>,
}

#[pymethods]
impl PySegmentResult {
    fn __repr__(&self) -> String {
        format!(
            "SegmentResult(loglik={}, steps={})",
            self.loglik,
            self.regimes.len()
        )
    }
}

/// OLS fit of y on x.
#[pyfunction(name = "ols_fit")]
fn py_ols_fit(x: Vec<f64>, y: Vec<f64>) -> PyResult<PyRegressionFit> {
    let p = ols_fit(&pair(x, y)?)
        .and_then(|f| f.params())
        .map_err(to_py_err)?;
    Ok(PyRegressionFit {
        alpha: p.alpha,
        beta: p.beta,
        sigma2: p.sigma2,
    })
}

/// Bayes-factor cointegration test; cointegrated iff the log Bayes
/// factor is below `threshold_log_c`.
#[pyfunction(name = "bayes_test", signature = (x, y, threshold_log_c=2.0, max_iters=500, rel_tol=1e-9))]
fn py_bayes_test(
    x: Vec<f64>,
    y: Vec<f64>,
    threshold_log_c: f64,
    max_iters: usize,
    rel_tol: f64,
) -> PyResult<PyTestResult> {
    let cfg = EmConfig { max_iters, rel_tol };
    let r = bayes_test(&pair(x, y)?, &cfg, threshold_log_c).map_err(to_py_err)?;
    Ok(PyTestResult {
        log_l_rw: r.log_l_rw,
        log_l_c: r.log_l_c,
        log_bayes_factor: r.log_bayes_factor,
        threshold_log_c: r.threshold_log_c,
        cointegrated: r.cointegrated,
        alpha: r.fitted.alpha,
        beta: r.fitted.beta,
        sigma2: r.fitted.sigma2,
        phi_mean: r.phi_moments.m1,
        phi_m2: r.phi_moments.m2,
    })
}

/// Classical OLS + Dickey-Fuller test at 5% significance, with Monte
/// Carlo null calibration (`calib_n` random walks).
#[pyfunction(name = "classical_test", signature = (x, y, calib_n=10_000, seed=0))]
fn py_classical_test(
    x: Vec<f64>,
    y: Vec<f64>,
    calib_n: usize,
    seed: u64,
) -> PyResult<PyClassicalResult> {
    let p = pair(x, y)?;
    let null = DfNull::calibrate(p.len(), calib_n, seed);
    let r = classical_test(&p, &null).map_err(to_py_err)?;
    Ok(PyClassicalResult {
        tau: r.tau,
        critical_value: r.critical_value,
        reject_unit_root: r.reject_unit_root,
    })
}

/// Segment a pair into cointegrated and random-walk regimes.
/// `reset_width` defaults to the range of the initial OLS residuals.
#[pyfunction(name = "segment", signature = (x, y, p_init_rw, p_rw_to_rw, p_c_to_c, reset_width=None, max_iters=500, rel_tol=1e-9))]
#[allow(clippy::too_many_arguments)]
fn py_segment(
    x: Vec<f64>,
    y: Vec<f64>,
    p_init_rw: f64,
    p_rw_to_rw: f64,
    p_c_to_c: f64,
    reset_width: Option<f64>,
    max_iters: usize,
    rel_tol: f64,
) -> PyResult<PySegmentResult> {
    let p = pair(x, y)?;
    let init = ols_fit(&p).and_then(|f| f.params()).map_err(to_py_err)?;
    let width = match reset_width {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(w) => {
            return Err(PyValueError::new_err(format!(
                "reset_width must be positive and finite, got {w}"
            )))
        }
        None => compute_residuals(&p, &init).range(),
    };
    let cfg = SwitchConfig {
        p_init_rw,
        p_rw_to_rw,
        p_c_to_c,
        reset_width: width,
    };
    let em_cfg = EmConfig { max_iters, rel_tol };
    let (params, smoothed, trace) = switch_em(&p, &init, &cfg, &em_cfg).map_err(to_py_err)?;
    let eps = compute_residuals(&p, &params);
    let filtered = switch_filter(&eps, params.sigma2, &cfg).map_err(to_py_err)?;
    let regimes = map_regimes(&smoothed);
    let phi = map_phi(&eps, params.sigma2, &regimes).map_err(to_py_err)?;
    Ok(PySegmentResult {
        alpha: params.alpha,
        beta: params.beta,
        sigma2: params.sigma2,
        loglik: filtered.loglik,
        converged: trace.converged,
        filtered_rw_prob: filtered.slices.iter().map(|s| s.log_rw.exp()).collect(),
        smoothed_rw_prob: smoothed.slices.iter().map(|s| s.rw_prob).collect(),
        regimes: regimes.iter().map(|&r| u32::from(r)).collect(),
        phi,
    })
}

/// Simulate a pair: x is a random walk and y = alpha + beta * x + eps
/// with AR(1) residuals (phi = 1 gives a random-walk residual).
#[pyfunction(name = "simulate", signature = (t, phi, alpha=0.0, beta=1.0, sigma2=1.0, seed=0))]
fn py_simulate(
    t: usize,
    phi: f64,
    alpha: f64,
    beta: f64,
    sigma2: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let spec = SimSpec {
        t_len: t,
        alpha,
        beta,
        sigma2,
        phi,
        x_process: XProcess::RandomWalk,
        seed,
    };
    let p = simulate(&spec).map_err(to_py_err)?;
    Ok((p.x().to_vec(), p.y().to_vec()))
}

#[pymodule]
fn coint_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRegressionFit>()?;
    m.add_class::<PyTestResult>()?;
    m.add_class::<PyClassicalResult>()?;
    m.add_class::<PySegmentResult>()?;
    m.add_function(wrap_pyfunction!(py_ols_fit, m)?)?;
    m.add_function(wrap_pyfunction!(py_bayes_test, m)?)?;
    m.add_function(wrap_pyfunction!(py_classical_test, m)?)?;
    m.add_function(wrap_pyfunction!(py_segment, m)?)?;
    m.add_function(wrap_pyfunction!(py_simulate, m)?)?;
    Ok(())
}
