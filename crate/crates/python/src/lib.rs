//! Python bindings: Hermitian matrices, trace functionals, the shrinkage
//! rules, partial coherence and the Monte-Carlo campaign driver.

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use speccoh::simlab::{run_campaign, Scenario};
use speccoh::{shrink_precision, shrink_spectral, trace_est, Error};

fn to_py(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Complex Hermitian matrix.
#[pyclass(name = "HermitianMatrix", frozen)]
struct PyHermitian {
    inner: speccoh::HermitianMatrix,
}

#[pymethods]
impl PyHermitian {
    /// Builds from a square list of rows of (complex) numbers.
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        speccoh::HermitianMatrix::from_rows(&rows)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn diagonal_matrix(diag: Vec<f64>) -> Self {
        Self {
            inner: speccoh::HermitianMatrix::from_real_diagonal(&diag),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        let p = self.inner.dim();
        (0..p).map(|j| (0..p).map(|k| self.inner.get(j, k)).collect()).collect()
    }

    fn invert(&self) -> PyResult<Self> {
        self.inner.invert().map(|inner| Self { inner }).map_err(to_py)
    }

    fn trace_powers(&self) -> PyResult<PyTraceSet> {
        self.inner.trace_powers().map(PyTraceSet::from).map_err(to_py)
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    fn __repr__(&self) -> String {
        format!("HermitianMatrix(dim={})", self.inner.dim())
    }
}

/// tr{S}, tr{S^2}, tr{S^-1}, tr{S^-2}.
#[pyclass(name = "TraceSet", frozen)]
struct PyTraceSet {
    inner: speccoh::TraceSet,
}

impl From<speccoh::TraceSet> for PyTraceSet {
    fn from(inner: speccoh::TraceSet) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyTraceSet {
    #[new]
    fn new(tr_s: f64, tr_s2: f64, tr_sinv: f64, tr_sinv2: f64) -> Self {
        speccoh::TraceSet::oracle(tr_s, tr_s2, tr_sinv, tr_sinv2).into()
    }

    #[getter]
    fn tr_s(&self) -> f64 {
        self.inner.tr_s
    }
    #[getter]
    fn tr_s2(&self) -> f64 {
        self.inner.tr_s2
    }
    #[getter]
    fn tr_sinv(&self) -> f64 {
        self.inner.tr_sinv
    }
    #[getter]
    fn tr_sinv2(&self) -> f64 {
        self.inner.tr_sinv2
    }
    #[getter]
    fn estimated(&self) -> bool {
        self.inner.provenance == speccoh::Provenance::Estimated
    }

    fn __repr__(&self) -> String {
        let t = &self.inner;
        format!(
            "TraceSet(tr_s={}, tr_s2={}, tr_sinv={}, tr_sinv2={}, {:?})",
            t.tr_s, t.tr_s2, t.tr_sinv, t.tr_sinv2, t.provenance
        )
    }
}

/// Affine shrinkage coefficients `alpha X + beta I`.
#[pyclass(name = "ShrinkageSolution", frozen)]
struct PySolution {
    inner: speccoh::ShrinkageSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }
    #[getter]
    fn eta(&self) -> Option<f64> {
        self.inner.eta
    }
    #[getter]
    fn rho(&self) -> Option<f64> {
        self.inner.rho
    }
    #[getter]
    fn clamped(&self) -> bool {
        self.inner.clamped
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!("ShrinkageSolution({}, alpha={}, beta={})", s.method, s.alpha, s.beta)
    }
}

fn sol(r: speccoh::Result<speccoh::ShrinkageSolution>) -> PyResult<PySolution> {
    r.map(|inner| PySolution { inner }).map_err(to_py)
}

#[pyfunction]
fn hs_oracle(t: &PyTraceSet, p: usize, k: usize) -> PyResult<PySolution> {
    sol(shrink_spectral::hs_oracle(&t.inner, p, k))
}

#[pyfunction]
fn qla_oracle(t: &PyTraceSet, p: usize, k: usize) -> PyResult<PySolution> {
    sol(shrink_spectral::qla_oracle(&t.inner, p, k))
}

#[pyfunction]
fn qlb_oracle(t: &PyTraceSet, p: usize, k: usize) -> PyResult<PySolution> {
    sol(shrink_spectral::qlb_oracle(&t.inner, p, k))
}

#[pyfunction]
fn hsp_oracle(t: &PyTraceSet, p: usize, k: usize) -> PyResult<PySolution> {
    sol(shrink_precision::hsp_oracle(&t.inner, p, k))
}

#[pyfunction]
fn qlp_oracle(t: &PyTraceSet, p: usize, k: usize) -> PyResult<PySolution> {
    sol(shrink_precision::qlp_oracle(&t.inner, p, k))
}

/// `alpha S_hat + beta I`.
#[pyfunction]
fn apply_affine(s_hat: &PyHermitian, solution: &PySolution) -> PyHermitian {
    PyHermitian {
        inner: shrink_spectral::apply_affine(&s_hat.inner, &solution.inner),
    }
}

/// `alpha S_hat^-1 + beta I`.
#[pyfunction]
fn apply_precision_affine(s_hat: &PyHermitian, solution: &PySolution) -> PyResult<PyHermitian> {
    shrink_precision::apply_precision_affine(&s_hat.inner, &solution.inner)
        .map(|inner| PyHermitian { inner })
        .map_err(to_py)
}

#[pyfunction]
fn estimate_traces(s_hat: &PyHermitian, k: usize) -> PyResult<PyTraceSet> {
    trace_est::estimate_traces(&s_hat.inner, k).map(PyTraceSet::from).map_err(to_py)
}

/// Squared partial coherence from a precision matrix, as a list of rows.
#[pyfunction]
fn partial_coherence(c: &PyHermitian) -> PyResult<Vec<Vec<f64>>> {
    let g = speccoh::partial_coherence(&c.inner).map_err(to_py)?;
    let p = g.dim();
    Ok((0..p).map(|j| (0..p).map(|k| g.get(j, k)).collect()).collect())
}

#[pyfunction]
fn prise(e_basic: f64, e_method: f64) -> PyResult<f64> {
    speccoh::prise(e_basic, e_method).map_err(to_py)
}

/// Sine tapers as K rows of length N.
#[pyfunction]
fn sine_tapers(n: usize, k: usize) -> PyResult<Vec<Vec<f64>>> {
    let t = speccoh::sine_tapers(n, k).map_err(to_py)?;
    let w = t.weights();
    Ok((0..k).map(|r| w.row(r).iter().copied().collect()).collect())
}

#[pyfunction]
fn bandwidth(k: usize, n: usize, dt: f64) -> f64 {
    speccoh::bandwidth(k, n, dt)
}

/// Multitaper spectral matrix of `x` (p rows of N samples) at `freq`.
#[pyfunction]
fn multitaper_spectral_matrix(x: Vec<Vec<f64>>, k: usize, freq: f64, dt: f64) -> PyResult<PyHermitian> {
    let p = x.len();
    let n = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("all channels must have the same length"));
    }
    let m = DMatrix::from_fn(p, n, |c, t| x[c][t]);
    let tapers = speccoh::sine_tapers(n, k).map_err(to_py)?;
    let j = speccoh::eigencoefficients(&m, &tapers, freq, dt).map_err(to_py)?;
    Ok(PyHermitian {
        inner: speccoh::spectral_matrix(&j),
    })
}

/// Runs the campaign described by a scenario JSON string and returns the
/// report as a JSON string.
#[pyfunction]
#[pyo3(signature = (scenario_json, seed=None))]
fn simulate(py: Python<'_>, scenario_json: &str, seed: Option<u64>) -> PyResult<String> {
    let scenario = Scenario::from_json(scenario_json).map_err(to_py)?;
    let cfg = scenario.config(seed).map_err(to_py)?;
    let model = scenario.build_model().map_err(to_py)?;
    let report = py
        .detach(|| run_campaign(&model, &cfg))
        .map_err(to_py)?
        .rounded();
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
pub fn pyspeccoh(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHermitian>()?;
    m.add_class::<PyTraceSet>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(hs_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(qla_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(qlb_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(hsp_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(qlp_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(apply_affine, m)?)?;
    m.add_function(wrap_pyfunction!(apply_precision_affine, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_traces, m)?)?;
    m.add_function(wrap_pyfunction!(partial_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(prise, m)?)?;
    m.add_function(wrap_pyfunction!(sine_tapers, m)?)?;
    m.add_function(wrap_pyfunction!(bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(multitaper_spectral_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
