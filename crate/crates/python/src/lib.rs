//! Python bindings: matrices cross the boundary as nested lists of floats
//! (real part, optional imaginary part), sequences as `Sequence` objects or
//! their JSON text.

use lebesgue::ell1::{self, L1Sequence};
use lebesgue::functional::{self, NormalFunctional};
use lebesgue::{engine, parallel, psd, CMatrix, Error, HermitianMatrix, ToleranceConfig, C64};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    if e.is_invalid_input() {
        PyValueError::new_err(e.to_string())
    } else if matches!(e, Error::NoConvergence { .. } | Error::OracleDisagreement { .. }) {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn config(tol: Option<f64>, psd_tol: Option<f64>, rank_cutoff: Option<f64>, max_iters: Option<usize>) -> PyResult<ToleranceConfig> {
    let d = ToleranceConfig::default();
    let cfg = ToleranceConfig {
        conv_tol: tol.unwrap_or(d.conv_tol),
        psd_tol: psd_tol.unwrap_or(d.psd_tol),
        rank_cutoff: rank_cutoff.unwrap_or(d.rank_cutoff),
        max_iters: max_iters.unwrap_or(d.max_iters),
    };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

fn matrix_from_rows(real: Vec<Vec<f64>>, imag: Option<Vec<Vec<f64>>>) -> PyResult<CMatrix> {
    let json = lebesgue::formats::MatrixJson {
        dim: real.len(),
        real,
        imag,
    };
    json.to_matrix().map_err(to_py)
}

fn rows(m: &CMatrix, part: fn(&C64) -> f64) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| part(&m[(i, j)])).collect()).collect()
}

/// Positive semidefinite matrix.
#[pyclass(name = "PsdMatrix", module = "lebesgue_py")]
struct PyPsd {
    inner: psd::PsdMatrix,
}

#[pymethods]
impl PyPsd {
    #[new]
    #[pyo3(signature = (real, imag=None, psd_tol=None))]
    fn new(real: Vec<Vec<f64>>, imag: Option<Vec<Vec<f64>>>, psd_tol: Option<f64>) -> PyResult<Self> {
        let cfg = config(None, psd_tol, None, None)?;
        let m = matrix_from_rows(real, imag)?;
        Ok(Self {
            inner: psd::PsdMatrix::from_matrix(m, &cfg).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn diag(values: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: psd::PsdMatrix::diag(&values).map_err(to_py)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn real(&self) -> Vec<Vec<f64>> {
        rows(self.inner.matrix(), |z| z.re)
    }

    fn imag(&self) -> Vec<Vec<f64>> {
        rows(self.inner.matrix(), |z| z.im)
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    fn trace(&self) -> f64 {
        self.inner.trace()
    }

    #[pyo3(signature = (rank_cutoff=None))]
    fn rank(&self, rank_cutoff: Option<f64>) -> PyResult<usize> {
        Ok(self.inner.rank(&config(None, None, rank_cutoff, None)?))
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    fn __repr__(&self) -> String {
        format!("PsdMatrix(dim={}, trace={})", self.inner.dim(), self.inner.trace())
    }
}

/// Summable nonnegative sequence: finite prefix plus optional closed-form tail.
#[pyclass(name = "Sequence", module = "lebesgue_py")]
struct PySequence {
    inner: L1Sequence,
}

#[pymethods]
impl PySequence {
    /// `tail` is a JSON object such as `{"type": "geometric", "a": 1, "r": 0.5}`.
    #[new]
    #[pyo3(signature = (prefix, tail=None))]
    fn new(prefix: Vec<f64>, tail: Option<&str>) -> PyResult<Self> {
        let tail = tail
            .map(serde_json::from_str)
            .transpose()
            .map_err(|e| PyValueError::new_err(format!("malformed tail: {e}")))?;
        Ok(Self {
            inner: L1Sequence::new(prefix, tail).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn geometric(a: f64, r: f64) -> PyResult<Self> {
        Ok(Self {
            inner: L1Sequence::geometric(a, r).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: lebesgue::formats::parse_sequence(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("plain data serialises")
    }

    /// Value at the 1-based index `n`.
    fn value(&self, n: u64) -> PyResult<f64> {
        if n == 0 {
            return Err(PyValueError::new_err("indices start at 1"));
        }
        Ok(self.inner.value(n))
    }

    fn sum(&self) -> f64 {
        self.inner.sum()
    }

    fn truncate(&self, n: usize) -> PyResult<PyPsd> {
        Ok(PyPsd {
            inner: self.inner.truncate_to_matrix(n).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Sequence({})", self.to_json())
    }
}

#[pyfunction]
#[pyo3(signature = (s, t, rank_cutoff=None))]
fn parallel_sum(s: &PyPsd, t: &PyPsd, rank_cutoff: Option<f64>) -> PyResult<PyPsd> {
    let cfg = config(None, None, rank_cutoff, None)?;
    Ok(PyPsd {
        inner: parallel::parallel_sum(&s.inner, &t.inner, &cfg).map_err(to_py)?,
    })
}

#[pyfunction]
fn is_singular_pair(s: &PyPsd, t: &PyPsd) -> PyResult<bool> {
    parallel::is_singular_pair(&s.inner, &t.inner, &ToleranceConfig::default()).map_err(to_py)
}

/// Smallest `c` with `S <= cT`, or `None`.
#[pyfunction]
fn is_dominated(s: &PyPsd, t: &PyPsd) -> PyResult<Option<f64>> {
    engine::is_dominated(&s.inner, &t.inner, &ToleranceConfig::default()).map_err(to_py)
}

/// Returns `(ac, sing, gaps)` where `gaps` are the iteration gaps.
#[pyfunction]
#[pyo3(signature = (s, t, tol=None, psd_tol=None, rank_cutoff=None, max_iters=None))]
fn decompose(
    s: &PyPsd,
    t: &PyPsd,
    tol: Option<f64>,
    psd_tol: Option<f64>,
    rank_cutoff: Option<f64>,
    max_iters: Option<usize>,
) -> PyResult<(PyPsd, PyPsd, Vec<f64>)> {
    let cfg = config(tol, psd_tol, rank_cutoff, max_iters)?;
    let dec = engine::decompose(&s.inner, &t.inner, &cfg).map_err(to_py)?;
    let gaps = dec.iteration.steps.iter().map(|s| s.gap).collect();
    Ok((PyPsd { inner: dec.ac }, PyPsd { inner: dec.sing }, gaps))
}

/// `(unique, c)` for the decomposition of `S` relative to `T`.
#[pyfunction]
fn uniqueness(s: &PyPsd, t: &PyPsd) -> PyResult<(bool, Option<f64>)> {
    let cert = engine::uniqueness_certificate(&s.inner, &t.inner, &ToleranceConfig::default()).map_err(to_py)?;
    Ok((cert.unique, cert.c))
}

/// `(unique, c)` for diagonal operators given by sequences.
#[pyfunction]
fn diag_uniqueness(s: &PySequence, t: &PySequence) -> PyResult<(bool, Option<f64>)> {
    let (unique, cert) = ell1::diag_uniqueness(&s.inner, &t.inner).map_err(to_py)?;
    Ok((unique, cert.bound()))
}

/// `(T, S, certificate_json)` with `S` absolutely continuous but not dominated.
#[pyfunction]
fn theorem_b_instance(lam: &PySequence) -> PyResult<(PySequence, PySequence, String)> {
    let (t, s, cert) = ell1::theorem_b_instance(&lam.inner).map_err(to_py)?;
    let cert = serde_json::to_string(&cert).expect("plain data serialises");
    Ok((PySequence { inner: t }, PySequence { inner: s }, cert))
}

/// Estimates of the Krein-von Neumann supremum for `f_T` along ranks in `schedule`.
#[pyfunction]
#[pyo3(signature = (t, x, schedule, x_imag=None))]
fn kvn_sup_estimate(t: &PyPsd, x: Vec<Vec<f64>>, schedule: Vec<usize>, x_imag: Option<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
    let x = HermitianMatrix::new(matrix_from_rows(x, x_imag)?).map_err(to_py)?;
    let f = NormalFunctional::from_matrix(t.inner.clone());
    functional::kvn_sup_estimate(&f, &x, &schedule, &ToleranceConfig::default()).map_err(to_py)
}

#[pymodule]
fn lebesgue_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPsd>()?;
    m.add_class::<PySequence>()?;
    m.add_function(wrap_pyfunction!(parallel_sum, m)?)?;
    m.add_function(wrap_pyfunction!(is_singular_pair, m)?)?;
    m.add_function(wrap_pyfunction!(is_dominated, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(uniqueness, m)?)?;
    m.add_function(wrap_pyfunction!(diag_uniqueness, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_b_instance, m)?)?;
    m.add_function(wrap_pyfunction!(kvn_sup_estimate, m)?)?;
    Ok(())
}
