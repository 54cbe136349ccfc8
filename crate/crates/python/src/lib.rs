//! Python bindings. Structured results cross the boundary as JSON strings,
//! vectors as lists of floats and matrices as lists of rows.

use hgl::cli::{self, ExperimentConfig};
use hgl::harmonics::{self, MomentMethod};
use hgl::linalg::matrix_to_rows;
use hgl::volumes;
use nalgebra::DVector;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: hgl::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn vector(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

#[pyclass(name = "MeasureSpec", frozen)]
pub struct PyMeasureSpec {
    inner: hgl::MeasureSpec,
}

#[pymethods]
impl PyMeasureSpec {
    /// Parses the JSON form `{"kind", "dim", "params", "affine"}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn isotropize(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.isotropize().map_err(err)?.1 })
    }

    /// `(barycenter, covariance rows)`.
    fn moments(&self) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let m = self.inner.moments().map_err(err)?;
        Ok((m.barycenter.iter().copied().collect(), matrix_to_rows(m.covariance.as_matrix())))
    }

    fn __repr__(&self) -> String {
        format!("MeasureSpec({}, dim={})", self.inner.name(), self.inner.dim())
    }
}

#[pyclass(name = "LaplaceEvaluator", frozen)]
pub struct PyLaplaceEvaluator {
    inner: hgl::LaplaceEvaluator,
}

#[pymethods]
impl PyLaplaceEvaluator {
    /// `backend` is the JSON backend descriptor; closed form when omitted.
    #[new]
    #[pyo3(signature = (measure, backend=None))]
    fn new(measure: &PyMeasureSpec, backend: Option<&str>) -> PyResult<Self> {
        let backend = match backend {
            Some(b) => serde_json::from_str(b).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => hgl::Backend::ClosedForm,
        };
        let inner = hgl::LaplaceEvaluator::new(&measure.inner, backend).map_err(err)?;
        Ok(Self { inner })
    }

    fn value(&self, xi: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&vector(xi)).map_err(err)
    }

    fn grad(&self, xi: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.grad(&vector(xi)).map_err(err)?.iter().copied().collect())
    }

    fn hess(&self, xi: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix_to_rows(self.inner.hess(&vector(xi)).map_err(err)?.as_matrix()))
    }

    /// `(Λ*(x), argmax)`.
    fn legendre(&self, x: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
        let p = self.inner.legendre(&vector(x)).map_err(err)?;
        Ok((p.value, p.argmax.iter().copied().collect()))
    }
}

#[pyclass(name = "RiemannianPackage", frozen)]
pub struct PyRiemannianPackage {
    inner: hgl::RiemannianPackage,
}

#[pymethods]
impl PyRiemannianPackage {
    #[new]
    fn new(evaluator: &PyLaplaceEvaluator) -> PyResult<Self> {
        let inner = hgl::RiemannianPackage::primal(evaluator.inner.clone()).map_err(err)?;
        Ok(Self { inner })
    }

    fn metric(&self, p: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        self.inner.metric(&vector(p), &vector(u), &vector(v)).map_err(err)
    }

    fn psi(&self, p: Vec<f64>) -> PyResult<f64> {
        self.inner.psi(&vector(p)).map_err(err)
    }

    fn grad_psi_metric_norm(&self, p: Vec<f64>) -> PyResult<f64> {
        self.inner.grad_psi_metric_norm(&vector(p)).map_err(err)
    }

    fn distance_upper_bound(&self, xi: Vec<f64>, eta: Vec<f64>) -> PyResult<f64> {
        self.inner.distance_upper_bound(&vector(xi), &vector(eta)).map_err(err)
    }

    fn segment_length(&self, a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
        let curve = hgl::Curve::segment(&vector(a), &vector(b)).map_err(err)?;
        self.inner.path_length(&curve).map_err(err)
    }

    fn curvature(&self, p: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> PyResult<f64> {
        self.inner.curvature_probe(&vector(p), &vector(u), &vector(v)).map_err(err)
    }
}

/// Volume report as JSON; defaults as in the CLI.
#[pyfunction]
#[pyo3(signature = (evaluator, truncation_radius=None, grid=None))]
fn gromov_volume(evaluator: &PyLaplaceEvaluator, truncation_radius: Option<f64>, grid: Option<usize>) -> PyResult<String> {
    let spec = evaluator.inner.measure();
    let r = match truncation_radius {
        Some(r) => r,
        None => volumes::default_truncation_radius(spec).map_err(err)?,
    };
    let grid = grid.unwrap_or_else(|| volumes::default_grid(spec.dim()));
    json(&volumes::gromov_volume(&evaluator.inner, r, grid).map_err(err)?)
}

/// Thin-shell statistics as JSON.
#[pyfunction]
#[pyo3(signature = (measure, count, seed, tail_c=hgl::shell::DEFAULT_TAIL_C, workers=4))]
fn shell_stats(measure: &PyMeasureSpec, count: usize, seed: u64, tail_c: f64, workers: usize) -> PyResult<String> {
    json(&hgl::shell::shell_stats(&measure.inner, count, seed, tail_c, workers).map_err(err)?)
}

/// Exact sphere-integral comparison for the closed-form third moments.
#[pyfunction]
fn sphere_bound(measure: &PyMeasureSpec) -> PyResult<String> {
    let t = harmonics::third_moment(&measure.inner, MomentMethod::ClosedForm).map_err(err)?;
    json(&harmonics::prop37_check(&t).map_err(err)?)
}

/// Runs an experiment config (JSON text) and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config, workers=4))]
fn run_experiment(config: &str, workers: usize) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config).map_err(err)?;
    json(&cli::run(&cfg, workers).map_err(err)?)
}

#[pymodule]
fn pyhgl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMeasureSpec>()?;
    m.add_class::<PyLaplaceEvaluator>()?;
    m.add_class::<PyRiemannianPackage>()?;
    m.add_function(wrap_pyfunction!(gromov_volume, m)?)?;
    m.add_function(wrap_pyfunction!(shell_stats, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
