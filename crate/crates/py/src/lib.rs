//! Python bindings.

use std::sync::Arc;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use elastic_tep::coefficient::Coefficient;
use elastic_tep::harness::{self, ExperimentReport, Overrides};
use elastic_tep::mesh::{generate_domain_capped, Domain, TriMesh};
use elastic_tep::polybasis::Lame;
use elastic_tep::solvers::{self, ProblemKind, ProblemSpec, ScanParams, TepMethod};
use elastic_tep::spaces::{ElementKind, FemSpace};
use elastic_tep::Error;

fn py_err(e: Error) -> PyErr {
    if e.is_spec_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Uniformly refined triangulation of a built-in domain.
#[pyclass(module = "elastic_tep", frozen)]
struct Mesh {
    inner: Arc<TriMesh>,
}

#[pymethods]
impl Mesh {
    #[new]
    #[pyo3(signature = (domain, level, big = false))]
    fn new(domain: &str, level: usize, big: bool) -> PyResult<Self> {
        let cap = if big { harness::BIG_MAX_LEVEL } else { harness::DESK_MAX_LEVEL };
        let mesh = generate_domain_capped(parse(domain)?, level, cap).map_err(py_err)?;
        Ok(Mesh { inner: Arc::new(mesh) })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices.iter().map(|p| (p[0], p[1])).collect()
    }

    #[getter]
    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles.iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    /// Vector space dimension for `b3` or `morley`.
    #[pyo3(signature = (element = "b3"))]
    fn space_dimension(&self, element: &str) -> PyResult<usize> {
        Ok(FemSpace::new(parse(element)?, self.inner.clone(), 2).map_err(py_err)?.dim())
    }

    fn dump(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_dump(&mut buf).map_err(|e| py_err(e.into()))?;
        Ok(String::from_utf8(buf).expect("ascii dump"))
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, triangles={}, h={})", self.inner.n_vertices(), self.inner.n_triangles(), self.inner.h)
    }
}

/// Per-level results of an experiment.
#[pyclass(module = "elastic_tep", frozen)]
struct Report {
    inner: ExperimentReport,
}

#[pymethods]
impl Report {
    /// `(level, h, dofs, branch, value)` for eigenvalue runs.
    #[getter]
    fn eigenvalues(&self) -> Vec<(usize, f64, usize, usize, Complex64)> {
        self.inner
            .eigen_rows
            .iter()
            .map(|r| (r.level, r.h, r.dofs, r.branch, Complex64::new(r.value_re, r.value_im)))
            .collect()
    }

    /// `(level, h, dofs, l2, h1, h2)` for source runs.
    #[getter]
    fn errors(&self) -> Vec<(usize, f64, usize, f64, f64, f64)> {
        self.inner.source_rows.iter().map(|r| (r.level, r.h, r.dofs, r.l2, r.h1, r.h2)).collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(py_err)?;
        Ok(String::from_utf8(buf).expect("utf8 csv"))
    }

    fn to_json(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_json(&mut buf).map_err(py_err)?;
        Ok(String::from_utf8(buf).expect("utf8 json"))
    }
}

#[pyfunction]
#[pyo3(signature = (n, levels = None, element = None, alpha = None, method = None, k = None, tau_range = None, big = false))]
#[allow(clippy::too_many_arguments)]
fn run_example(
    py: Python<'_>,
    n: usize,
    levels: Option<Vec<usize>>,
    element: Option<&str>,
    alpha: Option<f64>,
    method: Option<&str>,
    k: Option<usize>,
    tau_range: Option<(f64, f64)>,
    big: bool,
) -> PyResult<Report> {
    let ov = Overrides {
        element: element.map(parse).transpose()?,
        alpha,
        method: method.map(parse).transpose()?,
        k,
        tau_range,
        big,
    };
    let inner = py.detach(|| harness::run_example(n, levels.as_deref(), &ov)).map_err(py_err)?;
    Ok(Report { inner })
}

fn spec(domain: &str, level: usize, lame: (f64, f64), kind: ProblemKind, element: &str, alpha: Option<f64>) -> PyResult<ProblemSpec> {
    let s = ProblemSpec::new(parse(domain)?, level, Lame::new(lame.0, lame.1), kind)
        .with_element(parse::<ElementKind>(element)?)
        .with_alpha(alpha);
    s.validate().map_err(py_err)?;
    Ok(s)
}

fn coef(s: &str) -> PyResult<Coefficient> {
    Coefficient::parse(s).map_err(py_err)
}

/// Smallest `k` bi-elastic eigenvalues.
#[pyfunction]
#[pyo3(signature = (domain, level, lam, mu, beta = "1", k = 6, element = "b3", alpha = None))]
#[allow(clippy::too_many_arguments)]
fn solve_bielastic(
    py: Python<'_>,
    domain: &str,
    level: usize,
    lam: f64,
    mu: f64,
    beta: &str,
    k: usize,
    element: &str,
    alpha: Option<f64>,
) -> PyResult<Vec<f64>> {
    let s = spec(domain, level, (lam, mu), ProblemKind::BiElasticEig { beta: coef(beta)?, k }, element, alpha)?;
    Ok(py.detach(|| solvers::solve_bielastic_eigs(&s)).map_err(py_err)?.real_values())
}

/// Transmission eigenvalues by the secant or quadratic path.
#[pyfunction]
#[pyo3(signature = (domain, level, lam, mu, rho0, rho1, k = 6, method = "secant", element = "b3", alpha = None, tau_range = None))]
#[allow(clippy::too_many_arguments)]
fn solve_tep(
    py: Python<'_>,
    domain: &str,
    level: usize,
    lam: f64,
    mu: f64,
    rho0: &str,
    rho1: &str,
    k: usize,
    method: &str,
    element: &str,
    alpha: Option<f64>,
    tau_range: Option<(f64, f64)>,
) -> PyResult<Vec<Complex64>> {
    let kind = ProblemKind::Tep { rho0: coef(rho0)?, rho1: coef(rho1)?, k, method: parse::<TepMethod>(method)? };
    let s = spec(domain, level, (lam, mu), kind, element, alpha)?;
    let scan = ScanParams { range: tau_range, ..ScanParams::default() };
    Ok(py.detach(|| solvers::solve_tep(&s, &scan)).map_err(py_err)?.values)
}

/// `(name, passed, detail)` for each internal check.
#[pyfunction]
fn self_test(py: Python<'_>) -> PyResult<Vec<(String, bool, String)>> {
    let checks = py.detach(elastic_tep::checks::self_test).map_err(py_err)?;
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pyfunction]
fn domains() -> Vec<String> {
    Domain::ALL.iter().map(|d| d.to_string()).collect()
}

#[pymodule]
#[pyo3(name = "elastic_tep")]
fn elastic_tep_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mesh>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(run_example, m)?)?;
    m.add_function(wrap_pyfunction!(solve_bielastic, m)?)?;
    m.add_function(wrap_pyfunction!(solve_tep, m)?)?;
    m.add_function(wrap_pyfunction!(self_test, m)?)?;
    m.add_function(wrap_pyfunction!(domains, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
