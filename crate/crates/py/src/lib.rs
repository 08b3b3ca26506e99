//! Python module `dampcert`.
//!
//! Studies are passed as TOML text in the same schema the command-line tool
//! reads, so a configuration file can be shared between both front ends.

use ::dampcert::config::NetworkMode;
use ::dampcert::{CliError, StudyConfig};
use dampcert_core::analysis::{self, closed_loop_poles};
use dampcert_core::certify::{certify_all, DynamicNetwork, NetworkProvider, StaticNetwork};
use dampcert_core::domain::ProhibitedDomain;
use dampcert_core::netmodel::static_network_real;
use dampcert_core::{Complex64, Error};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: impl Into<CliError>) -> PyErr {
    match e.into() {
        e @ (CliError::Config(_) | CliError::Core(Error::Config(_))) => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Prohibited pole region.
#[pyclass(name = "Domain", frozen)]
struct PyDomain(ProhibitedDomain);

#[pymethods]
impl PyDomain {
    #[new]
    #[pyo3(signature = (sigma=0.35, xi=0.37, eps1=1e-3, eps2=0.1, eta1=10.0, eta2=10.0))]
    fn new(sigma: f64, xi: f64, eps1: f64, eps2: f64, eta1: f64, eta2: f64) -> PyResult<Self> {
        ProhibitedDomain::new(sigma, xi, eps1, eps2, eta1, eta2).map(Self).map_err(py_err)
    }

    #[getter]
    fn tan_gamma(&self) -> f64 {
        self.0.tan_gamma()
    }

    fn contains(&self, s: Complex64) -> bool {
        self.0.contains(s)
    }

    fn boundary_distance(&self, s: Complex64) -> f64 {
        self.0.boundary_distance(s)
    }

    /// Upper-half-plane samples of the finite boundary.
    #[pyo3(signature = (spacing=0.01))]
    fn boundary(&self, spacing: f64) -> PyResult<Vec<Complex64>> {
        Ok(self.0.discretize_boundary(spacing).map_err(py_err)?.points)
    }
}

/// `-Re(p) / |p|`.
#[pyfunction]
fn damping_ratio(p: Complex64) -> PyResult<f64> {
    analysis::damping_ratio(p).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Per-device certificate results for a study; one dict per device.
#[pyfunction]
fn certify<'py>(py: Python<'py>, config: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let study = StudyConfig::from_toml(config).and_then(StudyConfig::build).map_err(py_err)?;
    let net: Box<dyn NetworkProvider + Send + Sync> = match study.config.topology.network {
        NetworkMode::Static => Box::new(StaticNetwork::from_topology(&study.topology).map_err(py_err)?),
        NetworkMode::Dynamic => Box::new(DynamicNetwork::new(study.topology.clone()).map_err(py_err)?),
    };
    let samples = study.domain.discretize_boundary(study.config.domain.spacing).map_err(py_err)?;
    let results = py
        .detach(|| certify_all(&study.entries, net.as_ref(), &study.domain, &samples, study.config.domain.margin_tol))
        .map_err(py_err)?;
    let mut out = Vec::with_capacity(results.len());
    for (name, r) in study.device_names().into_iter().zip(results) {
        let d = PyDict::new(py);
        d.set_item("device", name)?;
        match r {
            Ok(r) => {
                d.set_item("passed", r.passed)?;
                d.set_item("min_margin", r.min_margin)?;
                d.set_item("min_lhs", r.min_lhs)?;
                d.set_item("max_rhs", r.max_rhs)?;
                d.set_item("worst_point", r.worst_point)?;
                d.set_item("nonvanishing", r.nonvanishing)?;
            }
            Err(Error::CertificateInapplicable { reason, .. }) => {
                d.set_item("passed", false)?;
                d.set_item("inapplicable", reason)?;
            }
            Err(e) => return Err(py_err(e)),
        }
        out.push(d);
    }
    Ok(out)
}

/// Closed-loop poles of a study under its static network, origin poles excluded.
#[pyfunction]
fn poles(config: &str) -> PyResult<Vec<Complex64>> {
    let study = StudyConfig::from_toml(config).and_then(StudyConfig::build).map_err(py_err)?;
    let n = static_network_real(&study.topology).map_err(py_err)?;
    let r = closed_loop_poles(&study.entries, &n, &study.domain).map_err(py_err)?;
    Ok(r.poles.into_iter().zip(r.origin).filter(|(_, o)| !o).map(|(p, _)| p).collect())
}

#[pymodule(name = "dampcert")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyDomain>()?;
    m.add_function(wrap_pyfunction!(damping_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(poles, m)?)?;
    Ok(())
}
