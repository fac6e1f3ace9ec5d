//! Python module `msem_flow`.

use std::path::PathBuf;

use msem_flow::config::RunConfig;
use msem_flow::{
    build_topology, gll_rule, io, Basis1D, Diagnostics, Error, InvariantRecord, MaterialLaw,
    Simulation, SolverConfig, TimeWeighting,
};
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e.exit_code() {
        2 => PyValueError::new_err(msg),
        4 => PyArithmeticError::new_err(msg),
        5 => PyIOError::new_err(msg),
        _ => match e.root() {
            Error::IndexOutOfRange { .. }
            | Error::OutOfReferenceDomain { .. }
            | Error::DimensionMismatch { .. } => PyValueError::new_err(msg),
            _ => PyRuntimeError::new_err(msg),
        },
    }
}

fn rows(m: &msem_flow::nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

/// `(nodes, weights)` of the Gauss-Lobatto-Legendre rule of order `n`.
#[pyfunction(name = "gll_rule")]
fn py_gll_rule(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let r = gll_rule(n).map_err(to_py)?;
    Ok((r.nodes().to_vec(), r.weights().to_vec()))
}

/// `True` iff the slab curl times gradient vanishes exactly.
#[pyfunction]
fn verify_complex(order: usize, t_order: usize) -> PyResult<bool> {
    let (_, inc) = build_topology(order, t_order).map_err(to_py)?;
    Ok(inc.verify_complex())
}

/// `(n_node, n_xedge, n_yedge, n_tedge, n_trace)`.
#[pyfunction]
fn topology_counts(order: usize, t_order: usize) -> PyResult<(usize, usize, usize, usize, usize)> {
    let (t, _) = build_topology(order, t_order).map_err(to_py)?;
    Ok((t.n_node(), t.n_xedge(), t.n_yedge(), t.n_tedge(), t.n_trace()))
}

#[pyclass(name = "Basis1D", frozen)]
struct PyBasis1D {
    inner: Basis1D,
}

#[pymethods]
impl PyBasis1D {
    #[new]
    fn new(order: usize) -> PyResult<Self> {
        Ok(PyBasis1D {
            inner: Basis1D::new(order).map_err(to_py)?,
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.nodes().to_vec()
    }

    fn eval_nodal(&self, i: usize, xi: f64) -> PyResult<f64> {
        self.inner.eval_nodal(i, xi).map_err(to_py)
    }

    fn eval_edge(&self, i: usize, xi: f64) -> PyResult<f64> {
        self.inner.eval_edge(i, xi).map_err(to_py)
    }

    fn eval_dual_nodal(&self, i: usize, xi: f64) -> PyResult<f64> {
        self.inner.eval_dual_nodal(i, xi).map_err(to_py)
    }

    fn eval_dual_edge(&self, i: usize, xi: f64) -> PyResult<f64> {
        self.inner.eval_dual_edge(i, xi).map_err(to_py)
    }

    /// `(M0, M1)` as nested lists.
    fn mass_matrices(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (m0, m1) = self.inner.mass_matrices();
        (rows(m0), rows(m1))
    }
}

#[pyclass(name = "MaterialLaw", frozen)]
struct PyMaterialLaw {
    inner: MaterialLaw,
}

#[pymethods]
impl PyMaterialLaw {
    #[new]
    #[pyo3(signature = (alpha, rho0 = 1.25, gamma = 1.4, p_ref = 1.0))]
    fn new(alpha: f64, rho0: f64, gamma: f64, p_ref: f64) -> PyResult<Self> {
        Ok(PyMaterialLaw {
            inner: MaterialLaw::with_alpha(rho0, gamma, p_ref, alpha).map_err(to_py)?,
        })
    }

    #[getter]
    fn p_env(&self) -> f64 {
        self.inner.p_env
    }

    fn pressure_pw(&self, j: f64) -> PyResult<f64> {
        self.inner.pressure_pw(j).map_err(to_py)
    }

    fn internal_energy_w(&self, j: f64) -> PyResult<f64> {
        self.inner.internal_energy_w(j).map_err(to_py)
    }

    fn sound_speed(&self, j: f64) -> PyResult<f64> {
        self.inner.sound_speed(j).map_err(to_py)
    }
}

#[pyclass(name = "InvariantRecord", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRecord {
    t: f64,
    px: f64,
    py: f64,
    angular: f64,
    mass: f64,
    e_kin: f64,
    e_int: f64,
    e_tot: f64,
    picard_iters: usize,
}

impl From<InvariantRecord> for PyRecord {
    fn from(r: InvariantRecord) -> Self {
        PyRecord {
            t: r.t,
            px: r.px,
            py: r.py,
            angular: r.l,
            mass: r.mass,
            e_kin: r.e_kin,
            e_int: r.e_int,
            e_tot: r.e_tot,
            picard_iters: r.picard_iters,
        }
    }
}

#[pymethods]
impl PyRecord {
    fn __repr__(&self) -> String {
        format!(
            "InvariantRecord(t={}, px={:e}, py={:e}, L={:e}, E_tot={}, picard_iters={})",
            self.t, self.px, self.py, self.angular, self.e_tot, self.picard_iters
        )
    }
}

/// A run from rest; each `step` solves one space-time slab.
#[pyclass(name = "Simulation")]
struct PySimulation {
    inner: Simulation,
    diag: Diagnostics,
}

#[pymethods]
impl PySimulation {
    #[new]
    #[pyo3(signature = (order, alpha, t_order = 1, dt = 0.01, tol = 1e-12, max_picard = 50,
                        rho0 = 1.25, gamma = 1.4, p_ref = 1.0, time_weighting = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        order: usize,
        alpha: f64,
        t_order: usize,
        dt: f64,
        tol: f64,
        max_picard: usize,
        rho0: f64,
        gamma: f64,
        p_ref: f64,
        time_weighting: Option<&str>,
    ) -> PyResult<Self> {
        let law = MaterialLaw::with_alpha(rho0, gamma, p_ref, alpha).map_err(to_py)?;
        let time_weighting = match time_weighting {
            None => None,
            Some(s) => Some(TimeWeighting::parse(s).ok_or_else(|| {
                PyValueError::new_err(format!("unknown time weighting `{s}`"))
            })?),
        };
        let cfg = SolverConfig {
            dt,
            tol,
            max_picard,
            time_weighting,
            ..SolverConfig::default()
        };
        let inner = Simulation::new(order, t_order, law, cfg).map_err(to_py)?;
        let diag = Diagnostics::new(inner.discretization(), law);
        Ok(PySimulation { inner, diag })
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.current().t
    }

    /// Nodal flow map `(x, y)` of the current time level.
    #[getter]
    fn flow_map(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.inner.current();
        (c.phi_x.clone(), c.phi_y.clone())
    }

    /// Trace momentum `(pi_x, pi_y)` of the current time level.
    #[getter]
    fn momentum(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.inner.current();
        (c.pi_x.clone(), c.pi_y.clone())
    }

    /// Invariants of the current time level.
    fn record(&self) -> PyResult<PyRecord> {
        let r = self.diag.record(self.inner.current(), 0).map_err(to_py)?;
        Ok(r.into())
    }

    fn step(&mut self, py: Python<'_>) -> PyResult<PyRecord> {
        let sol = py.detach(|| self.inner.step()).map_err(to_py)?;
        let r = self.diag.record(&sol.end, sol.iterations).map_err(to_py)?;
        Ok(r.into())
    }

    fn run(&mut self, py: Python<'_>, n_steps: usize) -> PyResult<Vec<PyRecord>> {
        (0..n_steps).map(|_| self.step(py)).collect()
    }
}

/// Runs a config file like the `solve` command; returns the invariant rows.
#[pyfunction]
#[pyo3(signature = (config, out_dir = None, overrides = None))]
fn run_config(
    py: Python<'_>,
    config: PathBuf,
    out_dir: Option<PathBuf>,
    overrides: Option<Vec<(String, String)>>,
) -> PyResult<Vec<PyRecord>> {
    let mut ov = overrides.unwrap_or_default();
    if let Some(d) = out_dir {
        ov.push(("out_dir".to_string(), d.display().to_string()));
    }
    let cfg = RunConfig::load(&config, &ov).map_err(to_py)?;
    let s = py.detach(|| io::run(&cfg)).map_err(to_py)?;
    Ok(s.records.into_iter().map(Into::into).collect())
}

#[pymodule]
#[pyo3(name = "msem_flow")]
fn msem_flow_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(py_gll_rule, m)?)?;
    m.add_function(wrap_pyfunction!(verify_complex, m)?)?;
    m.add_function(wrap_pyfunction!(topology_counts, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_class::<PyBasis1D>()?;
    m.add_class::<PyMaterialLaw>()?;
    m.add_class::<PyRecord>()?;
    m.add_class::<PySimulation>()?;
    Ok(())
}
