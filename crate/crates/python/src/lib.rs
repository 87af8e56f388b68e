//! Python bindings for the scdg solver.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use scdg::diagnostics::{conservation_ledger, entropy_ledger};
use scdg::entropy_flux::{interface_flux, tadmor_defect, EntropyStableFlux};
use scdg::harness::{convergence_study, run_check_suite, CheckOptions, Outcome};
use scdg::shock_capture::{viscosity_coefficient, CellResiduals, ViscosityConfig};
use scdg::systems::{build_system, ConservationSystem, Matrix, StateVector, SystemParams};
use scdg::{run_simulation, RunOutput, ScdgError};

create_exception!(scdg_py, SolverError, PyRuntimeError);

fn to_py(e: ScdgError) -> PyErr {
    match Outcome::for_error(&e) {
        Outcome::SolverFailure => SolverError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_json<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn state(x: &[f64]) -> StateVector {
    StateVector::from_column_slice(x)
}

fn rows(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

/// One of the built-in conservation laws.
#[pyclass(name = "System", frozen)]
struct PySystem {
    inner: Box<dyn ConservationSystem>,
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (name, params = None))]
    fn new(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Self> {
        let params: SystemParams = params.unwrap_or_default();
        Ok(Self {
            inner: build_system(name, &params).map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn component_names(&self) -> Vec<&'static str> {
        self.inner.component_names().to_vec()
    }

    #[allow(clippy::wrong_self_convention)]
    fn from_primitive(&self, w: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.from_primitive(&w).map_err(to_py)?.as_slice().to_vec())
    }

    fn entropy_variables(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .entropy_variables(&state(&u))
            .map_err(to_py)?
            .as_slice()
            .to_vec())
    }

    fn conserved(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.conserved(&state(&v)).map_err(to_py)?.as_slice().to_vec())
    }

    fn flux(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.flux(&state(&u)).map_err(to_py)?.as_slice().to_vec())
    }

    fn entropy(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.entropy(&state(&u)).map_err(to_py)
    }

    fn entropy_flux(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.entropy_flux(&state(&u)).map_err(to_py)
    }

    fn potential(&self, v: Vec<f64>) -> PyResult<f64> {
        self.inner.potential(&state(&v)).map_err(to_py)
    }

    fn symmetrizer(&self, v: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows(&self.inner.symmetrizer(&state(&v)).map_err(to_py)?))
    }

    fn max_wave_speed(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.max_wave_speed(&state(&u)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("System({:?})", self.inner.name())
    }
}

fn flux_config(sys: &dyn ConservationSystem, diffusion_floor: Option<f64>) -> PyResult<EntropyStableFlux> {
    let mut cfg = EntropyStableFlux::default_for(sys);
    if let Some(f) = diffusion_floor {
        cfg.diffusion_floor = f;
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Interface flux between two entropy states. Returns a dict with the
/// entropy-conservative part, the diffusion matrix and the full flux.
#[pyfunction]
#[pyo3(signature = (system, v_minus, v_plus, normal = 1.0, diffusion_floor = None))]
fn numerical_flux<'py>(
    py: Python<'py>,
    system: &PySystem,
    v_minus: Vec<f64>,
    v_plus: Vec<f64>,
    normal: f64,
    diffusion_floor: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let sys = system.inner.as_ref();
    let cfg = flux_config(sys, diffusion_floor)?;
    let f = interface_flux(sys, &cfg, &state(&v_minus), &state(&v_plus), normal).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("conservative", f.conservative.as_slice().to_vec())?;
    out.set_item("diffusion", rows(&f.diffusion))?;
    out.set_item("numerical", f.numerical.as_slice().to_vec())?;
    Ok(out)
}

/// ⟨f*, v₊ − v₋⟩ − (ψ(v₊) − ψ(v₋))·n for the default flux of `system`.
#[pyfunction]
#[pyo3(signature = (system, v_minus, v_plus, normal = 1.0))]
fn entropy_defect(system: &PySystem, v_minus: Vec<f64>, v_plus: Vec<f64>, normal: f64) -> PyResult<f64> {
    let sys = system.inner.as_ref();
    let cfg = EntropyStableFlux::default_for(sys);
    tadmor_defect(sys, &cfg, &state(&v_minus), &state(&v_plus), normal).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (h, res_bar, bres_bar, grad_norm, alpha1 = 1.0, alpha2 = 1.0, theta = 0.5, c1_sc = 1.0, c2_sc = 1.0))]
#[allow(clippy::too_many_arguments)]
fn viscosity(
    h: f64,
    res_bar: f64,
    bres_bar: f64,
    grad_norm: f64,
    alpha1: f64,
    alpha2: f64,
    theta: f64,
    c1_sc: f64,
    c2_sc: f64,
) -> PyResult<f64> {
    let cfg = ViscosityConfig::new(alpha1, alpha2, theta, c1_sc, c2_sc).map_err(to_py)?;
    cfg.validate(2).map_err(to_py)?;
    let res = CellResiduals {
        res_bar,
        bres_bar,
        grad_norm,
    };
    Ok(viscosity_coefficient(&cfg, h, &res))
}

/// A parsed run configuration.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: scdg::RunConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = scdg::RunConfig::from_toml_str(text).map_err(to_py)?;
        inner.setup().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = scdg::RunConfig::load(&path).map_err(to_py)?;
        inner.setup().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(to_py)
    }

    #[getter]
    fn cells(&self) -> usize {
        self.inner.mesh.cells
    }

    #[setter]
    fn set_cells(&mut self, n: usize) {
        self.inner.mesh.cells = n;
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.time.t_final
    }

    #[setter]
    fn set_t_final(&mut self, t: f64) {
        self.inner.time.t_final = t;
    }
}

/// Result of a run: completed slabs, diagnostics and the final solution.
#[pyclass(name = "RunResult", frozen)]
struct PyRunResult {
    config: scdg::RunConfig,
    output: RunOutput,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn slabs(&self) -> usize {
        self.output.slabs.len()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.output.dt
    }

    #[getter]
    fn h(&self) -> f64 {
        self.output.h
    }

    #[getter]
    fn failure(&self) -> Option<String> {
        self.output.failure.as_ref().map(|e| e.to_string())
    }

    /// (x, u) at `points` Gauss points per cell of the final trace, u in
    /// conserved variables.
    #[pyo3(signature = (points = 2))]
    fn final_state(&self, points: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let setup = self.config.setup().map_err(to_py)?;
        let trace = self.output.final_trace();
        let rule = scdg::mesh_basis::GaussRule::new(points.max(1));
        let (mut xs, mut us) = (vec![], vec![]);
        for cell in 0..setup.mesh.n_cells {
            for &xi in &rule.nodes {
                let v = trace.evaluate(cell, xi).map_err(to_py)?;
                xs.push(setup.mesh.x_of(cell, xi));
                us.push(setup.sys.conserved(&v).map_err(to_py)?.as_slice().to_vec());
            }
        }
        Ok((xs, us))
    }

    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_json(py, &self.output.diagnostics)
    }

    fn conservation<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_json(py, &conservation_ledger(&self.output.diagnostics))
    }

    fn entropy<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_json(py, &entropy_ledger(&self.output.diagnostics))
    }
}

/// Solves the configured problem. A solver failure is reported through
/// `RunResult.failure` together with the completed slabs.
#[pyfunction]
fn run(py: Python<'_>, config: &PyConfig) -> PyResult<PyRunResult> {
    let cfg = config.inner.clone();
    let output = py.detach(|| run_simulation(&cfg)).map_err(to_py)?;
    Ok(PyRunResult { config: cfg, output })
}

/// Refinement study over `levels` halvings; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (config, levels = 3))]
fn convergence<'py>(py: Python<'py>, config: &PyConfig, levels: usize) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config.inner.clone();
    let report = py.detach(|| convergence_study(&cfg, levels)).map_err(to_py)?;
    to_json(py, &report)
}

#[pyfunction]
#[pyo3(signature = (suite, seed = 0, system = None))]
fn check<'py>(py: Python<'py>, suite: &str, seed: u64, system: Option<String>) -> PyResult<Bound<'py, PyAny>> {
    let opts = CheckOptions {
        seed,
        system,
        diffusion_floor: None,
    };
    let reports = py.detach(|| run_check_suite(suite, &opts)).map_err(to_py)?;
    to_json(py, &reports)
}

#[pymodule]
fn scdg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(numerical_flux, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_defect, m)?)?;
    m.add_function(wrap_pyfunction!(viscosity, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(convergence, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    Ok(())
}
