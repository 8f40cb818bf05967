//! Python bindings for `zscond`.
//!
//! Anchors and arc vertices are Python `complex` numbers; results come back
//! as plain dicts. Heavy work runs with the interpreter detached.

use num_complex::Complex64 as C;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use zscond::equilibrium::{solve_equilibrium, EnergyReport, ExternalField};
use zscond::geom::{AnchorSet, Arc, ConnectivityMatrix, PolyContinuum};
use zscond::pipeline::solve_in_class;
use zscond::verify::{jenkins_check, s_property_residual, schiffer_certificate, JenkinsOptions};
use zscond::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidAnchors(_)
        | Error::InvalidArc(_)
        | Error::InvalidConnectivity(_)
        | Error::EmptyContinuum
        | Error::FieldMismatch(_)
        | Error::Config(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn class_for(e: &AnchorSet, rows: Option<Vec<Vec<u8>>>) -> zscond::Result<ConnectivityMatrix> {
    match rows {
        Some(r) => ConnectivityMatrix::from_rows(r),
        None => Ok(ConnectivityMatrix::empty(e.len())),
    }
}

pub struct SolveSummary {
    pub intensity: f64,
    pub coeffs: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub connectivity: Vec<Vec<u8>>,
    pub spectrum: Vec<Vec<C>>,
}

pub fn solve_summary(anchors: Vec<C>, connectivity: Option<Vec<Vec<u8>>>) -> zscond::Result<SolveSummary> {
    let e = AnchorSet::new(anchors)?;
    let m = class_for(&e, connectivity)?;
    let t = solve_in_class(&e, &m, &Default::default(), &Default::default())?.best;
    Ok(SolveSummary {
        intensity: t.intensity,
        coeffs: t.solution.qd.coeffs().to_vec(),
        residual: t.solution.residual,
        iterations: t.solution.iterations,
        connectivity: t.connectivity.rows().to_vec(),
        spectrum: t.spectrum.arcs().iter().map(|a| a.samples().to_vec()).collect(),
    })
}

pub fn energy_report(arcs: Vec<Vec<C>>, field: Option<Vec<f64>>, grid_res: usize) -> zscond::Result<EnergyReport> {
    let k = PolyContinuum::new(arcs.into_iter().map(Arc::polyline).collect::<zscond::Result<Vec<_>>>()?)?;
    let field = field.map_or_else(|| Ok(ExternalField::default()), ExternalField::new)?;
    solve_equilibrium(&k, &field)?.intensity_report_refined(grid_res, 4 * grid_res)
}

pub struct VerifySummary {
    pub intensity: f64,
    pub s_residual: f64,
    pub schiffer_residual: f64,
    pub jenkins: bool,
}

pub fn verify_summary(anchors: Vec<C>, connectivity: Option<Vec<Vec<u8>>>, samples: usize) -> zscond::Result<VerifySummary> {
    let e = AnchorSet::new(anchors)?;
    let m = class_for(&e, connectivity)?;
    let t = solve_in_class(&e, &m, &Default::default(), &Default::default())?.best;
    let mf = solve_equilibrium(&t.spectrum, &ExternalField::default())?;
    let opts = JenkinsOptions { samples, ..Default::default() };
    Ok(VerifySummary {
        intensity: t.intensity,
        s_residual: s_property_residual(&mf)?,
        schiffer_residual: schiffer_certificate(&mf, &e)?.residual,
        jenkins: jenkins_check(&mf, &t.spectrum, &opts)?.overall,
    })
}

/// Minimal-intensity ZS spectrum for the anchors, optionally in a class.
#[pyfunction]
#[pyo3(signature = (anchors, connectivity=None))]
fn solve<'py>(
    py: Python<'py>,
    anchors: Vec<C>,
    connectivity: Option<Vec<Vec<u8>>>,
) -> PyResult<Bound<'py, PyDict>> {
    let s = py.detach(|| solve_summary(anchors, connectivity)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("intensity", s.intensity)?;
    d.set_item("coeffs", s.coeffs)?;
    d.set_item("boutroux_residual", s.residual)?;
    d.set_item("iterations", s.iterations)?;
    d.set_item("connectivity", s.connectivity)?;
    d.set_item("spectrum", s.spectrum)?;
    Ok(d)
}

/// Equilibrium measure of explicit arcs and its three intensities.
#[pyfunction]
#[pyo3(signature = (arcs, field=None, grid_res=512))]
fn energy<'py>(
    py: Python<'py>,
    arcs: Vec<Vec<C>>,
    field: Option<Vec<f64>>,
    grid_res: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py.detach(|| energy_report(arcs, field, grid_res)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("i_measure", r.i_measure)?;
    d.set_item("i_residue", r.i_residue)?;
    d.set_item("i_dirichlet", r.i_dirichlet)?;
    d.set_item("i_phi", r.i_phi)?;
    d.set_item("bc_residual", r.bc_residual)?;
    d.set_item("condition", r.condition)?;
    d.set_item("grid_res", r.grid_res)?;
    Ok(d)
}

/// S-property, Schiffer and self-interception checks on the traced spectrum.
#[pyfunction]
#[pyo3(signature = (anchors, connectivity=None, samples=24))]
fn verify<'py>(
    py: Python<'py>,
    anchors: Vec<C>,
    connectivity: Option<Vec<Vec<u8>>>,
    samples: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if samples == 0 {
        return Err(PyValueError::new_err("samples must be at least 1"));
    }
    let v = py.detach(|| verify_summary(anchors, connectivity, samples)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("intensity", v.intensity)?;
    d.set_item("s_residual", v.s_residual)?;
    d.set_item("schiffer_residual", v.schiffer_residual)?;
    d.set_item("jenkins", v.jenkins)?;
    Ok(d)
}

/// Run the command line with `args` (without the program name); returns
/// the exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| zscond::cli::run(std::iter::once("zscond".to_string()).chain(args)))
}

#[pymodule]
fn zscond_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
