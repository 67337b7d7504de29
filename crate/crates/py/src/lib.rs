//! Python bindings: `import pysyzygy`.
//!
//! Structured reports cross the boundary as plain dicts (via JSON), so the
//! field names match the CLI's JSON output.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::Serialize;
use syzygy::dynamics::{
    detect_eclipses, integrate, integrate_from, lagrange_circular_ic, lagrange_circular_state, lagrange_homothety_ic,
    EventConfig, IntegratorConfig, Precision,
};
use syzygy::eclipse::{classify, EclipseSequence, SequenceReport};
use syzygy::shape::{cone_embed, heron_form, lambda, to_shape};
use syzygy::theorem::{
    check_corollary, check_fzdot_monotone, check_recurrence, f_value, ode_residual, q_terms, scan_inequalities,
    ResidualOptions,
};
use syzygy::triangle::{angular_momentum, center_and_project, invariants};
use syzygy::varfinder::{eight_start_phase, find_eight as core_find_eight, refine_to_orbit, MinimizeOptions};
use syzygy::{BodyState, MassTriple, ShapePoint, Vec2};

fn err(e: syzygy::Error) -> PyErr {
    match e {
        syzygy::Error::Invalid(_) | syzygy::Error::Nonreduced { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Three positive masses.
#[pyclass(name = "Masses", module = "pysyzygy", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMasses(MassTriple);

#[pymethods]
impl PyMasses {
    #[new]
    fn new(m1: f64, m2: f64, m3: f64) -> PyResult<Self> {
        MassTriple::new(m1, m2, m3).map(Self).map_err(err)
    }

    #[getter]
    fn masses(&self) -> [f64; 3] {
        self.0.masses()
    }

    #[getter]
    fn total(&self) -> f64 {
        self.0.total()
    }

    /// `m1 m2 m3 / M`.
    #[getter]
    fn c(&self) -> f64 {
        self.0.c()
    }

    fn __repr__(&self) -> String {
        let [a, b, c] = self.0.masses();
        format!("Masses({a}, {b}, {c})")
    }
}

/// Positions and velocities of the three bodies at time `t`.
#[pyclass(name = "State", module = "pysyzygy", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState(BodyState);

#[pymethods]
impl PyState {
    #[new]
    #[pyo3(signature = (positions, velocities, t = 0.0))]
    fn new(positions: [(f64, f64); 3], velocities: [(f64, f64); 3], t: f64) -> Self {
        let v = |p: (f64, f64)| Vec2::new(p.0, p.1);
        Self(BodyState::new(t, positions.map(v), velocities.map(v)))
    }

    #[getter]
    fn t(&self) -> f64 {
        self.0.t
    }

    #[getter]
    fn positions(&self) -> [(f64, f64); 3] {
        self.0.pos.map(|p| (p.x, p.y))
    }

    #[getter]
    fn velocities(&self) -> [(f64, f64); 3] {
        self.0.vel.map(|p| (p.x, p.y))
    }

    /// `[t, x1, y1, x2, y2, x3, y3, vx1, ..., vy3]`.
    fn to_record(&self) -> [f64; 13] {
        self.0.to_record()
    }

    /// The same motion with zero total momentum and the center of mass at the origin.
    fn centered(&self, masses: &PyMasses) -> PyResult<Self> {
        center_and_project(&masses.0, &self.0).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("State(t={}, positions={:?}, velocities={:?})", self.0.t, self.positions(), self.velocities())
    }
}

/// Dense solution of the three-body equations.
#[pyclass(name = "Trajectory", module = "pysyzygy", frozen, skip_from_py_object)]
struct PyTrajectory(syzygy::dynamics::Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn t_end(&self) -> f64 {
        self.0.t_end()
    }

    /// `time-end`, `collision`, `triple-collision` or `escape`.
    #[getter]
    fn termination(&self) -> &'static str {
        self.0.termination.label()
    }

    fn state_at(&self, t: f64) -> PyResult<PyState> {
        self.0.state_at(t).map(PyState).map_err(err)
    }

    /// Maximum relative energy drift and absolute angular-momentum drift.
    fn drift(&self) -> PyResult<(f64, f64)> {
        self.0.conservation_drift().map_err(err)
    }

    /// Eclipse events as dicts with `t`, `symbol`, `direction`, `grazing`, `z`.
    fn eclipses<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &detect_eclipses(&self.0, &EventConfig::default()).map_err(err)?)
    }

    /// The eclipse sequence in compressed form, such as `"123123 x3"`.
    fn sequence(&self) -> PyResult<String> {
        let events = detect_eclipses(&self.0, &EventConfig::default()).map_err(err)?;
        Ok(SequenceReport::new(&EclipseSequence::from_events(&events, false)).text())
    }

    /// Finite-difference residual of the oscillation equation along the run.
    #[pyo3(signature = (negate_q = false))]
    fn ode_residual<'py>(&self, py: Python<'py>, negate_q: bool) -> PyResult<Bound<'py, PyAny>> {
        let opts = ResidualOptions { negate_q, ..ResidualOptions::default() };
        to_py(py, &ode_residual(&self.0, &opts).map_err(err)?)
    }

    /// Monotonicity, single-critical-point and recurrence checks as one dict.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let events = detect_eclipses(&self.0, &EventConfig::default()).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("monotone", to_py(py, &check_fzdot_monotone(&self.0, &events, 1e-9).map_err(err)?)?)?;
        out.set_item("corollary", to_py(py, &check_corollary(&self.0, &events).map_err(err)?)?)?;
        out.set_item("recurrence", to_py(py, &check_recurrence(&self.0, &events).map_err(err)?)?)?;
        Ok(out.into_any())
    }
}

/// Integrate for `duration` time units. With `double_double`, the run uses
/// double-double arithmetic.
#[pyfunction]
#[pyo3(signature = (masses, state, duration, rtol = 1e-10, atol = 1e-12, double_double = false))]
fn simulate(
    masses: &PyMasses,
    state: &PyState,
    duration: f64,
    rtol: f64,
    atol: f64,
    double_double: bool,
) -> PyResult<PyTrajectory> {
    let precision = if double_double { Precision::DoubleDouble } else { Precision::Double };
    let cfg = IntegratorConfig { rel_tol: rtol, abs_tol: atol, precision, ..IntegratorConfig::default() };
    integrate(&masses.0, &state.0, duration, &cfg).map(PyTrajectory).map_err(err)
}

/// The rigidly rotating equilateral solution with the given side, integrated
/// from a start point built in double-double.
#[pyfunction]
fn simulate_lagrange_circular(masses: &PyMasses, side: f64, duration: f64) -> PyResult<PyTrajectory> {
    let cfg = IntegratorConfig { precision: Precision::DoubleDouble, ..IntegratorConfig::default() };
    let y0 = lagrange_circular_state::<syzygy::dynamics::TwoFloat>(&masses.0, side).map_err(err)?;
    integrate_from(&masses.0, 0.0, y0, duration, &cfg).map(PyTrajectory).map_err(err)
}

#[pyfunction]
fn lagrange_circular(masses: &PyMasses, side: f64) -> PyResult<PyState> {
    lagrange_circular_ic(&masses.0, side).map(PyState).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (masses, size, rate = 0.0))]
fn lagrange_homothety(masses: &PyMasses, size: f64, rate: f64) -> PyResult<PyState> {
    lagrange_homothety_ic(&masses.0, size, rate).map(PyState).map_err(err)
}

/// Seeded random state with zero momentum, zero angular momentum and `K = U`.
#[pyfunction]
fn random_zero_j(masses: &PyMasses, seed: u64) -> PyResult<PyState> {
    syzygy::random::random_zero_j(&masses.0, seed).map(PyState).map_err(err)
}

/// Triangle invariants: squared sides `s`, signed area, `i1`, `i`, `u`, `z`.
#[pyfunction]
fn triangle_invariants<'py>(py: Python<'py>, masses: &PyMasses, state: &PyState) -> PyResult<Bound<'py, PyAny>> {
    let inv = invariants(&masses.0, &state.0).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("s", inv.s)?;
    out.set_item("delta", inv.delta)?;
    out.set_item("i1", inv.i1)?;
    out.set_item("i", inv.i)?;
    out.set_item("u", inv.u)?;
    out.set_item("z", inv.z)?;
    out.set_item("angular_momentum", angular_momentum(&masses.0, &state.0))?;
    Ok(out.into_any())
}

/// Shape-sphere coordinates `(I, phi, theta)`.
#[pyfunction]
fn shape(masses: &PyMasses, state: &PyState) -> PyResult<(f64, f64, f64)> {
    let p = to_shape(&masses.0, &state.0).map_err(err)?.point;
    Ok((p.i, p.phi, p.theta))
}

/// Conformal factor of the shape metric at `(phi, theta)`.
#[pyfunction]
fn conformal_factor(masses: &PyMasses, phi: f64, theta: f64) -> f64 {
    lambda(&masses.0, &ShapePoint::unit(phi, theta))
}

/// Hopf cone vector `(w0, w1, w2, w3)` of a configuration.
#[pyfunction]
fn cone_vector(state: &PyState) -> [f64; 4] {
    cone_embed(&state.0).as_array()
}

/// The Heron form of the squared sides and signed area; zero for a real triangle.
#[pyfunction]
fn heron(s: [f64; 3], delta: f64) -> f64 {
    heron_form(&s, delta)
}

/// Label (1, 2 or 3) of the middle body of a collinear configuration.
#[pyfunction]
fn eclipse_symbol(masses: &PyMasses, state: &PyState) -> PyResult<u8> {
    classify(&masses.0, &state.0).map_err(err)
}

/// `f` and the terms of `q` for a zero-angular-momentum state.
#[pyfunction]
fn oscillation_terms<'py>(py: Python<'py>, masses: &PyMasses, state: &PyState) -> PyResult<Bound<'py, PyAny>> {
    let terms = q_terms(&masses.0, &state.0).map_err(err)?;
    let out = to_py(py, &terms)?;
    out.set_item("f", f_value(&masses.0, &state.0).map_err(err)?)?;
    Ok(out)
}

/// Both inequalities on a `grid x grid` hemisphere grid; returns `(rows, summary)`.
#[pyfunction]
fn inequality_scan<'py>(py: Python<'py>, masses: &PyMasses, grid: usize) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let scan = scan_inequalities(&masses.0, grid).map_err(err)?;
    Ok((to_py(py, &scan.rows)?, to_py(py, &scan.summary)?))
}

/// Minimize the action for the equal-mass eight. Returns the loop as a dict
/// (the loop-file format), the minimizer report, and a start state between
/// eclipses refined against one period of integration.
#[pyfunction]
#[pyo3(signature = (harmonics = 24, refine_tol = 1e-5))]
fn find_eight<'py>(
    py: Python<'py>,
    harmonics: usize,
    refine_tol: f64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>, PyState)> {
    let (loop_, report) = core_find_eight(harmonics, 4 * harmonics, 1e-5, &MinimizeOptions::default()).map_err(err)?;
    let orbit = refine_to_orbit(&loop_, eight_start_phase(&loop_), refine_tol, &IntegratorConfig::default())
        .map_err(err)?;
    Ok((to_py(py, &loop_)?, to_py(py, &report)?, PyState(orbit.state)))
}

#[pymodule]
fn pysyzygy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMasses>()?;
    m.add_class::<PyState>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_lagrange_circular, m)?)?;
    m.add_function(wrap_pyfunction!(lagrange_circular, m)?)?;
    m.add_function(wrap_pyfunction!(lagrange_homothety, m)?)?;
    m.add_function(wrap_pyfunction!(random_zero_j, m)?)?;
    m.add_function(wrap_pyfunction!(triangle_invariants, m)?)?;
    m.add_function(wrap_pyfunction!(shape, m)?)?;
    m.add_function(wrap_pyfunction!(conformal_factor, m)?)?;
    m.add_function(wrap_pyfunction!(cone_vector, m)?)?;
    m.add_function(wrap_pyfunction!(heron, m)?)?;
    m.add_function(wrap_pyfunction!(eclipse_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(oscillation_terms, m)?)?;
    m.add_function(wrap_pyfunction!(inequality_scan, m)?)?;
    m.add_function(wrap_pyfunction!(find_eight, m)?)?;
    Ok(())
}
