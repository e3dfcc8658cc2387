//! Python bindings: grids, polynomials, objective building, quadratization,
//! solvers and feasibility checks.

use std::collections::BTreeMap;

use gridswitch_core::quadratize::default_reduction_weight;
use gridswitch_core::{self as core, AnnealSchedule, Assignment, Component, Mode, PenaltyParams};
use pyo3::exceptions::{PyOverflowError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(value_err)
}

fn bits_for(n: usize, bits: &str) -> PyResult<Assignment> {
    let a = Assignment::from_bit_string(bits).map_err(value_err)?;
    if a.len() != n {
        return Err(value_err(format!("expected {n} bits, got {}", a.len())));
    }
    Ok(a)
}

#[pyclass(frozen, module = "gridswitch")]
pub struct Grid(core::Grid);

#[pymethods]
impl Grid {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::Grid::parse(text).map(Grid).map_err(value_err)
    }

    /// The six-block example grid with feeders at blocks 2 and 6.
    #[staticmethod]
    fn six_block() -> Self {
        Grid(core::fixtures::six_block())
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.0.n_vars()
    }

    #[getter]
    fn block_count(&self) -> usize {
        self.0.block_count()
    }

    #[getter]
    fn reference_voltage(&self) -> f64 {
        self.0.reference_voltage()
    }

    /// Switch labels such as "1-4", in bit order.
    fn variable_labels(&self) -> Vec<String> {
        self.0.variable_labels()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(blocks={}, switches={})",
            self.0.block_count(),
            self.0.n_vars()
        )
    }
}

#[pyclass(frozen, from_py_object, module = "gridswitch")]
#[derive(Clone)]
pub struct Poly(core::Poly);

#[pymethods]
impl Poly {
    #[new]
    #[pyo3(signature = (constant = 0.0))]
    fn new(constant: f64) -> Self {
        Poly(core::Poly::constant(constant))
    }

    #[staticmethod]
    fn var(index: usize) -> Self {
        Poly(core::Poly::var(core::VarId(index)))
    }

    /// Builds from `[(var_indices, coeff), ...]`.
    #[staticmethod]
    fn from_terms(terms: Vec<(Vec<usize>, f64)>) -> Self {
        Poly(core::Poly::from_terms(terms.into_iter().map(|(vs, c)| {
            (core::Monomial::new(vs.into_iter().map(core::VarId)), c)
        })))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: core::HuboDocument = serde_json::from_str(text).map_err(value_err)?;
        Ok(Poly(core::Poly::from_hubo(&doc)))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0.to_hubo()).expect("serializable")
    }

    fn terms(&self) -> Vec<(Vec<usize>, f64)> {
        self.0
            .terms()
            .map(|(m, c)| (m.vars().iter().map(|v| v.0).collect(), c))
            .collect()
    }

    fn coeff(&self, vars: Vec<usize>) -> f64 {
        self.0
            .coeff(&core::Monomial::new(vars.into_iter().map(core::VarId)))
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    #[getter]
    fn constant(&self) -> f64 {
        self.0.constant_term()
    }

    /// Value at a bit string (or list of bools) covering every variable.
    fn eval(&self, bits: &Bound<'_, PyAny>) -> PyResult<f64> {
        let a = match bits.extract::<String>() {
            Ok(s) => Assignment::from_bit_string(&s).map_err(value_err)?,
            Err(_) => Assignment::from_bools(bits.extract::<Vec<bool>>()?),
        };
        self.0.eval(&a).map_err(value_err)
    }

    fn complement(&self) -> Self {
        Poly(self.0.complement())
    }

    fn scale(&self, k: f64) -> Self {
        Poly(self.0.scale(k))
    }

    fn __pow__(&self, n: u32, _modulo: Option<u32>) -> Self {
        Poly(self.0.pow(n))
    }

    fn __add__(&self, other: PolyOrFloat) -> Self {
        Poly(&self.0 + &other.into_poly())
    }

    fn __radd__(&self, other: PolyOrFloat) -> Self {
        self.__add__(other)
    }

    fn __sub__(&self, other: PolyOrFloat) -> Self {
        Poly(&self.0 - &other.into_poly())
    }

    fn __rsub__(&self, other: PolyOrFloat) -> Self {
        Poly(&other.into_poly() - &self.0)
    }

    fn __mul__(&self, other: PolyOrFloat) -> Self {
        Poly(&self.0 * &other.into_poly())
    }

    fn __rmul__(&self, other: PolyOrFloat) -> Self {
        self.__mul__(other)
    }

    fn __neg__(&self) -> Self {
        Poly(-&self.0)
    }

    fn __eq__(&self, other: &Poly) -> bool {
        self.0 == other.0
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Poly({})", self.0)
    }
}

#[derive(FromPyObject)]
pub enum PolyOrFloat {
    Poly(Poly),
    Float(f64),
}

impl PolyOrFloat {
    fn into_poly(self) -> core::Poly {
        match self {
            PolyOrFloat::Poly(p) => p.0,
            PolyOrFloat::Float(c) => core::Poly::constant(c),
        }
    }
}

fn penalty(grid: &core::Grid, c_penalty: Option<f64>, exponent_l: u32) -> PyResult<PenaltyParams> {
    let c = c_penalty.unwrap_or_else(|| PenaltyParams::default_for(grid).c_penalty);
    PenaltyParams::new(c, exponent_l).map_err(value_err)
}

/// Every objective component keyed by name ("power", "radial", ..., "total").
#[pyfunction]
#[pyo3(signature = (grid, c_penalty = None, exponent_l = 4))]
fn build_objective(
    grid: &Grid,
    c_penalty: Option<f64>,
    exponent_l: u32,
) -> PyResult<BTreeMap<String, Poly>> {
    let bundle = core::build_objective(&grid.0, penalty(&grid.0, c_penalty, exponent_l)?);
    Ok(Component::ALL
        .iter()
        .map(|&c| (c.name().to_string(), Poly(bundle.component(c).clone())))
        .collect())
}

/// Total current polynomial of a 1-based block.
#[pyfunction]
fn total_current(grid: &Grid, block: u32) -> PyResult<Poly> {
    core::objective::total_current_poly(&grid.0, core::BlockId(block))
        .map(Poly)
        .map_err(value_err)
}

#[pyclass(frozen, module = "gridswitch")]
pub struct QuboModel(core::QuboModel);

#[pymethods]
impl QuboModel {
    #[getter]
    fn n_vars(&self) -> usize {
        self.0.n_vars
    }

    #[getter]
    fn n_original(&self) -> usize {
        self.0.n_original
    }

    #[getter]
    fn n_aux(&self) -> usize {
        self.0.n_aux()
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.0.offset
    }

    #[getter]
    fn reduction_weight(&self) -> f64 {
        self.0.reduction_weight
    }

    /// Text form with a header, diagonal entries, then couplings.
    fn export(&self) -> String {
        core::export_qubo(&self.0)
    }

    fn sidecar_json(&self) -> String {
        serde_json::to_string(&self.0.sidecar()).expect("serializable")
    }

    #[staticmethod]
    fn parse(text: &str, sidecar_json: &str) -> PyResult<Self> {
        let sidecar: core::AuxSidecar = serde_json::from_str(sidecar_json).map_err(value_err)?;
        core::parse_qubo(text, &sidecar)
            .map(QuboModel)
            .map_err(value_err)
    }

    fn to_poly(&self) -> Poly {
        Poly(self.0.to_poly())
    }

    fn energy(&self, bits: &str) -> PyResult<f64> {
        Ok(self.0.energy(&bits_for(self.0.n_vars, bits)?))
    }

    /// Extends original bits with consistent auxiliary values.
    fn lift(&self, bits: &str) -> PyResult<String> {
        Ok(self
            .0
            .lift_assignment(&bits_for(self.0.n_original, bits)?)
            .to_bit_string())
    }

    /// Original bits and whether every auxiliary matches its pair.
    fn project(&self, bits: &str) -> PyResult<(String, bool)> {
        let (a, ok) = self.0.project_assignment(&bits_for(self.0.n_vars, bits)?);
        Ok((a.to_bit_string(), ok))
    }
}

#[pyfunction]
#[pyo3(signature = (poly, n_original, m = None))]
fn quadratize(poly: &Poly, n_original: usize, m: Option<f64>) -> PyResult<QuboModel> {
    let m = m.unwrap_or_else(|| default_reduction_weight(&poly.0));
    core::quadratize(&poly.0, n_original, m)
        .map(QuboModel)
        .map_err(value_err)
}

fn solver_err(e: core::SolverError) -> PyErr {
    match e {
        core::SolverError::TooManyVariables { .. } => PyOverflowError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn result_dict<'py>(py: Python<'py>, r: &core::SolveResult) -> PyResult<Bound<'py, PyDict>> {
    let text = serde_json::to_string(r).expect("serializable");
    Ok(json_to_py(py, &text)?.cast_into::<PyDict>()?)
}

#[pyfunction]
fn brute_force_min<'py>(
    py: Python<'py>,
    poly: &Poly,
    n_vars: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| core::brute_force_min(&poly.0, n_vars))
        .map_err(solver_err)?;
    result_dict(py, &r)
}

fn schedule(seed: u64, sweeps: usize, restarts: usize, t0: f64, t1: f64) -> AnnealSchedule {
    AnnealSchedule {
        initial_temperature: t0,
        final_temperature: t1,
        sweeps,
        restarts,
        seed,
    }
}

#[pyfunction]
#[pyo3(signature = (poly, n_vars, seed = 0, sweeps = 2000, restarts = 100, t0 = 10.0, t1 = 0.01))]
#[allow(clippy::too_many_arguments)]
fn anneal_hubo<'py>(
    py: Python<'py>,
    poly: &Poly,
    n_vars: usize,
    seed: u64,
    sweeps: usize,
    restarts: usize,
    t0: f64,
    t1: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = schedule(seed, sweeps, restarts, t0, t1);
    let r = py
        .detach(|| core::anneal_hubo(&poly.0, n_vars, &s))
        .map_err(solver_err)?;
    result_dict(py, &r)
}

/// Anneals the quadratic form; values are scored on `source`.
#[pyfunction]
#[pyo3(signature = (model, source, seed = 0, sweeps = 2000, restarts = 100, t0 = 10.0, t1 = 0.01))]
#[allow(clippy::too_many_arguments)]
fn anneal_qubo<'py>(
    py: Python<'py>,
    model: &QuboModel,
    source: &Poly,
    seed: u64,
    sweeps: usize,
    restarts: usize,
    t0: f64,
    t1: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s = schedule(seed, sweeps, restarts, t0, t1);
    let r = py
        .detach(|| core::anneal_qubo(&model.0, &source.0, &s))
        .map_err(solver_err)?;
    result_dict(py, &r)
}

/// Feasibility report as a dict; `mode` is "physical" or "paper".
#[pyfunction]
#[pyo3(signature = (grid, bits, mode = "physical"))]
fn check_feasibility<'py>(
    py: Python<'py>,
    grid: &Grid,
    bits: &str,
    mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let a = bits_for(grid.0.n_vars(), bits)?;
    let report = core::check_feasibility(&grid.0, &a, parse_mode(mode)?).map_err(value_err)?;
    json_to_py(py, &serde_json::to_string(&report).expect("serializable"))
}

/// Feasible `(bits, loss)` pairs sorted by loss.
#[pyfunction]
#[pyo3(signature = (grid, mode = "physical"))]
fn enumerate_feasible(py: Python<'_>, grid: &Grid, mode: &str) -> PyResult<Vec<(String, f64)>> {
    let mode = parse_mode(mode)?;
    let rows = py
        .detach(|| core::enumerate_feasible(&grid.0, mode))
        .map_err(solver_err)?;
    Ok(rows
        .into_iter()
        .map(|(a, loss)| (a.to_bit_string(), loss))
        .collect())
}

#[pymodule]
fn gridswitch(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Grid>()?;
    m.add_class::<Poly>()?;
    m.add_class::<QuboModel>()?;
    m.add_function(wrap_pyfunction!(build_objective, m)?)?;
    m.add_function(wrap_pyfunction!(total_current, m)?)?;
    m.add_function(wrap_pyfunction!(quadratize, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_min, m)?)?;
    m.add_function(wrap_pyfunction!(anneal_hubo, m)?)?;
    m.add_function(wrap_pyfunction!(anneal_qubo, m)?)?;
    m.add_function(wrap_pyfunction!(check_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_feasible, m)?)?;
    Ok(())
}
