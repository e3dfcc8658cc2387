//! Minimizers for the evaluation function: exhaustive Gray-code enumeration
//! (ground truth) and single-flip simulated annealing on either the
//! higher-order polynomial or its quadratized form.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::poly::{Assignment, Poly};
use crate::quadratize::QuboModel;

/// Exhaustive search refuses more variables than this.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Brute,
    SaHubo,
    SaQubo,
}

/// Geometric cooling schedule. Temperatures are in units of the problem's
/// energy scale (the largest possible single-flip change), so one schedule
/// serves objectives whose coefficients differ by many orders of magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub final_temperature: f64,
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            initial_temperature: 10.0,
            final_temperature: 0.01,
            sweeps: 2000,
            restarts: 100,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::Schedule(msg.to_string()));
        if !(self.final_temperature > 0.0) || !self.initial_temperature.is_finite() {
            return bad("temperatures must be positive and finite");
        }
        if self.initial_temperature < self.final_temperature {
            return bad("initial temperature must be >= final temperature");
        }
        if self.sweeps == 0 || self.restarts == 0 {
            return bad("sweeps and restarts must be >= 1");
        }
        Ok(())
    }

    fn temperature(&self, sweep: usize) -> f64 {
        if self.sweeps == 1 {
            return self.initial_temperature;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.initial_temperature * (self.final_temperature / self.initial_temperature).powf(frac)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: Method,
    #[serde(serialize_with = "ser_bits", deserialize_with = "de_bits")]
    pub best_assignment: Assignment,
    pub best_value: f64,
    pub per_restart_values: Vec<f64>,
    /// Aux consistency of each restart's best state (quadratic form only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_restart_consistent: Option<Vec<bool>>,
    pub evaluations: u64,
    pub elapsed: f64,
}

fn ser_bits<S: serde::Serializer>(a: &Assignment, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&a.to_bit_string())
}

fn de_bits<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Assignment, D::Error> {
    let s = String::deserialize(d)?;
    Assignment::from_bit_string(&s).map_err(serde::de::Error::custom)
}

/// Term list with per-variable incidence for incremental flip deltas.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    n: usize,
    constant: f64,
    terms: Vec<(Vec<u32>, f64)>,
    incidence: Vec<Vec<u32>>,
}

impl CompiledPoly {
    /// `n` must cover every variable of `p`.
    pub fn new(p: &Poly, n: usize) -> Self {
        assert!(
            p.var_span() <= n,
            "polynomial mentions variables beyond {n}"
        );
        let mut terms = Vec::new();
        let mut incidence = vec![Vec::new(); n];
        for (m, c) in p.terms().filter(|(m, _)| m.degree() > 0) {
            let t = terms.len() as u32;
            for v in m.vars() {
                incidence[v.0].push(t);
            }
            terms.push((m.vars().iter().map(|v| v.0 as u32).collect(), c));
        }
        CompiledPoly {
            n,
            constant: p.constant_term(),
            terms,
            incidence,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn value(&self, state: &[bool]) -> f64 {
        let mut acc = self.constant;
        for (vars, c) in &self.terms {
            if vars.iter().all(|&v| state[v as usize]) {
                acc += c;
            }
        }
        acc
    }

    /// Change in value if variable `v` were flipped.
    pub fn flip_delta(&self, state: &[bool], v: usize) -> f64 {
        let mut d = 0.0;
        for &t in &self.incidence[v] {
            let (vars, c) = &self.terms[t as usize];
            if vars.iter().all(|&u| u as usize == v || state[u as usize]) {
                d += c;
            }
        }
        if state[v] {
            -d
        } else {
            d
        }
    }

    /// Largest possible single-flip change, used to scale temperatures.
    pub fn energy_scale(&self) -> f64 {
        let scale = self
            .incidence
            .iter()
            .map(|ts| {
                ts.iter()
                    .map(|&t| self.terms[t as usize].1.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if scale > 0.0 {
            scale
        } else {
            1.0
        }
    }

    fn abs_sum(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|(_, c)| c.abs()).sum::<f64>()
    }
}

/// Exact minimum over all `2^n_vars` assignments, visited in Gray-code order
/// with incremental evaluation. Ties go to the lexicographically smallest
/// bit string.
pub fn brute_force_min(p: &Poly, n_vars: usize) -> Result<SolveResult, SolverError> {
    if n_vars > BRUTE_FORCE_LIMIT {
        return Err(SolverError::TooManyVariables {
            n: n_vars,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let start = Instant::now();
    let compiled = CompiledPoly::new(p, n_vars);
    let tol = 1e-12 * compiled.abs_sum().max(1.0);

    let mut state = vec![false; n_vars];
    let mut value = compiled.value(&state);
    let mut best_state = state.clone();
    let mut best_exact = value;
    let mut evaluations = 1u64;

    for g in 1u64..(1u64 << n_vars) {
        // Gray code flips bit `trailing_zeros(g)`; bit b is variable n-1-b
        let v = n_vars - 1 - g.trailing_zeros() as usize;
        value += compiled.flip_delta(&state, v);
        state[v] = !state[v];
        evaluations += 1;
        if value < best_exact - tol {
            best_exact = compiled.value(&state);
            best_state.clone_from(&state);
            value = best_exact;
        } else if value <= best_exact + tol {
            let exact = compiled.value(&state);
            value = exact;
            if exact < best_exact || (exact == best_exact && state < best_state) {
                best_exact = exact;
                best_state.clone_from(&state);
            }
        }
    }

    let best_assignment = Assignment::from_bools(best_state);
    let best_value = p
        .eval(&best_assignment)
        .expect("assignment covers polynomial");
    Ok(SolveResult {
        method: Method::Brute,
        best_assignment,
        best_value,
        per_restart_values: vec![best_value],
        per_restart_consistent: None,
        evaluations,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

struct RestartOutcome {
    state: Vec<bool>,
    evaluations: u64,
}

fn anneal_restart(
    compiled: &CompiledPoly,
    schedule: &AnnealSchedule,
    restart: usize,
) -> RestartOutcome {
    let n = compiled.n_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed ^ restart as u64);
    let mut state: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let mut value = compiled.value(&state);
    let mut best_state = state.clone();
    let mut best_value = value;
    let scale = compiled.energy_scale();
    let mut order: Vec<usize> = (0..n).collect();
    let mut evaluations = 1u64;

    for sweep in 0..schedule.sweeps {
        let t = schedule.temperature(sweep) * scale;
        order.shuffle(&mut rng);
        for &v in &order {
            let d = compiled.flip_delta(&state, v);
            evaluations += 1;
            let accept = d <= 0.0 || rng.gen::<f64>() < (-d / t).exp();
            if accept {
                state[v] = !state[v];
                value += d;
                if value < best_value {
                    best_value = value;
                    best_state.clone_from(&state);
                }
            }
        }
    }
    RestartOutcome {
        state: best_state,
        evaluations,
    }
}

fn run_restarts(compiled: &CompiledPoly, schedule: &AnnealSchedule) -> Vec<RestartOutcome> {
    (0..schedule.restarts)
        .into_par_iter()
        .map(|r| anneal_restart(compiled, schedule, r))
        .collect()
}

/// Picks the lowest value, earliest restart on ties.
fn best_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    best
}

/// Simulated annealing directly on the higher-order polynomial over `n_vars`
/// variables. Restart `r` draws from a stream seeded with `seed ^ r`.
pub fn anneal_hubo(
    p: &Poly,
    n_vars: usize,
    schedule: &AnnealSchedule,
) -> Result<SolveResult, SolverError> {
    schedule.validate()?;
    let start = Instant::now();
    let compiled = CompiledPoly::new(p, n_vars);
    let outcomes = run_restarts(&compiled, schedule);
    let assignments: Vec<Assignment> = outcomes
        .iter()
        .map(|o| Assignment::from_bools(o.state.clone()))
        .collect();
    let values: Vec<f64> = assignments
        .iter()
        .map(|a| p.eval(a).expect("assignment covers polynomial"))
        .collect();
    let k = best_index(&values);
    Ok(SolveResult {
        method: Method::SaHubo,
        best_assignment: assignments[k].clone(),
        best_value: values[k],
        per_restart_values: values,
        per_restart_consistent: None,
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Simulated annealing on the quadratic form. Each restart's lowest-energy
/// state is projected onto the original variables and scored with `source`.
pub fn anneal_qubo(
    model: &QuboModel,
    source: &Poly,
    schedule: &AnnealSchedule,
) -> Result<SolveResult, SolverError> {
    schedule.validate()?;
    let start = Instant::now();
    let compiled = CompiledPoly::new(&model.to_poly(), model.n_vars);
    let outcomes = run_restarts(&compiled, schedule);
    let projected: Vec<(Assignment, bool)> = outcomes
        .iter()
        .map(|o| model.project_assignment(&Assignment::from_bools(o.state.clone())))
        .collect();
    let values: Vec<f64> = projected
        .iter()
        .map(|(a, _)| source.eval(a).expect("projection covers source polynomial"))
        .collect();
    let k = best_index(&values);
    Ok(SolveResult {
        method: Method::SaQubo,
        best_assignment: projected[k].0.clone(),
        best_value: values[k],
        per_restart_values: values,
        per_restart_consistent: Some(projected.iter().map(|(_, c)| *c).collect()),
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
        elapsed: start.elapsed().as_secs_f64(),
    })
}
