//! Distribution-grid switch reconfiguration as pseudo-Boolean optimization.
//!
//! A [`Grid`] of load blocks, feeders and switches is turned into a penalized
//! multilinear objective over the switch states ([`objective`]), optionally
//! reduced to quadratic form ([`quadratize`]), minimized exhaustively or by
//! simulated annealing ([`solver`]), and checked against an independent
//! graph/tree-flow oracle ([`validator`]).

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod grid;
pub mod objective;
pub mod poly;
pub mod quadratize;
pub mod solver;
pub mod validator;

pub use error::{FlowError, GridError, ObjectiveError, PolyError, QuboError, SolverError};
pub use grid::{Block, BlockId, Feeder, Grid, GridDocument, QRef};
pub use objective::{build_objective, Component, ObjectiveBundle, PenaltyParams};
pub use poly::{Assignment, HuboDocument, Monomial, Poly, VarId};
pub use quadratize::{export_qubo, parse_qubo, quadratize, AuxSidecar, QuboModel};
pub use solver::{anneal_hubo, anneal_qubo, brute_force_min, AnnealSchedule, Method, SolveResult};
pub use validator::{check_feasibility, enumerate_feasible, FeasibilityReport, Mode, Validator};
