use thiserror::Error;

use crate::grid::BlockId;
use crate::poly::VarId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("assignment does not cover variable {0}")]
    MissingVariable(VarId),
    #[error("invalid bit character {0:?}, expected '0' or '1'")]
    BadBit(char),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("malformed grid document: {0}")]
    Malformed(String),
    #[error("grid has no blocks")]
    NoBlocks,
    #[error("duplicate block id {0}")]
    DuplicateBlock(u32),
    #[error("block ids must be contiguous 1..{count}, found id {id}")]
    NonContiguousIds { id: u32, count: usize },
    #[error("block {block}: field `{field}` out of range ({value})")]
    InvalidBlockField {
        block: u32,
        field: &'static str,
        value: f64,
    },
    #[error("unknown block {0}")]
    UnknownBlock(u32),
    #[error("switch [{0},{0}] connects a block to itself")]
    SelfLoop(u32),
    #[error("duplicate switch [{0},{1}]")]
    DuplicateSwitch(u32, u32),
    #[error("block {0} has more than one feeder")]
    DuplicateFeeder(u32),
    #[error("feeder at block {block}: field `voltage` must be > 0 ({voltage})")]
    FeederVoltage { block: u32, voltage: f64 },
    #[error("field `reference_voltage` ({reference}) must exceed every feeder voltage (max {max_feeder})")]
    ReferenceVoltage { reference: f64, max_feeder: f64 },
    #[error("grid has no feeders")]
    NoFeeders,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("c_penalty must be > 0, got {0}")]
    Penalty(f64),
    #[error("exponent L must be an even integer >= 2, got {0}")]
    Exponent(u32),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuboError {
    #[error("reduction weight must be > 0, got {0}")]
    ReductionWeight(f64),
    #[error("malformed qubo text at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("{n} variables exceed the exhaustive-search guard of {limit}")]
    TooManyVariables { n: usize, limit: usize },
    #[error("invalid anneal schedule: {0}")]
    Schedule(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("component containing block {0} has more than one feeder")]
    MultipleFeeders(BlockId),
    #[error("component containing block {0} has no feeder")]
    Unfed(BlockId),
    #[error("component containing block {0} contains a loop")]
    Cycle(BlockId),
}
