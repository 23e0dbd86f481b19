//! Error type shared by the model modules.
//!
//! Indices reported in messages are 1-based, matching config files and CSV
//! headers; the `usize` fields hold those 1-based values.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("attribute space needs at least one attribute")]
    EmptySpace,
    #[error("attribute {attribute} has zero cardinality")]
    ZeroCardinality { attribute: usize },
    #[error("cortege count overflows at attribute {attribute}")]
    SpaceOverflow { attribute: usize },
    #[error("attribute {attribute} has {got} labels but cardinality {expected}")]
    LabelCount {
        attribute: usize,
        expected: usize,
        got: usize,
    },
    #[error("cortege has {got} components but the space has {expected} attributes")]
    CortegeArity { expected: usize, got: usize },
    #[error("attribute {attribute} value {value} is outside 1..={max}")]
    ValueOutOfRange {
        attribute: usize,
        value: usize,
        max: usize,
    },
    #[error("cortege index {index} is outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("attribute {attribute} is outside 1..={max}")]
    AttributeOutOfRange { attribute: usize, max: usize },
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("negative transition probability {value} at (s={s}, l={l}, k={k})")]
    NegativeEntry {
        s: usize,
        l: usize,
        k: usize,
        value: f64,
    },
    #[error("transition row (s={s}, l={l}) sums to {sum}, expected 1")]
    RowSum { s: usize, l: usize, sum: f64 },
    #[error("duplicate transition entry (s={s}, l={l}, k={k})")]
    DuplicateEntry { s: usize, l: usize, k: usize },
    #[error("the opinion attribute cannot be static")]
    OpinionStatic,
    #[error("ranking entry {value} at (s={s}, l={l}) is outside [0, 1]")]
    RankingOutOfRange { s: usize, l: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("complete graph needs at least 2 agents, got {0}")]
    TooFewAgents(usize),
    #[error("edge ({u}, {v}) references an agent outside 1..={n}")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("operation requires a complete interaction graph")]
    UnsupportedGraph,
    #[error("invalid initial condition: {0}")]
    InitialCondition(String),
    #[error("integration produced a non-finite state at tau = {tau}")]
    Diverged { tau: f64 },
    #[error("trajectories share no common time range")]
    DisjointTimeRanges,
    #[error("perturbation moves {0} outside [0, 1]")]
    PerturbationOutOfRange(String),
}
