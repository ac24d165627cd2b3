//! Error type shared by the whole crate.

use thiserror::Error;

/// Everything that can go wrong when building networks, enumerating exact
/// probabilities, or evaluating and optimizing the bounds.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("bias[{index}] = {value} is outside [0, 1]")]
    BiasOutOfRange { index: usize, value: f64 },

    #[error("noisy-OR networks need nonnegative weights; tau[{output}][{input}] = {value}")]
    NegativeNoisyOrWeight {
        output: usize,
        input: usize,
        value: f64,
    },

    #[error("noisy-OR networks need nonnegative offsets; offset[{output}] = {value}")]
    NegativeNoisyOrOffset { output: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("transfer argument {x} is outside the noisy-OR domain x >= 0")]
    TransferDomain { x: f64 },

    #[error("input index {index} out of range for {n_inputs} inputs")]
    InputIndexOutOfRange { index: usize, n_inputs: usize },

    #[error("output index {index} out of range for {n_outputs} outputs")]
    OutputIndexOutOfRange { index: usize, n_outputs: usize },

    #[error("evidence lists output {output} more than once")]
    DuplicateFinding { output: usize },

    #[error("evidence must contain at least one finding")]
    EmptyEvidence,

    #[error("{n} inputs exceed the enumeration limit of {max}")]
    EnumerationLimitExceeded { n: usize, max: usize },

    #[error("evidence has probability zero under this network")]
    ImpossibleEvidence,

    #[error("argument {name} = {value} is outside its valid range")]
    InvalidArgument { name: &'static str, value: f64 },

    #[error("epsilon[{index}] = {value} must be positive where the deviation scale is nonzero")]
    InvalidEpsilon { index: usize, value: f64 },

    #[error("mu - epsilon < 0 at evidence output {output}: infeasible for the noisy-OR domain")]
    NoisyOrInfeasible { output: usize },

    #[error("lower bound is vacuous: throw-away mass S = {s} >= 1")]
    VacuousLowerBound { s: f64 },

    #[error("no feasible starting point: throw-away mass S = {s} >= 1 after repair")]
    NoFeasibleStart { s: f64 },

    #[error("cannot save a clamped network: the file format has no separate scaling input count")]
    ClampedSave,

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
