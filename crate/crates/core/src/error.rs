//! Crate-wide error type.

use thiserror::Error;

use crate::oracle::OracleResult;

/// Errors produced by validation, quadrature and the variational solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node sequence needs at least 2 nodes, got {0}")]
    TooShort(usize),

    #[error("node at index {index} is not finite")]
    NonFiniteNode { index: usize },

    #[error(
        "nodes must be strictly increasing: nodes[{index}] = {value} does not exceed nodes[{}] = {previous}", index - 1
    )]
    NotIncreasing {
        index: usize,
        value: f64,
        previous: f64,
    },

    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),

    #[error("got {values} values for {nodes} nodes")]
    LengthMismatch { nodes: usize, values: usize },

    #[error("value at index {index} is not finite")]
    NonFiniteValue { index: usize },

    #[error("divided-difference order {order} exceeds the maximum {max} for this sequence")]
    OrderTooLarge { order: usize, max: usize },

    #[error("derivative order r = {0} is not supported (only r = 1 and r = 2)")]
    UnsupportedOrder(usize),

    #[error("integrability exponent p = {0} must be finite and >= 1")]
    InvalidExponent(f64),

    #[error("step bound K = {0} must be positive and finite")]
    InvalidStepBound(f64),

    #[error("maximum step {max_step} exceeds the declared bound K = {bound}")]
    StepBoundExceeded { max_step: f64, bound: f64 },

    #[error("operation needs at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },

    #[error("piece {index} has {len} coefficients, above the cubic limit of 4")]
    DegreeTooHigh { index: usize, len: usize },

    #[error("breakpoint count {breakpoints} does not match piece count {pieces} + 1")]
    PieceCountMismatch { breakpoints: usize, pieces: usize },

    #[error("x = {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadratureSpec(String),

    #[error(
        "quadrature stalled at relative tolerance {achieved:e} (requested {requested:e}); best estimate {best}"
    )]
    QuadratureTolerance {
        requested: f64,
        achieved: f64,
        best: f64,
    },

    #[error("grid_per_gap = {0} is too coarse for the grid solver (need >= 8)")]
    GridTooCoarse(usize),

    #[error("convergence tolerance {0} must be positive and finite")]
    InvalidTolerance(f64),

    #[error(
        "solver did not converge: relative change {resid:e} after {iters} iterations",
        resid = .0.residual,
        iters = .0.iterations
    )]
    DidNotConverge(Box<OracleResult>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
