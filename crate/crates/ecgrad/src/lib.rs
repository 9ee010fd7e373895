//! Compressed-gradient optimization with and without error compensation.
//!
//! The crate simulates the synchronous master/worker architecture where each
//! worker sends a lossily compressed (stochastic) gradient to the master.
//! Direct compression pays a permanent accuracy floor proportional to the
//! compression precision; error compensation — feeding the memory of past
//! compression errors back into the payload, ideally weighted by `I − γH` —
//! removes the accumulation and shrinks the floor by roughly a condition
//! number. Everything here exists to make those statements checkable at desk
//! scale:
//!
//! - [`compressors`]: the ε-compressors (bounded worst-case error `‖Q(v)−v‖ ≤ ε`).
//! - [`problems`]: quadratic and ERM objectives with exact gradients, Hessians,
//!   smoothness/strong-convexity constants, and seeded stochastic oracles.
//! - [`schemes`]: one optimization step per algorithm variant (direct, and
//!   error-compensated with identity/scaled/Hessian/diagonal/BFGS weightings).
//! - [`theory`]: closed-form convergence bounds, residual floors, the scalar
//!   worst-case trajectory, and step-size rules.
//! - [`simulation`]: multi-iteration runs with metric traces and scheme
//!   comparisons, deterministic given a seed.
//! - [`data_io`]: LIBSVM parsing, normalization, sharding, synthetic generators.
//! - [`verify`]: the named verification suites the CLI and the acceptance
//!   tests both drive.
//!
//! Runs are bit-reproducible: every random draw comes from a counter-derived
//! ChaCha stream keyed by `(seed, worker, iteration, purpose)`, so results do
//! not depend on thread count (see `ECGRAD_THREADS`) or scheme bookkeeping.

pub mod compressors;
pub mod config;
pub mod data_io;
pub mod problems;
pub mod schemes;
pub mod simulation;
pub mod theory;
pub mod verify;

use thiserror::Error;

/// Crate-wide error type. `Config` and `Parse` map to CLI exit code 2,
/// `Diverged` to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("run diverged at iteration {iteration} (|x| = {norm:.3e})")]
    Diverged { iteration: usize, norm: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
