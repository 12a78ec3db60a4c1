//! Over-the-air model aggregation for federated learning, assisted by a
//! passive reflecting surface.
//!
//! The crate provides, bottom to top:
//!
//! - [`channel`]: reproducible uplink channel realizations (path loss,
//!   Rician fading, array steering) and the effective per-device channel
//!   under a given surface configuration.
//! - [`aircomp`]: the analog-aggregation error model — optimal transmit
//!   scalars, denoising factor, closed-form aggregation MSE, and a
//!   Monte-Carlo oracle for it.
//! - [`sdp`]: a self-contained operator-splitting solver for conic
//!   programs with one Hermitian PSD block and a nonnegative scalar block.
//! - [`dc`]: difference-of-convex drivers that force rank-one solutions of
//!   the lifted beamformer / phase-shift subproblems.
//! - [`select`]: the two-step device-selection pipeline (sparsity-inducing
//!   priorities, then bisection feasibility detection), plus the SDR,
//!   random-phase and no-surface baselines.
//! - [`fl`]: federated averaging on a synthetic convex task with injected
//!   aggregation error.
//! - [`experiment`]: batch experiment driver behind the `airfl` binary.

pub mod aircomp;
pub mod channel;
pub mod dc;
pub mod experiment;
pub mod fl;
pub mod rng;
pub mod sdp;
pub mod select;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate effective channel: {0}")]
    DegenerateChannel(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("solver failure ({context}): {message}")]
    Solver { context: String, message: String },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
