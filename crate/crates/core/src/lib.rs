//! Simulation and numerical-verification toolkit for time-varying MIMO
//! Rayleigh fading channels whose gains follow a first-order Gauss-Markov
//! recursion and whose realization is known at the receiver.
//!
//! The crate is organized around the objects of that model:
//!
//! - [`matrix`] — dense complex Hermitian linear algebra and
//!   circularly-symmetric Gaussian sampling used everywhere else;
//! - [`channel`] — the gain recursion, its closed forms, and the fading
//!   channel itself;
//! - [`capacity`] — Monte Carlo evaluation of the ergodic log-det capacity
//!   objective and its maximization over trace-constrained input covariances;
//! - [`infodensity`] — closed-form information densities and the variance /
//!   correlation-decay experiments built on them;
//! - [`bounds`] — Chernoff power-tail bounds and randomized checks of the
//!   matrix inequalities the analysis relies on;
//! - [`coding`] — random codebooks with a threshold decoder and error-rate
//!   simulation.
//!
//! Every experiment is deterministic given a master seed: trials draw from
//! per-index substreams (see [`rng::SeedSequence`]), so results do not depend
//! on the number of worker threads.

pub mod bounds;
pub mod capacity;
pub mod channel;
pub mod coding;
pub mod error;
pub mod infodensity;
pub mod matrix;
pub mod rng;
pub mod stats;

pub use error::Error;
pub use num_complex::Complex64;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// log2(e), the single conversion factor between natural-log intermediates
/// and the bit-valued quantities reported everywhere.
pub const LOG2_E: f64 = std::f64::consts::LOG2_E;
