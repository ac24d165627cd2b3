//! Rigorous, efficiently evaluable upper and lower bounds on marginal and
//! posterior probabilities in two-layer belief networks whose conditional
//! probability tables are transfer functions of weighted input sums.
//!
//! The bound family conditions on every evidence output's weighted input
//! sum staying within a per-output half-width of its mean and covers the
//! complement with an exponential union-bound mass; the half-widths are
//! free variational parameters. The crate provides:
//!
//! - [`network`]: network construction, random generation, input clamping,
//!   joint sampling, and the JSON file formats;
//! - [`largedev`]: the concentration primitives (`phi`, the scaled
//!   log-moment function, `chi_squared`, and the exponential tail bound);
//! - [`exact`]: a brute-force enumeration oracle for desk-scale validation;
//! - [`bounds`]: the bound family in log domain, its gap and rate bounds,
//!   the fixed variational choice, and posterior interval propagation;
//! - [`optimize`]: projected gradient ascent/descent on the half-widths.
//!
//! All types are immutable after construction and all operations are pure
//! except sampling, which takes an explicit RNG handle; everything here is
//! safe to share across threads. Floating point is `f64` throughout.

pub mod bounds;
pub mod error;
pub mod exact;
pub mod largedev;
pub mod network;
pub mod optimize;
pub mod transfer;

pub use bounds::{
    bounds_at, fixed_epsilon, gap_bound, posterior_bounds, rate_bound, BoundsResult, EpsilonVector,
    IntervalProbability,
};
pub use error::{Error, Result};
pub use exact::{exact_deviation_prob, exact_marginal, exact_posterior, EnumerationLimit};
pub use largedev::{
    chi_squared, moment_g, moment_g_zero_t_limit, phi, tail_bound, TailBoundInputs,
};
pub use network::{Evidence, Finding, TwoLayerNetwork};
pub use optimize::{
    grad_log_lower, grad_upper, optimize_lower, optimize_upper, OptimizationResult, OptimizerConfig,
};
pub use transfer::TransferFunction;
