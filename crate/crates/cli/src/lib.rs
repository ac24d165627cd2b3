//! Library half of the CLI: the scaling experiment and the validation
//! suites, kept out of `main.rs` so integration tests can drive them
//! directly.

pub mod experiment;
pub mod validate;

/// Render a float with 17 significant digits, enough to round-trip any
/// `f64` and keep output byte-deterministic.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
