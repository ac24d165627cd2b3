//! Transfer functions: nondecreasing maps from the reals into [0, 1] used as
//! conditional probability tables, together with their slope bounds and
//! numerically careful log evaluations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parametric transfer function with a global bound on its derivative.
///
/// `Sigmoid` is `f(x) = 1 / (1 + exp(-x))` with slope 1/4 on all of ℝ.
/// `NoisyOr` is `f(x) = 1 - exp(-x)` with slope 1 on its admissible
/// domain `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferFunction {
    Sigmoid,
    NoisyOr,
}

impl TransferFunction {
    /// Global upper bound on `f'`.
    pub fn slope(self) -> f64 {
        match self {
            TransferFunction::Sigmoid => 0.25,
            TransferFunction::NoisyOr => 1.0,
        }
    }

    /// Whether `x` lies in the admissible domain.
    pub fn admissible(self, x: f64) -> bool {
        match self {
            TransferFunction::Sigmoid => !x.is_nan(),
            TransferFunction::NoisyOr => x >= 0.0,
        }
    }

    fn check_domain(self, x: f64) -> Result<()> {
        if self.admissible(x) {
            Ok(())
        } else {
            Err(Error::TransferDomain { x })
        }
    }

    /// Evaluate `f(x)`. Errors when `x` is outside the admissible domain.
    pub fn eval(self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval_raw(x))
    }

    /// Evaluate `f'(x)`. Errors when `x` is outside the admissible domain.
    pub fn deriv(self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.deriv_raw(x))
    }

    /// `f(x)` without the domain check; callers guarantee admissibility.
    pub(crate) fn eval_raw(self, x: f64) -> f64 {
        match self {
            TransferFunction::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            // 1 - e^{-x} via expm1 keeps precision for small x.
            TransferFunction::NoisyOr => -(-x).exp_m1(),
        }
    }

    /// `f'(x)` without the domain check.
    pub(crate) fn deriv_raw(self, x: f64) -> f64 {
        match self {
            // sigma'(x) = sigma(x) * sigma(-x); the product form stays
            // accurate when one factor saturates.
            TransferFunction::Sigmoid => self.eval_raw(x) * self.eval_raw(-x),
            TransferFunction::NoisyOr => (-x).exp(),
        }
    }

    /// `ln f(x)` without the domain check.
    pub(crate) fn log_eval_raw(self, x: f64) -> f64 {
        match self {
            TransferFunction::Sigmoid => -softplus(-x),
            TransferFunction::NoisyOr => log1mexp(x),
        }
    }

    /// `ln (1 - f(x))` without the domain check.
    ///
    /// For the sigmoid this uses the exact complement `1 - f(x) = f(-x)`;
    /// for noisy-OR the complement is `e^{-x}`, so the log is `-x` exactly.
    pub(crate) fn log_one_minus_raw(self, x: f64) -> f64 {
        match self {
            TransferFunction::Sigmoid => -softplus(x),
            TransferFunction::NoisyOr => -x,
        }
    }

    /// `f'(x) / f(x)` in a saturation-proof form.
    pub(crate) fn ratio_deriv_over_eval(self, x: f64) -> f64 {
        match self {
            // sigma'/sigma = sigma(-x)
            TransferFunction::Sigmoid => self.eval_raw(-x),
            // e^{-x} / (1 - e^{-x}) = 1 / (e^x - 1)
            TransferFunction::NoisyOr => 1.0 / x.exp_m1(),
        }
    }

    /// `f'(x) / (1 - f(x))` in a saturation-proof form.
    pub(crate) fn ratio_deriv_over_comp(self, x: f64) -> f64 {
        match self {
            // sigma' / sigma(-x) = sigma(x)
            TransferFunction::Sigmoid => self.eval_raw(x),
            // e^{-x} / e^{-x} = 1
            TransferFunction::NoisyOr => 1.0,
        }
    }
}

impl std::fmt::Display for TransferFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransferFunction::Sigmoid => write!(f, "sigmoid"),
            TransferFunction::NoisyOr => write!(f, "noisy_or"),
        }
    }
}

impl std::str::FromStr for TransferFunction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sigmoid" => Ok(TransferFunction::Sigmoid),
            "noisy_or" | "noisy-or" => Ok(TransferFunction::NoisyOr),
            other => Err(format!("unknown transfer function `{other}`")),
        }
    }
}

/// Stable `ln(1 + e^x)`.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Stable `ln(1 - e^{-x})` for `x > 0` (0 maps to -inf).
fn log1mexp(x: f64) -> f64 {
    if x > std::f64::consts::LN_2 {
        (-(-x).exp()).ln_1p()
    } else {
        (-(-x).exp_m1()).ln()
    }
}
