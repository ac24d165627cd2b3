//! The parametric bound family on marginal probabilities of output
//! evidence, its gap and convergence-rate bounds, the fixed variational
//! choice, and propagation of marginal bounds through Bayes' rule to
//! posterior intervals.
//!
//! Each evidence output `i` carries a half-width `eps_i > 0`. Conditioned
//! on every weighted input sum staying within `eps_i` of its mean, the
//! evidence probability factorizes into per-output transfer factors
//! evaluated at the worst ends of the intervals; the complementary event is
//! covered by the union-bound "throw-away" mass
//! `S = 2 sum_i exp(-N eps_i^2 / chi_i^2)`, which adds 1 to the upper bound
//! and 0 to the lower. All K-factor products are accumulated as sums of
//! logs: the probabilities of interest shrink exponentially with K.

use crate::error::{Error, Result};
use crate::network::{Evidence, TwoLayerNetwork};
use crate::transfer::TransferFunction;

/// Per-evidence-output variational half-widths, aligned index-for-index
/// with the evidence findings. Entries must be positive wherever the
/// output's deviation scale is nonzero; a zero-variance output pins its
/// weighted sum at the mean, so its entry is ignored and treated as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonVector(Vec<f64>);

impl EpsilonVector {
    pub fn new(eps: Vec<f64>) -> Result<Self> {
        for (k, &e) in eps.iter().enumerate() {
            if !e.is_finite() || e < 0.0 {
                return Err(Error::InvalidEpsilon { index: k, value: e });
            }
        }
        Ok(Self(eps))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Mean and deviation scale of one evidence output, with its finding.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FindingMoment {
    pub output: usize,
    pub positive: bool,
    pub mu: f64,
    pub chi_sq: f64,
}

pub(crate) fn finding_moments(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
) -> Result<Vec<FindingMoment>> {
    evidence.validate_against(net)?;
    Ok(evidence
        .findings()
        .iter()
        .map(|f| FindingMoment {
            output: f.output,
            positive: f.value,
            mu: net.output_mean(f.output),
            chi_sq: net.output_chi_sq(f.output),
        })
        .collect())
}

/// Validate an epsilon vector against the moments and return the effective
/// entries: zero-variance coordinates are forced to 0 (their weighted sums
/// are deterministic), all others must be strictly positive.
pub(crate) fn effective_epsilons(
    moments: &[FindingMoment],
    eps: &EpsilonVector,
) -> Result<Vec<f64>> {
    if eps.len() != moments.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} epsilons for {} findings",
            eps.len(),
            moments.len()
        )));
    }
    moments
        .iter()
        .zip(eps.as_slice())
        .enumerate()
        .map(|(k, (m, &e))| {
            if m.chi_sq == 0.0 {
                Ok(0.0)
            } else if e > 0.0 && e.is_finite() {
                Ok(e)
            } else {
                Err(Error::InvalidEpsilon { index: k, value: e })
            }
        })
        .collect()
}

/// For noisy-OR transfer arguments must stay nonnegative; the bound family
/// evaluates at `mu - eps`, so feasibility means `mu_i - eps_i >= 0`.
pub(crate) fn check_interval_feasible(
    transfer: TransferFunction,
    moments: &[FindingMoment],
    eps: &[f64],
) -> Result<()> {
    if transfer == TransferFunction::NoisyOr {
        for (m, &e) in moments.iter().zip(eps) {
            if m.mu - e < 0.0 {
                return Err(Error::NoisyOrInfeasible { output: m.output });
            }
        }
    }
    Ok(())
}

/// Deviation terms `exp(-N eps_i^2 / chi_i^2)` (0 where `chi_i^2 = 0`) and
/// their union-bound mass `S = 2 sum_i`.
pub(crate) fn deviation_terms(n: f64, moments: &[FindingMoment], eps: &[f64]) -> (Vec<f64>, f64) {
    let dev: Vec<f64> = moments
        .iter()
        .zip(eps)
        .map(|(m, &e)| {
            if m.chi_sq == 0.0 {
                0.0
            } else {
                (-(n * e * e) / m.chi_sq).exp()
            }
        })
        .collect();
    let s = 2.0 * dev.iter().sum::<f64>();
    (dev, s)
}

/// Sum of log transfer factors with the interval ends oriented to maximize
/// (`upper = true`) or minimize (`upper = false`) each factor.
pub(crate) fn log_product(
    transfer: TransferFunction,
    moments: &[FindingMoment],
    eps: &[f64],
    upper: bool,
) -> f64 {
    moments
        .iter()
        .zip(eps)
        .map(|(m, &e)| log_factor(transfer, m, e, upper))
        .sum()
}

pub(crate) fn log_factor(
    transfer: TransferFunction,
    m: &FindingMoment,
    e: f64,
    upper: bool,
) -> f64 {
    // Positive findings want f large, negative findings want f small; the
    // upper orientation shifts the argument in each factor's favor.
    if m.positive {
        let arg = if upper { m.mu + e } else { m.mu - e };
        transfer.log_eval_raw(arg)
    } else {
        let arg = if upper { m.mu - e } else { m.mu + e };
        transfer.log_one_minus_raw(arg)
    }
}

/// `ln(e^a + e^b)` tolerating `-inf` in either slot.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// The evaluated bound pair at one epsilon vector, in log domain, together
/// with the pieces it was assembled from.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsResult {
    /// `ln max(0, (1 - S) prod_lower)`; `-inf` encodes a vacuous lower bound.
    pub log_lower: f64,
    /// `ln min(1, (1 - S) prod_upper + S)`, always <= 0.
    pub log_upper: f64,
    /// Union-bound throw-away mass `S`.
    pub throwaway: f64,
    /// Per-output deviation terms `exp(-N eps_i^2 / chi_i^2)`.
    pub dev_terms: Vec<f64>,
    /// Log of the K-factor product with upper orientation.
    pub log_prod_upper: f64,
    /// Log of the K-factor product with lower orientation.
    pub log_prod_lower: f64,
}

impl BoundsResult {
    /// Clamped lower bound in linear domain.
    pub fn lower(&self) -> f64 {
        if self.log_lower == f64::NEG_INFINITY {
            0.0
        } else {
            self.log_lower.exp()
        }
    }

    /// Clamped upper bound in linear domain.
    pub fn upper(&self) -> f64 {
        self.log_upper.exp()
    }

    /// `(1 - S) prod_lower` without the clamp to [0, 1]; may be negative
    /// when `S > 1`.
    pub fn unclamped_lower(&self) -> f64 {
        (1.0 - self.throwaway) * self.log_prod_lower.exp()
    }

    /// `(1 - S) prod_upper + S` without the clamp; may exceed 1.
    pub fn unclamped_upper(&self) -> f64 {
        (1.0 - self.throwaway) * self.log_prod_upper.exp() + self.throwaway
    }

    /// Log of the unclamped lower bound (`-inf` when `S >= 1`).
    pub fn unclamped_log_lower(&self) -> f64 {
        if self.throwaway < 1.0 {
            (-self.throwaway).ln_1p() + self.log_prod_lower
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Evaluate the bound pair for the evidence at the given epsilon vector.
pub fn bounds_at(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    eps: &EpsilonVector,
) -> Result<BoundsResult> {
    let moments = finding_moments(net, evidence)?;
    bounds_from_moments(net.transfer(), net.scale_n() as f64, &moments, eps)
}

pub(crate) fn bounds_from_moments(
    transfer: TransferFunction,
    n: f64,
    moments: &[FindingMoment],
    eps: &EpsilonVector,
) -> Result<BoundsResult> {
    let eff = effective_epsilons(moments, eps)?;
    check_interval_feasible(transfer, moments, &eff)?;
    let (dev_terms, s) = deviation_terms(n, moments, &eff);
    let log_prod_upper = log_product(transfer, moments, &eff, true);
    let log_prod_lower = log_product(transfer, moments, &eff, false);

    let (log_lower, log_upper) = if s >= 1.0 {
        (f64::NEG_INFINITY, 0.0)
    } else {
        let log_one_minus_s = (-s).ln_1p();
        let lower = log_one_minus_s + log_prod_lower;
        let upper = log_add_exp(log_one_minus_s + log_prod_upper, s.ln()).min(0.0);
        (lower, upper)
    };
    Ok(BoundsResult {
        log_lower,
        log_upper,
        throwaway: s,
        dev_terms,
        log_prod_upper,
        log_prod_lower,
    })
}

/// Leave-one-out products over log factors, tolerating zero factors.
pub(crate) struct LeaveOneOut {
    finite_sum: f64,
    zero_count: usize,
}

impl LeaveOneOut {
    pub(crate) fn new(log_factors: &[f64]) -> Self {
        let mut finite_sum = 0.0;
        let mut zero_count = 0;
        for &lf in log_factors {
            if lf == f64::NEG_INFINITY {
                zero_count += 1;
            } else {
                finite_sum += lf;
            }
        }
        Self {
            finite_sum,
            zero_count,
        }
    }

    pub(crate) fn zero_count(&self) -> usize {
        self.zero_count
    }

    /// Product of every factor except index `i`.
    pub(crate) fn without(&self, log_factor_i: f64) -> f64 {
        if log_factor_i == f64::NEG_INFINITY {
            if self.zero_count == 1 {
                self.finite_sum.exp()
            } else {
                0.0
            }
        } else if self.zero_count > 0 {
            0.0
        } else {
            (self.finite_sum - log_factor_i).exp()
        }
    }
}

/// Upper bound on the gap between the unclamped upper and lower bounds at
/// the same epsilon vector:
/// `2 alpha sum_i eps_i prod_{j != i}(upper factors) + 2 sum_i dev_i`.
pub fn gap_bound(net: &TwoLayerNetwork, evidence: &Evidence, eps: &EpsilonVector) -> Result<f64> {
    let moments = finding_moments(net, evidence)?;
    let transfer = net.transfer();
    let eff = effective_epsilons(&moments, eps)?;
    check_interval_feasible(transfer, &moments, &eff)?;
    let (dev_terms, _) = deviation_terms(net.scale_n() as f64, &moments, &eff);

    let log_factors: Vec<f64> = moments
        .iter()
        .zip(&eff)
        .map(|(m, &e)| log_factor(transfer, m, e, true))
        .collect();
    let loo = LeaveOneOut::new(&log_factors);
    let walk: f64 = eff
        .iter()
        .zip(&log_factors)
        .map(|(&e, &lf)| e * loo.without(lf))
        .sum();
    Ok(2.0 * transfer.slope() * walk + 2.0 * dev_terms.iter().sum::<f64>())
}

/// The fixed variational choice `eps_i = sqrt(2 gamma chi_i^2 ln(N) / N)`
/// for `gamma > 1`, which drives every deviation term to `N^{-2 gamma}`.
/// Zero-variance outputs get `eps_i = 0`.
pub fn fixed_epsilon(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    gamma: f64,
) -> Result<EpsilonVector> {
    let moments = finding_moments(net, evidence)?;
    fixed_epsilon_from_moments(net.scale_n(), &moments, gamma)
}

pub(crate) fn fixed_epsilon_from_moments(
    scale_n: usize,
    moments: &[FindingMoment],
    gamma: f64,
) -> Result<EpsilonVector> {
    if scale_n < 2 {
        return Err(Error::InvalidArgument {
            name: "n_inputs",
            value: scale_n as f64,
        });
    }
    if gamma.is_nan() || gamma <= 1.0 || !gamma.is_finite() {
        return Err(Error::InvalidArgument {
            name: "gamma",
            value: gamma,
        });
    }
    let n = scale_n as f64;
    let eps = moments
        .iter()
        .map(|m| (2.0 * gamma * m.chi_sq * n.ln() / n).sqrt())
        .collect();
    EpsilonVector::new(eps)
}

/// The convergence-rate bound on the gap at the fixed epsilon choice:
/// `2K / N^{2 gamma} + 2 alpha sqrt(2 gamma ln N / N)
///  sum_i chi_i prod_{j != i}(upper factors at the fixed choice)`.
pub fn rate_bound(net: &TwoLayerNetwork, evidence: &Evidence, gamma: f64) -> Result<f64> {
    let moments = finding_moments(net, evidence)?;
    let transfer = net.transfer();
    let eps = fixed_epsilon_from_moments(net.scale_n(), &moments, gamma)?;
    let eff = effective_epsilons(&moments, &eps)?;
    check_interval_feasible(transfer, &moments, &eff)?;

    let n = net.scale_n() as f64;
    let k = moments.len() as f64;
    let log_factors: Vec<f64> = moments
        .iter()
        .zip(&eff)
        .map(|(m, &e)| log_factor(transfer, m, e, true))
        .collect();
    let loo = LeaveOneOut::new(&log_factors);
    let damped: f64 = moments
        .iter()
        .zip(&log_factors)
        .map(|(m, &lf)| m.chi_sq.sqrt() * loo.without(lf))
        .sum();
    Ok(2.0 * k / n.powf(2.0 * gamma)
        + 2.0 * transfer.slope() * (2.0 * gamma * n.ln() / n).sqrt() * damped)
}

/// A posterior probability interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalProbability {
    pub lo: f64,
    pub hi: f64,
}

impl IntervalProbability {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidArgument {
                name: "interval",
                value: lo,
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.lo..=self.hi).contains(&p)
    }
}

/// Bound the posterior `Pr[X_j = 1 | evidence]` by propagating marginal
/// bounds of the two clamped conditionals through Bayes' rule.
///
/// With `a in [a_lo, a_hi] = p_j * bounds(Pr[evidence | X_j = 1])` and
/// `b in [b_lo, b_hi] = (1 - p_j) * bounds(Pr[evidence | X_j = 0])`, the
/// ratio `a / (a + b)` is increasing in `a` and decreasing in `b`, so the
/// interval is `[a_lo / (a_lo + b_hi), a_hi / (a_hi + b_lo)]`. A vanishing
/// numerator bound resolves any 0/0 to 0: the posterior itself is then 0.
///
/// The two epsilon vectors are independent parameters: the clamped
/// networks have different means, so their good choices differ.
pub fn posterior_bounds(
    net: &TwoLayerNetwork,
    j: usize,
    evidence: &Evidence,
    eps_when_one: &EpsilonVector,
    eps_when_zero: &EpsilonVector,
) -> Result<IntervalProbability> {
    if j >= net.n_inputs() {
        return Err(Error::InputIndexOutOfRange {
            index: j,
            n_inputs: net.n_inputs(),
        });
    }
    let p = net.bias()[j];
    let when_one = bounds_at(&net.clamp_input(j, true)?, evidence, eps_when_one)?;
    let when_zero = bounds_at(&net.clamp_input(j, false)?, evidence, eps_when_zero)?;

    let a_lo = p * when_one.lower();
    let a_hi = p * when_one.upper();
    let b_lo = (1.0 - p) * when_zero.lower();
    let b_hi = (1.0 - p) * when_zero.upper();

    if a_hi + b_hi == 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    let lo = if a_lo == 0.0 {
        0.0
    } else {
        a_lo / (a_lo + b_hi)
    };
    let hi = if a_hi == 0.0 {
        0.0
    } else {
        a_hi / (a_hi + b_lo)
    };
    IntervalProbability::new(lo, hi)
}
