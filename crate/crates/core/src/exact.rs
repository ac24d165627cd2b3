//! Ground-truth probabilities by exhaustive enumeration over all 2^N input
//! configurations. Exponential in N, so every entry point is guarded by an
//! explicit size limit; intended for validating the bounds at desk scale.

use crate::error::{Error, Result};
use crate::network::{Evidence, TwoLayerNetwork};

/// Cap on the number of inputs an enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimit {
    max_inputs: usize,
}

impl EnumerationLimit {
    /// The cost is 2^max_inputs terms; 62 keeps the bit mask in a u64,
    /// although anything past ~30 is already impractical.
    pub fn new(max_inputs: usize) -> Result<Self> {
        if max_inputs == 0 || max_inputs > 62 {
            return Err(Error::InvalidArgument {
                name: "max_inputs",
                value: max_inputs as f64,
            });
        }
        Ok(Self { max_inputs })
    }

    pub fn max_inputs(&self) -> usize {
        self.max_inputs
    }

    fn check(&self, n: usize) -> Result<()> {
        if n > self.max_inputs {
            Err(Error::EnumerationLimitExceeded {
                n,
                max: self.max_inputs,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for EnumerationLimit {
    fn default() -> Self {
        Self { max_inputs: 20 }
    }
}

/// Neumaier compensated sum: keeps the enumeration exact to within a few
/// ulps regardless of term ordering.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, term: f64) {
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.compensation += (self.sum - t) + term;
        } else {
            self.compensation += (term - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Exact marginal probability of the evidence, summed over every input
/// configuration in plain binary-counting order:
/// `sum_x prior(x) * prod_i f(s_i(x))^{v_i} (1 - f(s_i(x)))^{1 - v_i}`.
pub fn exact_marginal(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    limit: EnumerationLimit,
) -> Result<f64> {
    evidence.validate_against(net)?;
    let n = net.n_inputs();
    limit.check(n)?;

    let transfer = net.transfer();
    let mut acc = CompensatedSum::default();
    for mask in 0u64..(1u64 << n) {
        let mut term = 1.0;
        for (j, &p) in net.bias().iter().enumerate() {
            term *= if mask >> j & 1 == 1 { p } else { 1.0 - p };
            if term == 0.0 {
                break;
            }
        }
        if term == 0.0 {
            continue;
        }
        for f in evidence.findings() {
            let prob = transfer.eval_raw(net.weighted_sum(f.output, mask));
            term *= if f.value { prob } else { 1.0 - prob };
        }
        acc.add(term);
    }
    Ok(acc.value().clamp(0.0, 1.0))
}

/// Exact posterior `Pr[X_j = 1 | evidence]` by Bayes' rule over the two
/// clamped conditional marginals.
pub fn exact_posterior(
    net: &TwoLayerNetwork,
    j: usize,
    evidence: &Evidence,
    limit: EnumerationLimit,
) -> Result<f64> {
    if j >= net.n_inputs() {
        return Err(Error::InputIndexOutOfRange {
            index: j,
            n_inputs: net.n_inputs(),
        });
    }
    limit.check(net.n_inputs())?;
    let p = net.bias()[j];
    let m1 = exact_marginal(&net.clamp_input(j, true)?, evidence, limit)?;
    let m0 = exact_marginal(&net.clamp_input(j, false)?, evidence, limit)?;
    let numerator = p * m1;
    let denominator = numerator + (1.0 - p) * m0;
    if denominator <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// Exact probability that the weighted mean of independent Bernoulli draws
/// deviates from its expectation by more than `epsilon`:
/// `Pr[ |(1/N) sum_j w_j (X_j - p_j)| > eps ]`, by enumeration.
pub fn exact_deviation_prob(
    weights: &[f64],
    biases: &[f64],
    epsilon: f64,
    limit: EnumerationLimit,
) -> Result<f64> {
    let n = weights.len();
    if n == 0 || n != biases.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} biases",
            n,
            biases.len()
        )));
    }
    limit.check(n)?;
    if epsilon.is_nan() || epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidArgument {
            name: "epsilon",
            value: epsilon,
        });
    }
    for (j, &p) in biases.iter().enumerate() {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::BiasOutOfRange { index: j, value: p });
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("weights".into()));
    }

    let n_f = n as f64;
    let centered_mean: f64 = weights.iter().zip(biases).map(|(&w, &p)| w * p).sum();
    let mut acc = CompensatedSum::default();
    for mask in 0u64..(1u64 << n) {
        let mut prior = 1.0;
        let mut dot = 0.0;
        for j in 0..n {
            if mask >> j & 1 == 1 {
                prior *= biases[j];
                dot += weights[j];
            } else {
                prior *= 1.0 - biases[j];
            }
        }
        if prior == 0.0 {
            continue;
        }
        if ((dot - centered_mean) / n_f).abs() > epsilon {
            acc.add(prior);
        }
    }
    Ok(acc.value().clamp(0.0, 1.0))
}
