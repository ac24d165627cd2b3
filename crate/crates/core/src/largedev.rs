//! Concentration primitives for weighted sums of independent binary
//! variables: the bias-dependent moment coefficient `phi`, the scaled
//! log-moment function `moment_g`, the weighted-variance proxy
//! `chi_squared`, and the two-sided exponential tail bound.

use crate::error::{Error, Result};

/// `phi(p) = (1 - 2p) / ln((1 - p) / p)`, with the removable singularities
/// filled in: `phi(0) = phi(1) = 0` and `phi(1/2) = 1/2`.
///
/// Symmetric about 1/2, maximized there, and bounded by [0, 1/2]. Near the
/// midpoint the direct quotient is 0/0, so a short even Taylor expansion is
/// used instead; near the endpoints the result is snapped to 0 before the
/// logarithm can overflow.
pub fn phi(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument {
            name: "p",
            value: p,
        });
    }
    Ok(phi_unit(p))
}

/// `phi` on a pre-validated `p in [0, 1]`.
pub(crate) fn phi_unit(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    // Exact for q >= 1/2, so phi(p) == phi(1 - p) bitwise on pairs that are
    // both representable.
    let q = if p > 0.5 { 1.0 - p } else { p };
    if q < 1e-300 {
        return 0.0;
    }
    let half_gap = 0.5 - q;
    if half_gap < 1e-4 {
        // phi(q) = 1/2 - (2/3)(q - 1/2)^2 + O((q - 1/2)^4)
        return 0.5 - (2.0 / 3.0) * half_gap * half_gap;
    }
    let num = 1.0 - 2.0 * q;
    // ln((1 - q)/q) = ln(1 + (1 - 2q)/q)
    num / (num / q).ln_1p()
}

/// Scaled log-moment function `g(p, t) = t^{-2} ln[(1-p) e^{-tp} + p e^{t(1-p)}]`.
///
/// Defined for `p` strictly inside (0, 1) and `t != 0`; bounded above by
/// `phi(p) / 4` for every `t`, with the supremum attained at
/// `t = 2 ln((1-p)/p)`. Evaluated by factoring out the larger exponent, so
/// the inner argument of the logarithm is always in (0, 1] and no
/// intermediate can overflow.
pub fn moment_g(p: f64, t: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument {
            name: "p",
            value: p,
        });
    }
    if t == 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument {
            name: "t",
            value: t,
        });
    }
    let log_moment = if t > 0.0 {
        // m = t(1-p):  ln[p + (1-p) e^{-t}] + t(1-p)
        t * (1.0 - p) + ((1.0 - p) * (-t).exp_m1()).ln_1p()
    } else {
        // m = -tp:  ln[(1-p) + p e^{t}] - tp
        -t * p + (p * t.exp_m1()).ln_1p()
    };
    Ok(log_moment / (t * t))
}

/// Limit of `moment_g(p, t)` as `t -> 0`: half the Bernoulli variance,
/// `p (1 - p) / 2`. Provided for tests; `moment_g` itself rejects `t = 0`.
pub fn moment_g_zero_t_limit(p: f64) -> f64 {
    p * (1.0 - p) / 2.0
}

/// Weighted-variance proxy `(1/N) sum_j tau_j^2 phi(p_j)` for a weight row
/// and its input biases. Zero exactly when every term has a zero weight or
/// a deterministic bias.
pub fn chi_squared(tau_row: &[f64], bias: &[f64]) -> Result<f64> {
    if tau_row.len() != bias.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} biases",
            tau_row.len(),
            bias.len()
        )));
    }
    if tau_row.is_empty() {
        return Err(Error::DimensionMismatch("empty weight row".into()));
    }
    let mut sum = 0.0;
    for (&tau, &p) in tau_row.iter().zip(bias) {
        sum += tau * tau * phi(p)?;
    }
    Ok(sum / tau_row.len() as f64)
}

/// Inputs for the two-sided tail bound: the number of summands, the
/// deviation half-width, and the weighted-variance proxy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundInputs {
    pub n: usize,
    pub epsilon: f64,
    pub chi_sq: f64,
}

impl TailBoundInputs {
    pub fn new(n: usize, epsilon: f64, chi_sq: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument {
                name: "n",
                value: 0.0,
            });
        }
        if epsilon.is_nan() || epsilon <= 0.0 || !epsilon.is_finite() {
            return Err(Error::InvalidArgument {
                name: "epsilon",
                value: epsilon,
            });
        }
        if chi_sq.is_nan() || chi_sq < 0.0 || !chi_sq.is_finite() {
            return Err(Error::InvalidArgument {
                name: "chi_sq",
                value: chi_sq,
            });
        }
        Ok(Self { n, epsilon, chi_sq })
    }
}

/// Two-sided tail bound `2 exp(-N eps^2 / chi^2)` on the probability that
/// the weighted mean deviates from its expectation by more than `eps`.
///
/// A zero `chi^2` means the weighted sum is deterministic, so the deviation
/// probability is exactly zero and the bound returns 0 rather than dividing
/// by zero.
pub fn tail_bound(inputs: &TailBoundInputs) -> f64 {
    if inputs.chi_sq == 0.0 {
        return 0.0;
    }
    2.0 * (-(inputs.n as f64 * inputs.epsilon * inputs.epsilon) / inputs.chi_sq).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn phi_midpoint_and_endpoints() {
        assert_eq!(phi(0.5).unwrap(), 0.5);
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert_eq!(phi(1.0).unwrap(), 0.0);
    }

    #[test]
    fn phi_quarter_matches_closed_form() {
        // phi(1/4) = 0.5 / ln 3
        assert_relative_eq!(phi(0.25).unwrap(), 0.5 / 3f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn phi_rejects_out_of_range() {
        assert!(phi(-0.01).is_err());
        assert!(phi(1.01).is_err());
        assert!(phi(f64::NAN).is_err());
    }

    #[test]
    fn phi_symmetric_bitwise_on_dyadic_grid() {
        for k in 1..1024u32 {
            let p = k as f64 / 1024.0;
            let a = phi(p).unwrap();
            let b = phi(1.0 - p).unwrap();
            assert_eq!(a.to_bits(), b.to_bits(), "asymmetry at p = {p}");
        }
    }

    #[test]
    fn phi_continuous_across_taylor_switch() {
        // The series branch takes over at |p - 1/2| = 1e-4.
        for delta in [0.9999e-4, 1.0001e-4] {
            let direct = {
                let q: f64 = 0.5 - delta;
                (1.0 - 2.0 * q) / ((1.0 - q) / q).ln()
            };
            assert_relative_eq!(phi(0.5 - delta).unwrap(), direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn phi_monotone_on_lower_half() {
        let mut prev = 0.0;
        for k in 1..=512 {
            let v = phi(k as f64 / 1024.0).unwrap();
            assert!(v >= prev, "phi not nondecreasing at k = {k}");
            prev = v;
        }
        assert_eq!(prev, 0.5);
    }

    #[test]
    fn moment_g_near_zero_t_approaches_half_variance() {
        let g = moment_g(0.5, 1e-4).unwrap();
        assert!((g - moment_g_zero_t_limit(0.5)).abs() < 1e-9);
        assert_relative_eq!(moment_g_zero_t_limit(0.5), 0.125, max_relative = 0.0);
    }

    #[test]
    fn moment_g_attains_phi_over_four_at_maximizer() {
        for p in [0.05f64, 0.1, 0.25, 0.4, 0.45, 0.6, 0.9] {
            let t_star = 2.0 * ((1.0 - p) / p).ln();
            let g = moment_g(p, t_star).unwrap();
            assert!(
                (g - phi(p).unwrap() / 4.0).abs() < 1e-12,
                "slack at p = {p}: g = {g}"
            );
        }
    }

    #[test]
    fn moment_g_below_bound_at_large_t() {
        let g = moment_g(0.25, 10.0).unwrap();
        assert!(g <= phi(0.25).unwrap() / 4.0);
        assert_relative_eq!(
            phi(0.25).unwrap() / 4.0,
            0.5 / 3f64.ln() / 4.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn moment_g_rejects_degenerate_inputs() {
        assert!(moment_g(0.0, 1.0).is_err());
        assert!(moment_g(1.0, 1.0).is_err());
        assert!(moment_g(0.5, 0.0).is_err());
        assert!(moment_g(0.5, f64::INFINITY).is_err());
    }

    #[test]
    fn chi_squared_uniform_case_is_half() {
        let tau = vec![1.0; 8];
        let p = vec![0.5; 8];
        assert_eq!(chi_squared(&tau, &p).unwrap(), 0.5);
    }

    #[test]
    fn chi_squared_vanishes_for_deterministic_biases() {
        let tau = vec![3.0, -2.0, 0.7];
        let p = vec![0.0, 1.0, 1.0];
        assert_eq!(chi_squared(&tau, &p).unwrap(), 0.0);
    }

    #[test]
    fn chi_squared_hand_example() {
        let got = chi_squared(&[2.0, 0.0, 1.0], &[0.25, 0.9, 0.5]).unwrap();
        let expected = (4.0 * (0.5 / 3f64.ln()) + 0.5) / 3.0;
        assert_relative_eq!(got, expected, max_relative = 1e-14);
        assert!((got - 0.773_49).abs() < 1e-5);
    }

    #[test]
    fn chi_squared_rejects_mismatched_lengths() {
        assert!(chi_squared(&[1.0, 2.0], &[0.5]).is_err());
        assert!(chi_squared(&[], &[]).is_err());
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(tail_bound(&TailBoundInputs::new(5, 0.3, 0.0).unwrap()), 0.0);
        let b = tail_bound(&TailBoundInputs::new(100, 0.1, 0.5).unwrap());
        assert_relative_eq!(b, 2.0 * (-2.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn tail_bound_matches_chernoff_in_uniform_case() {
        // tau_j = 1, p_j = 1/2 gives chi^2 = 1/2 and the bound 2 e^{-2 N eps^2}.
        for n in [5usize, 10, 25] {
            let chi = chi_squared(&vec![1.0; n], &vec![0.5; n]).unwrap();
            for &eps in &[0.05, 0.1, 0.2, 0.4] {
                let b = tail_bound(&TailBoundInputs::new(n, eps, chi).unwrap());
                let chernoff = 2.0 * (-2.0 * (n as f64 * eps * eps)).exp();
                assert_relative_eq!(b, chernoff, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn tail_bound_input_validation() {
        assert!(TailBoundInputs::new(0, 0.1, 0.5).is_err());
        assert!(TailBoundInputs::new(5, 0.0, 0.5).is_err());
        assert!(TailBoundInputs::new(5, 0.1, -0.5).is_err());
    }

    proptest! {
        // The moment function never exceeds phi(p)/4, any t.
        #[test]
        fn moment_g_bounded_by_quarter_phi(
            p in 1e-3f64..0.999,
            t in prop_oneof![-50f64..-1e-3, 1e-3f64..50.0],
        ) {
            let g = moment_g(p, t).unwrap();
            prop_assert!(g <= phi(p).unwrap() / 4.0 + 1e-12);
        }

        #[test]
        fn tail_bound_monotone_in_eps_and_n(
            n in 2usize..200,
            eps in 1e-3f64..1.0,
            chi in 1e-3f64..4.0,
        ) {
            // Strict monotonicity only holds while the exponential has not
            // underflowed to zero.
            prop_assume!((n + 1) as f64 * (eps * 1.5) * (eps * 1.5) / chi < 700.0);
            let b = tail_bound(&TailBoundInputs::new(n, eps, chi).unwrap());
            let b_eps = tail_bound(&TailBoundInputs::new(n, eps * 1.5, chi).unwrap());
            let b_n = tail_bound(&TailBoundInputs::new(n + 1, eps, chi).unwrap());
            prop_assert!(b_eps < b);
            prop_assert!(b_n < b);
        }

        #[test]
        fn phi_stays_in_range(p in 0f64..=1.0) {
            let v = phi(p).unwrap();
            prop_assert!((0.0..=0.5).contains(&v));
        }
    }
}
