//! The gradient suite must catch a wrong gradient: feed it a version of
//! the lower-bound gradient with the sign of the deviation-relief term
//! flipped and require a failure report.

use ldbounds::{bounds_at, EpsilonVector, Evidence, TransferFunction, TwoLayerNetwork};
use ldbounds_cli::validate::{gradient_suite, SuiteStatus};

/// The analytic lower-bound gradient, transcribed from public pieces, with
/// the first (deviation-relief) term deliberately negated.
fn sign_flipped_grad(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    eps: &EpsilonVector,
) -> ldbounds::Result<Vec<f64>> {
    let n = net.scale_n() as f64;
    let f = net.transfer();
    let dev: Vec<f64> = evidence
        .findings()
        .iter()
        .zip(eps.as_slice())
        .map(|(fi, &e)| {
            let chi = net.output_chi_sq(fi.output);
            if chi == 0.0 {
                0.0
            } else {
                (-(n * e * e) / chi).exp()
            }
        })
        .collect();
    let s = 2.0 * dev.iter().sum::<f64>();
    Ok(evidence
        .findings()
        .iter()
        .zip(eps.as_slice().iter().zip(&dev))
        .map(|(fi, (&e, &d))| {
            let chi = net.output_chi_sq(fi.output);
            if chi == 0.0 {
                return 0.0;
            }
            let mu = net.output_mean(fi.output);
            let relief = (4.0 * n * e / chi) * d / (1.0 - s);
            let cost = if fi.value {
                f.deriv(mu - e).unwrap() / f.eval(mu - e).unwrap()
            } else {
                f.deriv(mu + e).unwrap() / (1.0 - f.eval(mu + e).unwrap())
            };
            -relief - cost // flipped: should be +relief - cost
        })
        .collect())
}

fn lower_objective(net: &TwoLayerNetwork, evidence: &Evidence, eps: &EpsilonVector) -> f64 {
    bounds_at(net, evidence, eps).unwrap().unclamped_log_lower()
}

#[test]
fn sign_flip_in_relief_term_is_caught() {
    let outcome = gradient_suite("mutated-lower", &sign_flipped_grad, &lower_objective, 9, 40);
    assert_eq!(outcome.status, SuiteStatus::Failed);
    assert!(outcome.failures > 0);
}

#[test]
fn true_gradient_passes_the_same_suite() {
    let outcome = gradient_suite(
        "true-lower",
        &|net, ev, eps| ldbounds::grad_log_lower(net, ev, eps),
        &lower_objective,
        9,
        40,
    );
    assert_eq!(outcome.status, SuiteStatus::Passed);
    assert_eq!(outcome.failures, 0);
}

#[test]
fn transcribed_gradient_matches_the_implementation() {
    // The un-flipped transcription and the library implementation are the
    // same formula computed along different paths.
    let net = TwoLayerNetwork::random(9, 3, 0.5, TransferFunction::Sigmoid, 33).unwrap();
    let evidence = Evidence::new([(0, true), (1, false), (2, true)]).unwrap();
    let eps = EpsilonVector::new(vec![0.6, 0.7, 0.65]).unwrap();
    let flipped = sign_flipped_grad(&net, &evidence, &eps).unwrap();
    let library = ldbounds::grad_log_lower(&net, &evidence, &eps).unwrap();
    let n = net.scale_n() as f64;
    for (k, finding) in evidence.findings().iter().enumerate() {
        let chi = net.output_chi_sq(finding.output);
        let e = eps.as_slice()[k];
        let d = (-(n * e * e) / chi).exp();
        let s: f64 = 2.0
            * evidence
                .findings()
                .iter()
                .zip(eps.as_slice())
                .map(|(fi, &ei)| {
                    let c = net.output_chi_sq(fi.output);
                    (-(n * ei * ei) / c).exp()
                })
                .sum::<f64>();
        let relief = (4.0 * n * e / chi) * d / (1.0 - s);
        // un-flip: transcription = -relief - cost, so library = flipped + 2 relief
        let unflipped = flipped[k] + 2.0 * relief;
        assert!(
            (library[k] - unflipped).abs() <= 1e-12 * library[k].abs().max(1.0),
            "component {k}: {} vs {}",
            library[k],
            unflipped
        );
    }
}
