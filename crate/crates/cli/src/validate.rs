//! Self-check suites runnable from the command line: transfer-function
//! shape, the moment-function bound, tail-bound soundness against the
//! enumeration oracle, the bound sandwich, gap/rate domination, gradient
//! checks against finite differences, and posterior interval containment.
//!
//! Oracle-backed suites are skipped (explicitly, never silently) when the
//! requested instance size exceeds the enumeration limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ldbounds::{
    bounds_at, chi_squared, exact_deviation_prob, exact_marginal, exact_posterior, fixed_epsilon,
    gap_bound, moment_g, optimize_lower, optimize_upper, phi, posterior_bounds, rate_bound,
    tail_bound, EnumerationLimit, EpsilonVector, Evidence, OptimizerConfig, TailBoundInputs,
    TransferFunction, TwoLayerNetwork,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteStatus {
    Passed,
    Failed,
    Skipped,
}

impl std::fmt::Display for SuiteStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SuiteStatus::Passed => write!(f, "passed"),
            SuiteStatus::Failed => write!(f, "FAILED"),
            SuiteStatus::Skipped => write!(f, "skipped"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub status: SuiteStatus,
    pub cases: usize,
    pub failures: usize,
    pub notes: String,
}

impl SuiteOutcome {
    fn from_counts(name: &'static str, cases: usize, failures: usize, notes: String) -> Self {
        Self {
            name,
            status: if failures == 0 {
                SuiteStatus::Passed
            } else {
                SuiteStatus::Failed
            },
            cases,
            failures,
            notes,
        }
    }

    fn skipped(name: &'static str, notes: String) -> Self {
        Self {
            name,
            status: SuiteStatus::Skipped,
            cases: 0,
            failures: 0,
            notes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub suites: Vec<SuiteOutcome>,
}

impl ValidationReport {
    /// Skips are not failures; they are reported but do not fail the run.
    pub fn all_ok(&self) -> bool {
        self.suites.iter().all(|s| s.status != SuiteStatus::Failed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!(
                "{:<22} {:<7} cases={:<5} failures={:<4} {}\n",
                s.name, s.status, s.cases, s.failures, s.notes
            ));
        }
        out.push_str(if self.all_ok() {
            "validation: OK\n"
        } else {
            "validation: FAILED\n"
        });
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Input count for the randomized instances.
    pub n_inputs: usize,
    pub limit: EnumerationLimit,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_inputs: 10,
            limit: EnumerationLimit::default(),
        }
    }
}

pub fn run_validation(cfg: &ValidationConfig) -> ValidationReport {
    let suites = vec![
        transfer_suite(),
        moment_bound_suite(),
        tail_soundness_suite(cfg),
        sandwich_suite(cfg),
        gap_rate_suite(cfg),
        gradient_suite(
            "gradient-lower",
            &|net, ev, eps| ldbounds::grad_log_lower(net, ev, eps),
            &|net, ev, eps| bounds_at(net, ev, eps).unwrap().unclamped_log_lower(),
            cfg.seed,
            40,
        ),
        gradient_suite(
            "gradient-upper",
            &|net, ev, eps| ldbounds::grad_upper(net, ev, eps),
            &|net, ev, eps| bounds_at(net, ev, eps).unwrap().unclamped_upper(),
            cfg.seed ^ 0x5eed,
            40,
        ),
        posterior_suite(cfg),
    ];
    ValidationReport { suites }
}

fn transfer_suite() -> SuiteOutcome {
    let mut cases = 0;
    let mut failures = 0;
    let h = 1e-6;
    for f in [TransferFunction::Sigmoid, TransferFunction::NoisyOr] {
        let lo = if f == TransferFunction::NoisyOr {
            1e-3
        } else {
            -8.0
        };
        let mut prev = -1.0;
        let mut x = lo;
        while x <= 8.0 {
            cases += 1;
            let v = f.eval(x).unwrap();
            let fd = (f.eval(x + h).unwrap() - f.eval(x - h).unwrap()) / (2.0 * h);
            let dv = f.deriv(x).unwrap();
            let ok = (0.0..=1.0).contains(&v)
                && v >= prev
                && dv <= f.slope() + 1e-12
                && (dv - fd).abs() <= 1e-6 * dv.abs().max(fd.abs()) + 1e-10;
            if !ok {
                failures += 1;
            }
            prev = v;
            x += 0.11;
        }
    }
    SuiteOutcome::from_counts("transfer-shape", cases, failures, String::new())
}

fn moment_bound_suite() -> SuiteOutcome {
    let mut cases = 0;
    let mut failures = 0;
    let ps = log_spaced_unit_grid(40);
    let ts = symmetric_log_grid(40, 1e-3, 50.0);
    for &p in &ps {
        let cap = phi(p).unwrap() / 4.0;
        for &t in &ts {
            cases += 1;
            if moment_g(p, t).unwrap() > cap + 1e-12 {
                failures += 1;
            }
        }
        // Tightness at the maximizing t (or just off zero when p = 1/2).
        cases += 1;
        let t_star = 2.0 * ((1.0 - p) / p).ln();
        let t_eval = if t_star.abs() < 1e-8 { 1e-4 } else { t_star };
        if (moment_g(p, t_eval).unwrap() - cap).abs() > 1e-9 {
            failures += 1;
        }
    }
    SuiteOutcome::from_counts("moment-bound", cases, failures, String::new())
}

fn tail_soundness_suite(cfg: &ValidationConfig) -> SuiteOutcome {
    const NAME: &str = "tail-soundness";
    if cfg.n_inputs > cfg.limit.max_inputs() {
        return SuiteOutcome::skipped(NAME, skip_note(cfg));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7a11);
    let n = cfg.n_inputs;
    let mut cases = 0;
    let mut failures = 0;
    for _ in 0..20 {
        let weights: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let biases: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let chi = chi_squared(&weights, &biases).unwrap();
        for k in 1..=10 {
            cases += 1;
            let eps = 0.05 * k as f64;
            let exact = exact_deviation_prob(&weights, &biases, eps, cfg.limit).unwrap();
            let bound = tail_bound(&TailBoundInputs::new(n, eps, chi).unwrap()).min(1.0);
            if exact > bound + 1e-12 {
                failures += 1;
            }
        }
    }
    SuiteOutcome::from_counts(NAME, cases, failures, String::new())
}

fn sandwich_suite(cfg: &ValidationConfig) -> SuiteOutcome {
    const NAME: &str = "oracle-sandwich";
    if cfg.n_inputs > cfg.limit.max_inputs() {
        return SuiteOutcome::skipped(NAME, skip_note(cfg));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5a4d);
    let optimizer = OptimizerConfig::default();
    let m = 3;
    let mut cases = 0;
    let mut failures = 0;
    for net_idx in 0..8u64 {
        for transfer in [TransferFunction::Sigmoid, TransferFunction::NoisyOr] {
            let net = TwoLayerNetwork::random(
                cfg.n_inputs,
                m,
                0.2 + 0.6 * rng.random::<f64>(),
                transfer,
                cfg.seed ^ (net_idx * 2 + (transfer == TransferFunction::NoisyOr) as u64),
            )
            .unwrap();
            for pattern in 0..(1u32 << m) {
                let evidence = Evidence::new((0..m).map(|i| (i, pattern >> i & 1 == 1))).unwrap();
                let exact = exact_marginal(&net, &evidence, cfg.limit).unwrap();
                let mut eps_list: Vec<EpsilonVector> = Vec::new();
                for _ in 0..4 {
                    eps_list.push(feasible_random_eps(&net, &evidence, &mut rng));
                }
                if let (Ok(lo), Ok(hi)) = (
                    optimize_lower(&net, &evidence, &optimizer),
                    optimize_upper(&net, &evidence, &optimizer),
                ) {
                    eps_list.push(lo.eps);
                    eps_list.push(hi.eps);
                }
                for eps in eps_list {
                    cases += 1;
                    match bounds_at(&net, &evidence, &eps) {
                        Ok(b) => {
                            if !(b.lower() - 1e-10 <= exact && exact <= b.upper() + 1e-10) {
                                failures += 1;
                            }
                        }
                        Err(_) => failures += 1,
                    }
                }
            }
        }
    }
    SuiteOutcome::from_counts(NAME, cases, failures, String::new())
}

fn gap_rate_suite(cfg: &ValidationConfig) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6a9);
    let mut cases = 0;
    let mut failures = 0;
    for idx in 0..20u64 {
        let net = TwoLayerNetwork::random(
            cfg.n_inputs.max(4),
            3,
            0.5,
            TransferFunction::Sigmoid,
            cfg.seed ^ (0xabc + idx),
        )
        .unwrap();
        let evidence = Evidence::new((0..3).map(|i| (i, rng.random::<bool>()))).unwrap();
        let eps = feasible_random_eps(&net, &evidence, &mut rng);
        cases += 1;
        let b = bounds_at(&net, &evidence, &eps).unwrap();
        let gap = gap_bound(&net, &evidence, &eps).unwrap();
        if b.unclamped_upper() - b.unclamped_lower() > gap + 1e-12 {
            failures += 1;
        }
        for gamma in [1.5, 2.0, 3.0] {
            cases += 1;
            let fixed = fixed_epsilon(&net, &evidence, gamma).unwrap();
            let bf = bounds_at(&net, &evidence, &fixed).unwrap();
            let rate = rate_bound(&net, &evidence, gamma).unwrap();
            if bf.unclamped_upper() - bf.unclamped_lower() > rate + 1e-12 {
                failures += 1;
            }
        }
    }
    SuiteOutcome::from_counts("gap-rate-domination", cases, failures, String::new())
}

/// A candidate gradient of one of the bound objectives.
pub type GradFn<'a> =
    &'a dyn Fn(&TwoLayerNetwork, &Evidence, &EpsilonVector) -> ldbounds::Result<Vec<f64>>;
/// The objective that gradient claims to differentiate.
pub type ObjectiveFn<'a> = &'a dyn Fn(&TwoLayerNetwork, &Evidence, &EpsilonVector) -> f64;

/// Gradient-vs-finite-difference suite over randomized instances.
///
/// The gradient and objective are injected so a deliberately broken
/// gradient can be fed through the same machinery to prove the suite can
/// catch it.
pub fn gradient_suite(
    name: &'static str,
    grad: GradFn,
    objective: ObjectiveFn,
    seed: u64,
    instances: usize,
) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = 0;
    let mut failures = 0;
    let h = 1e-6;
    for idx in 0..instances {
        let m = 2 + idx % 3;
        let net = TwoLayerNetwork::random(
            6 + idx % 7,
            m,
            0.2 + 0.6 * rng.random::<f64>(),
            TransferFunction::Sigmoid,
            seed ^ (idx as u64 * 977),
        )
        .unwrap();
        let evidence = Evidence::new((0..m).map(|i| (i, rng.random::<bool>()))).unwrap();
        // Scale each half-width to its output's deviation scale so the
        // union-bound mass stays below 1 and the log lower bound exists:
        // eps_i = sqrt(chi_i^2 c ln(K/0.3) / N) puts the deviation term at
        // (0.3/K)^c. The occasional c ~ 1 probes close to the vacuous edge.
        let n_scale = net.scale_n() as f64;
        let rate = ((m as f64) / 0.3).ln();
        let eps_raw: Vec<f64> = (0..m)
            .map(|i| {
                let c = if idx % 4 == 0 && i == idx % m {
                    1.005
                } else {
                    1.02 + 1.2 * rng.random::<f64>()
                };
                (net.output_chi_sq(i) * c * rate / n_scale).sqrt()
            })
            .collect();
        let eps = EpsilonVector::new(eps_raw.clone()).unwrap();
        let analytic = match grad(&net, &evidence, &eps) {
            Ok(g) => g,
            Err(_) => continue, // vacuous region: not a gradient case
        };
        for k in 0..m {
            cases += 1;
            let mut plus = eps_raw.clone();
            plus[k] += h;
            let mut minus = eps_raw.clone();
            minus[k] -= h;
            let fd = (objective(&net, &evidence, &EpsilonVector::new(plus).unwrap())
                - objective(&net, &evidence, &EpsilonVector::new(minus).unwrap()))
                / (2.0 * h);
            let tol = 1e-5 * analytic[k].abs().max(fd.abs()) + 1e-8;
            if (analytic[k] - fd).abs() > tol {
                failures += 1;
            }
        }
    }
    SuiteOutcome::from_counts(name, cases, failures, String::new())
}

fn posterior_suite(cfg: &ValidationConfig) -> SuiteOutcome {
    const NAME: &str = "posterior-intervals";
    if cfg.n_inputs > cfg.limit.max_inputs() {
        return SuiteOutcome::skipped(NAME, skip_note(cfg));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x90571);
    let mut cases = 0;
    let mut failures = 0;
    for idx in 0..10u64 {
        let net = TwoLayerNetwork::random(
            cfg.n_inputs,
            3,
            0.2 + 0.6 * rng.random::<f64>(),
            TransferFunction::Sigmoid,
            cfg.seed ^ (0xdef + idx),
        )
        .unwrap();
        let evidence = Evidence::new((0..3).map(|i| (i, rng.random::<bool>()))).unwrap();
        let j = (idx as usize) % cfg.n_inputs;
        cases += 1;
        let run = || -> ldbounds::Result<bool> {
            let e1 = fixed_epsilon(&net.clamp_input(j, true)?, &evidence, 2.0)?;
            let e0 = fixed_epsilon(&net.clamp_input(j, false)?, &evidence, 2.0)?;
            let interval = posterior_bounds(&net, j, &evidence, &e1, &e0)?;
            let exact = exact_posterior(&net, j, &evidence, cfg.limit)?;
            Ok(interval.contains(exact))
        };
        match run() {
            Ok(true) => {}
            _ => failures += 1,
        }
    }
    SuiteOutcome::from_counts(NAME, cases, failures, String::new())
}

fn skip_note(cfg: &ValidationConfig) -> String {
    format!(
        "N={} exceeds enumeration limit {}",
        cfg.n_inputs,
        cfg.limit.max_inputs()
    )
}

/// Random epsilons kept feasible for noisy-OR means.
fn feasible_random_eps<R: Rng>(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    rng: &mut R,
) -> EpsilonVector {
    let eps = evidence
        .findings()
        .iter()
        .map(|f| {
            let chi = net.output_chi_sq(f.output);
            if chi == 0.0 {
                return 0.0;
            }
            let raw = 10f64.powf(rng.random::<f64>() * 2.0 - 1.5);
            if net.transfer() == TransferFunction::NoisyOr {
                raw.min(0.9 * net.output_mean(f.output)).max(1e-9)
            } else {
                raw
            }
        })
        .collect();
    EpsilonVector::new(eps).unwrap()
}

fn log_spaced_unit_grid(per_side: usize) -> Vec<f64> {
    let mut ps = vec![0.5, 0.5 - 1e-6, 0.5 + 1e-6];
    for k in 0..per_side {
        let e = -8.0 + 7.69 * k as f64 / (per_side - 1) as f64; // 1e-8 up to ~0.49
        let p = 10f64.powf(e);
        ps.push(p);
        ps.push(1.0 - p);
    }
    ps
}

fn symmetric_log_grid(per_side: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut ts = Vec::with_capacity(2 * per_side);
    for k in 0..per_side {
        let t = lo * (hi / lo).powf(k as f64 / (per_side - 1) as f64);
        ts.push(t);
        ts.push(-t);
    }
    ts
}

/// One standard normal via Box-Muller, matching the library's documented
/// sampling scheme.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
