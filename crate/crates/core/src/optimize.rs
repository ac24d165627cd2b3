//! Projected gradient optimization of the variational half-widths:
//! ascent on the log lower bound, descent on the (unclamped) upper bound,
//! with backtracking line search and feasibility projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    bounds_from_moments, check_interval_feasible, deviation_terms, effective_epsilons,
    finding_moments, fixed_epsilon_from_moments, log_factor, log_product, EpsilonVector,
    FindingMoment, LeaveOneOut,
};
use crate::error::{Error, Result};
use crate::network::{Evidence, TwoLayerNetwork};
use crate::transfer::TransferFunction;

/// Knobs for the projected gradient runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    /// Outer iteration cap.
    pub max_iters: usize,
    /// The fixed-epsilon choice used as the starting point.
    pub init_gamma: f64,
    /// Initial step length for each line search.
    pub step_init: f64,
    /// Multiplicative backtracking factor in (0, 1).
    pub step_shrink: f64,
    /// Stop when the relative objective change drops below this.
    pub rel_tol: f64,
    /// Epsilons are kept at or above this floor (variance permitting).
    pub eps_floor: f64,
    /// Extra runs from log-uniform rescalings of the starting point.
    pub restarts: usize,
    /// Seed for the restart rescalings.
    pub restart_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            init_gamma: 2.0,
            step_init: 1.0,
            step_shrink: 0.5,
            rel_tol: 1e-9,
            eps_floor: 1e-12,
            restarts: 0,
            restart_seed: 0,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument {
                name: "max_iters",
                value: 0.0,
            });
        }
        for (name, value, ok) in [
            ("init_gamma", self.init_gamma, self.init_gamma > 1.0),
            ("step_init", self.step_init, self.step_init > 0.0),
            (
                "step_shrink",
                self.step_shrink,
                self.step_shrink > 0.0 && self.step_shrink < 1.0,
            ),
            ("rel_tol", self.rel_tol, self.rel_tol > 0.0),
            ("eps_floor", self.eps_floor, self.eps_floor > 0.0),
        ] {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidArgument { name, value });
            }
        }
        Ok(())
    }
}

/// Outcome of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub eps: EpsilonVector,
    /// Log lower bound for `optimize_lower`, clamped linear upper bound for
    /// `optimize_upper`; both match `bounds_at` re-evaluated at `eps`.
    pub objective: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Gradient of the log lower bound.
///
/// For a positive finding the component is the deviation-relief term
/// `(4 N eps_j / chi_j^2) e^{-N eps_j^2 / chi_j^2} / (1 - S)` minus the
/// product cost `f'(mu_j - eps_j) / f(mu_j - eps_j)`; for a negative
/// finding the cost becomes `f'(mu_j + eps_j) / (1 - f(mu_j + eps_j))`.
/// Coordinates with zero variance are pinned and report 0. Errors when
/// `S >= 1`, where the log lower bound is undefined.
pub fn grad_log_lower(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    eps: &EpsilonVector,
) -> Result<Vec<f64>> {
    let moments = finding_moments(net, evidence)?;
    let eff = effective_epsilons(&moments, eps)?;
    check_interval_feasible(net.transfer(), &moments, &eff)?;
    let n = net.scale_n() as f64;
    let (dev, s) = deviation_terms(n, &moments, &eff);
    if s >= 1.0 {
        return Err(Error::VacuousLowerBound { s });
    }
    grad_log_lower_inner(net.transfer(), n, &moments, &eff, &dev, s)
}

fn grad_log_lower_inner(
    transfer: TransferFunction,
    n: f64,
    moments: &[FindingMoment],
    eff: &[f64],
    dev: &[f64],
    s: f64,
) -> Result<Vec<f64>> {
    moments
        .iter()
        .zip(eff.iter().zip(dev))
        .map(|(m, (&e, &d))| {
            if m.chi_sq == 0.0 {
                return Ok(0.0);
            }
            let relief = (4.0 * n * e / m.chi_sq) * d / (1.0 - s);
            let cost = if m.positive {
                transfer.ratio_deriv_over_eval(m.mu - e)
            } else {
                transfer.ratio_deriv_over_comp(m.mu + e)
            };
            if !cost.is_finite() {
                return Err(Error::NoisyOrInfeasible { output: m.output });
            }
            Ok(relief - cost)
        })
        .collect()
}

/// Gradient of the unclamped upper bound `(1 - S) prod_U + S`.
///
/// Component `j` is `S'_j (1 - prod_U) + (1 - S) f'(arg_j) loo_j`, where
/// `S'_j = -(4 N eps_j / chi_j^2) e^{-N eps_j^2 / chi_j^2}`, `arg_j` is the
/// upper-oriented interval end for output `j`, and `loo_j` is the product
/// of every upper factor except `j`'s.
pub fn grad_upper(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    eps: &EpsilonVector,
) -> Result<Vec<f64>> {
    let moments = finding_moments(net, evidence)?;
    let eff = effective_epsilons(&moments, eps)?;
    check_interval_feasible(net.transfer(), &moments, &eff)?;
    let n = net.scale_n() as f64;
    let (dev, s) = deviation_terms(n, &moments, &eff);
    Ok(grad_upper_inner(net.transfer(), n, &moments, &eff, &dev, s))
}

fn grad_upper_inner(
    transfer: TransferFunction,
    n: f64,
    moments: &[FindingMoment],
    eff: &[f64],
    dev: &[f64],
    s: f64,
) -> Vec<f64> {
    let log_factors: Vec<f64> = moments
        .iter()
        .zip(eff)
        .map(|(m, &e)| log_factor(transfer, m, e, true))
        .collect();
    let loo = LeaveOneOut::new(&log_factors);
    let prod_upper = if loo.zero_count() > 0 {
        0.0
    } else {
        log_factors.iter().sum::<f64>().exp()
    };
    moments
        .iter()
        .zip(eff.iter().zip(dev.iter().zip(&log_factors)))
        .map(|(m, (&e, (&d, &lf)))| {
            if m.chi_sq == 0.0 {
                return 0.0;
            }
            let s_prime = -(4.0 * n * e / m.chi_sq) * d;
            let arg = if m.positive { m.mu + e } else { m.mu - e };
            s_prime * (1.0 - prod_upper) + (1.0 - s) * transfer.deriv_raw(arg) * loo.without(lf)
        })
        .collect()
}

/// Internal view of one optimization problem: the moments are computed
/// once, every objective evaluation after that is O(K).
struct Problem<'a> {
    transfer: TransferFunction,
    n: f64,
    moments: &'a [FindingMoment],
    floor: f64,
}

impl Problem<'_> {
    fn project(&self, eps: &mut [f64]) {
        for (m, e) in self.moments.iter().zip(eps.iter_mut()) {
            if m.chi_sq == 0.0 {
                *e = 0.0;
                continue;
            }
            *e = e.max(self.floor);
            if self.transfer == TransferFunction::NoisyOr {
                // Keep mu - eps admissible, with a small margin so the lower
                // product never hits an exact zero.
                let cap = m.mu - 1e-12;
                if *e > cap {
                    *e = cap;
                }
            }
        }
    }

    fn throwaway(&self, eps: &[f64]) -> f64 {
        deviation_terms(self.n, self.moments, eps).1
    }

    fn feasible(&self, eps: &[f64]) -> bool {
        check_interval_feasible(self.transfer, self.moments, eps).is_ok()
            && eps
                .iter()
                .zip(self.moments)
                .all(|(&e, m)| m.chi_sq == 0.0 || e > 0.0)
    }

    /// Unclamped log lower bound; -inf marks an infeasible candidate.
    fn log_lower_objective(&self, eps: &[f64]) -> f64 {
        if !self.feasible(eps) {
            return f64::NEG_INFINITY;
        }
        let s = self.throwaway(eps);
        if s >= 1.0 {
            return f64::NEG_INFINITY;
        }
        (-s).ln_1p() + log_product(self.transfer, self.moments, eps, false)
    }

    /// Negated unclamped upper bound, so both searches maximize.
    fn neg_upper_objective(&self, eps: &[f64]) -> f64 {
        if !self.feasible(eps) {
            return f64::NEG_INFINITY;
        }
        let s = self.throwaway(eps);
        let prod = log_product(self.transfer, self.moments, eps, true).exp();
        -((1.0 - s) * prod + s)
    }

    fn objective(&self, eps: &[f64], upper: bool) -> f64 {
        if upper {
            self.neg_upper_objective(eps)
        } else {
            self.log_lower_objective(eps)
        }
    }

    fn ascent_direction(&self, eps: &[f64], s: f64, upper: bool) -> Result<Vec<f64>> {
        let (dev, _) = deviation_terms(self.n, self.moments, eps);
        if upper {
            Ok(
                grad_upper_inner(self.transfer, self.n, self.moments, eps, &dev, s)
                    .into_iter()
                    .map(|g| -g)
                    .collect(),
            )
        } else {
            grad_log_lower_inner(self.transfer, self.n, self.moments, eps, &dev, s)
        }
    }
}

const MAX_BACKTRACKS: usize = 60;
const MAX_REPAIR_DOUBLINGS: usize = 60;

struct RunOutcome {
    eps: Vec<f64>,
    objective: f64,
    iters: usize,
    converged: bool,
}

/// Backtracking projected gradient ascent on `problem.objective(.., upper)`.
///
/// The accepted step length carries over between iterations and doubles
/// after a first-try acceptance: gradient magnitudes differ by many orders
/// between the log-domain lower objective and the linear-domain upper
/// objective, and a carried step adapts to either scale.
fn climb(problem: &Problem, start: Vec<f64>, cfg: &OptimizerConfig, upper: bool) -> RunOutcome {
    let mut eps = start;
    let mut value = problem.objective(&eps, upper);
    let mut converged = false;
    let mut iters = 0;
    let mut carried_step = cfg.step_init;

    for iter in 1..=cfg.max_iters {
        iters = iter;
        let s = problem.throwaway(&eps);
        let direction = match problem.ascent_direction(&eps, s, upper) {
            Ok(d) => d,
            Err(_) => {
                converged = true;
                break;
            }
        };

        let mut step = carried_step;
        let mut accepted: Option<(Vec<f64>, f64)> = None;
        for shrinks in 0..MAX_BACKTRACKS {
            let mut candidate: Vec<f64> = eps
                .iter()
                .zip(&direction)
                .map(|(&e, &g)| e + step * g)
                .collect();
            problem.project(&mut candidate);
            if candidate == eps {
                break;
            }
            let candidate_value = problem.objective(&candidate, upper);
            if candidate_value >= value {
                carried_step = if shrinks == 0 { step * 2.0 } else { step };
                accepted = Some((candidate, candidate_value));
                break;
            }
            step *= cfg.step_shrink;
        }

        match accepted {
            None => {
                converged = true;
                break;
            }
            Some((next, next_value)) => {
                let change = (next_value - value).abs();
                eps = next;
                value = next_value;
                if change <= cfg.rel_tol * value.abs().max(f64::MIN_POSITIVE) {
                    converged = true;
                    break;
                }
            }
        }
    }
    RunOutcome {
        eps,
        objective: value,
        iters,
        converged,
    }
}

/// Starting point: the fixed-epsilon choice at `init_gamma`, projected, and
/// repaired by doubling every active coordinate while the throw-away mass
/// exceeds 1/2 (larger half-widths shrink the deviation terms). Projection
/// can pin the doubling against a noisy-OR cap, in which case the repair
/// stops making progress; `S >= 1` there means no feasible start exists.
fn initial_point(problem: &Problem, scale_n: usize, gamma: f64) -> Result<Vec<f64>> {
    let mut eps = fixed_epsilon_from_moments(scale_n, problem.moments, gamma)?.into_vec();
    problem.project(&mut eps);
    if problem.throwaway(&eps) >= 0.5 {
        for _ in 0..MAX_REPAIR_DOUBLINGS {
            let mut doubled: Vec<f64> = eps.iter().map(|&e| e * 2.0).collect();
            problem.project(&mut doubled);
            if doubled == eps {
                break;
            }
            eps = doubled;
            if problem.throwaway(&eps) <= 0.5 {
                break;
            }
        }
    }
    Ok(eps)
}

fn zero_variance_result(problem: &Problem, upper: bool) -> Result<OptimizationResult> {
    let eps = EpsilonVector::new(vec![0.0; problem.moments.len()])?;
    let bounds = bounds_from_moments(problem.transfer, problem.n, problem.moments, &eps)?;
    Ok(OptimizationResult {
        eps,
        objective: if upper {
            bounds.upper()
        } else {
            bounds.log_lower
        },
        iters: 0,
        converged: true,
    })
}

fn restart_scales(cfg: &OptimizerConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.restart_seed);
    (0..cfg.restarts)
        .map(|_| 10f64.powf(rng.random::<f64>() * 2.0 - 1.0))
        .collect()
}

fn optimize(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    cfg: &OptimizerConfig,
    upper: bool,
) -> Result<OptimizationResult> {
    cfg.validate()?;
    let moments = finding_moments(net, evidence)?;
    let problem = Problem {
        transfer: net.transfer(),
        n: net.scale_n() as f64,
        moments: &moments,
        floor: cfg.eps_floor,
    };
    if moments.iter().all(|m| m.chi_sq == 0.0) {
        return zero_variance_result(&problem, upper);
    }

    let base = initial_point(&problem, net.scale_n(), cfg.init_gamma)?;
    if !upper {
        let s = problem.throwaway(&base);
        if s >= 1.0 {
            return Err(Error::NoFeasibleStart { s });
        }
        if problem.objective(&base, false) == f64::NEG_INFINITY {
            return Err(Error::NoFeasibleStart { s });
        }
    }

    let mut best: Option<RunOutcome> = None;
    let mut starts = vec![base.clone()];
    for scale in restart_scales(cfg) {
        let mut scaled: Vec<f64> = base.iter().map(|&e| e * scale).collect();
        problem.project(&mut scaled);
        starts.push(scaled);
    }
    for start in starts {
        if problem.objective(&start, upper) == f64::NEG_INFINITY {
            continue;
        }
        let run = climb(&problem, start, cfg, upper);
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    // The upper objective is total wherever the projection admits a point,
    // so this only triggers when feasibility projection left nothing.
    let run = best.ok_or(Error::NoFeasibleStart {
        s: problem.throwaway(&base),
    })?;

    let eps = EpsilonVector::new(run.eps)?;
    let bounds = bounds_from_moments(problem.transfer, problem.n, &moments, &eps)?;
    Ok(OptimizationResult {
        eps,
        objective: if upper {
            bounds.upper()
        } else {
            bounds.log_lower
        },
        iters: run.iters,
        converged: run.converged,
    })
}

/// Gradient ascent on the log lower bound from the fixed-epsilon start.
/// The accepted objective sequence is nondecreasing, so the result is never
/// worse than the starting bound.
pub fn optimize_lower(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize(net, evidence, cfg, false)
}

/// Gradient descent on the unclamped upper bound from the fixed-epsilon
/// start; the mirror image of `optimize_lower`.
pub fn optimize_upper(
    net: &TwoLayerNetwork,
    evidence: &Evidence,
    cfg: &OptimizerConfig,
) -> Result<OptimizationResult> {
    optimize(net, evidence, cfg, true)
}
