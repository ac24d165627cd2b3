//! The scaling experiment: random networks at a grid of input counts, a
//! full random evidence vector per trial, and the log-gap between upper
//! and lower bounds at the fixed variational choice versus independently
//! optimized choices.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use ldbounds::{
    bounds_at, fixed_epsilon, optimize_lower, optimize_upper, Error, Evidence, OptimizerConfig,
    Result, TransferFunction, TwoLayerNetwork,
};

use crate::sig17;

/// How the evidence bits are drawn for each trial.
///
/// `UniformRandom` flips a fair coin per output; `ForwardSampled` draws a
/// joint sample from the network and uses its output vector, so the
/// evidence is typical under the model rather than under the uniform law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceMode {
    UniformRandom,
    ForwardSampled,
}

impl std::fmt::Display for EvidenceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvidenceMode::UniformRandom => write!(f, "uniform-random"),
            EvidenceMode::ForwardSampled => write!(f, "forward-sampled"),
        }
    }
}

impl std::str::FromStr for EvidenceMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform-random" | "uniform_random" => Ok(EvidenceMode::UniformRandom),
            "forward-sampled" | "forward_sampled" => Ok(EvidenceMode::ForwardSampled),
            other => Err(format!("unknown evidence mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub m_outputs: usize,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub gamma: f64,
    pub seed: u64,
    pub evidence_mode: EvidenceMode,
    pub transfer: TransferFunction,
    pub bias_value: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m_outputs: 25,
            n_grid: (1..=20).map(|k| 50 * k).collect(),
            trials: 25,
            gamma: 2.0,
            seed: 0,
            evidence_mode: EvidenceMode::UniformRandom,
            transfer: TransferFunction::Sigmoid,
            bias_value: 0.5,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_outputs == 0 {
            return Err(Error::InvalidArgument {
                name: "m_outputs",
                value: 0.0,
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument {
                name: "trials",
                value: 0.0,
            });
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidArgument {
                name: "n_grid",
                value: 0.0,
            });
        }
        for pair in self.n_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidArgument {
                    name: "n_grid",
                    value: pair[1] as f64,
                });
            }
        }
        if self.n_grid[0] < 2 {
            return Err(Error::InvalidArgument {
                name: "n_grid",
                value: self.n_grid[0] as f64,
            });
        }
        if self.gamma.is_nan() || self.gamma <= 1.0 {
            return Err(Error::InvalidArgument {
                name: "gamma",
                value: self.gamma,
            });
        }
        if !(0.0..=1.0).contains(&self.bias_value) {
            return Err(Error::InvalidArgument {
                name: "bias_value",
                value: self.bias_value,
            });
        }
        Ok(())
    }
}

/// One (network size, trial) measurement. Gap fields are natural-log
/// differences of the clamped bounds; infeasible trials carry NaN and are
/// excluded from the per-size means.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentRow {
    pub n: usize,
    pub trial: usize,
    pub seed_used: u64,
    pub log_gap_fixed: f64,
    pub log_gap_opt: f64,
    pub log_upper_opt: f64,
    pub log_lower_opt: f64,
    pub feasible: bool,
}

/// Per-size means over the feasible trials.
#[derive(Debug, Clone, Copy)]
pub struct SizeMeans {
    pub n: usize,
    pub feasible_trials: usize,
    pub total_trials: usize,
    pub mean_log_gap_fixed: f64,
    pub mean_log_gap_opt: f64,
}

/// SplitMix64 finalizer; the documented mixing step behind every derived
/// seed, so any single trial can be reproduced in isolation.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trial seeds are `splitmix64(splitmix64(splitmix64(seed) ^ n) ^ trial)`.
pub fn derive_trial_seed(seed: u64, n: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ n as u64) ^ trial as u64)
}

fn draw_evidence(net: &TwoLayerNetwork, mode: EvidenceMode, seed: u64) -> Result<Evidence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<bool> = match mode {
        EvidenceMode::UniformRandom => (0..net.n_outputs())
            .map(|_| rng.random::<f64>() < 0.5)
            .collect(),
        EvidenceMode::ForwardSampled => net.sample_joint(&mut rng).1,
    };
    Evidence::new(bits.into_iter().enumerate())
}

/// Run one trial: build the network, draw the evidence, evaluate the fixed
/// choice, then optimize upper and lower bounds independently.
pub fn run_trial(config: &ExperimentConfig, n: usize, trial: usize) -> ExperimentRow {
    let seed_used = derive_trial_seed(config.seed, n, trial);
    let infeasible = ExperimentRow {
        n,
        trial,
        seed_used,
        log_gap_fixed: f64::NAN,
        log_gap_opt: f64::NAN,
        log_upper_opt: f64::NAN,
        log_lower_opt: f64::NAN,
        feasible: false,
    };

    let attempt = || -> Result<ExperimentRow> {
        let net = TwoLayerNetwork::random(
            n,
            config.m_outputs,
            config.bias_value,
            config.transfer,
            seed_used,
        )?;
        let evidence = draw_evidence(&net, config.evidence_mode, splitmix64(seed_used))?;

        let fixed = fixed_epsilon(&net, &evidence, config.gamma)?;
        let at_fixed = bounds_at(&net, &evidence, &fixed)?;
        let log_gap_fixed = at_fixed.log_upper - at_fixed.log_lower;

        let optimizer = OptimizerConfig {
            init_gamma: config.gamma,
            ..OptimizerConfig::default()
        };
        let lower = optimize_lower(&net, &evidence, &optimizer)?;
        let upper = optimize_upper(&net, &evidence, &optimizer)?;
        let log_lower_opt = bounds_at(&net, &evidence, &lower.eps)?.log_lower;
        let log_upper_opt = bounds_at(&net, &evidence, &upper.eps)?.log_upper;

        Ok(ExperimentRow {
            n,
            trial,
            seed_used,
            log_gap_fixed,
            log_gap_opt: log_upper_opt - log_lower_opt,
            log_upper_opt,
            log_lower_opt,
            feasible: log_gap_fixed.is_finite()
                && log_upper_opt.is_finite()
                && log_lower_opt.is_finite(),
        })
    };
    attempt().unwrap_or(infeasible)
}

/// Run the full grid. Trials execute on parallel workers; rows come back
/// sorted by (n, trial) and the means are accumulated in that order, so the
/// output is identical for any worker count.
pub fn run_scaling_experiment(
    config: &ExperimentConfig,
) -> Result<(Vec<ExperimentRow>, Vec<SizeMeans>)> {
    config.validate()?;
    let cases: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let mut rows: Vec<ExperimentRow> = cases
        .par_iter()
        .map(|&(n, trial)| run_trial(config, n, trial))
        .collect();
    rows.sort_by_key(|r| (r.n, r.trial));

    let mut means = Vec::with_capacity(config.n_grid.len());
    for &n in &config.n_grid {
        let group: Vec<&ExperimentRow> = rows.iter().filter(|r| r.n == n).collect();
        let feasible: Vec<&&ExperimentRow> = group.iter().filter(|r| r.feasible).collect();
        let count = feasible.len();
        let (sum_fixed, sum_opt) = feasible.iter().fold((0.0, 0.0), |(a, b), r| {
            (a + r.log_gap_fixed, b + r.log_gap_opt)
        });
        means.push(SizeMeans {
            n,
            feasible_trials: count,
            total_trials: group.len(),
            mean_log_gap_fixed: if count > 0 {
                sum_fixed / count as f64
            } else {
                f64::NAN
            },
            mean_log_gap_opt: if count > 0 {
                sum_opt / count as f64
            } else {
                f64::NAN
            },
        });
    }
    Ok((rows, means))
}

/// CSV schema: one header line, then one row per (n, trial), floats with
/// 17 significant digits, `feasible` as 0/1.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], mut sink: W) -> std::io::Result<()> {
    writeln!(
        sink,
        "n,trial,seed_used,log_gap_fixed,log_gap_opt,log_upper_opt,log_lower_opt,feasible"
    )?;
    for r in rows {
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.trial,
            r.seed_used,
            sig17(r.log_gap_fixed),
            sig17(r.log_gap_opt),
            sig17(r.log_upper_opt),
            sig17(r.log_lower_opt),
            r.feasible as u8
        )?;
    }
    Ok(())
}

pub fn render_means(means: &[SizeMeans]) -> String {
    let mut out = String::from("n,mean_log_gap_fixed,mean_log_gap_opt,feasible_trials,trials\n");
    for m in means {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.n,
            sig17(m.mean_log_gap_fixed),
            sig17(m.mean_log_gap_opt),
            m.feasible_trials,
            m.total_trials
        ));
    }
    out
}
