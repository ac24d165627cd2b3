//! Command-line driver: generate networks, query the exact oracle,
//! evaluate and optimize the bounds, run the validation suites, and run
//! the scaling experiment.
//!
//! Exit status: 0 on success, 1 on a computation or validation failure,
//! 2 on a usage error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ldbounds::{
    bounds_at, exact_marginal, exact_posterior, fixed_epsilon, optimize_lower, optimize_upper,
    EnumerationLimit, EpsilonVector, Evidence, OptimizerConfig, TransferFunction, TwoLayerNetwork,
};
use ldbounds_cli::experiment::{
    render_means, run_scaling_experiment, write_csv, EvidenceMode, ExperimentConfig,
};
use ldbounds_cli::sig17;
use ldbounds_cli::validate::{run_validation, ValidationConfig};

#[derive(Parser)]
#[command(
    name = "ldbounds",
    version,
    about = "Bounds on marginal and posterior probabilities in two-layer belief networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Upper,
    Lower,
    Both,
}

#[derive(Args)]
struct NetworkEvidenceArgs {
    /// Network JSON file.
    #[arg(long)]
    network: PathBuf,
    /// Evidence JSON file.
    #[arg(long)]
    evidence: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random network (and optionally an evidence file).
    Generate {
        #[arg(long)]
        n_inputs: usize,
        #[arg(long)]
        n_outputs: usize,
        /// Bias shared by every input.
        #[arg(long, default_value_t = 0.5)]
        bias: f64,
        #[arg(long, default_value = "sigmoid")]
        transfer: TransferFunction,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the network JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also write a random evidence file over all outputs.
        #[arg(long)]
        evidence_out: Option<PathBuf>,
        #[arg(long, default_value = "uniform-random")]
        evidence_mode: EvidenceMode,
    },

    /// Exact probabilities by brute-force enumeration (small N only).
    Exact {
        #[command(flatten)]
        files: NetworkEvidenceArgs,
        /// Query the posterior of this input instead of the evidence marginal.
        #[arg(long)]
        input: Option<usize>,
        #[arg(long, default_value_t = 20)]
        max_inputs: usize,
        /// Accepted for interface uniformity; enumeration is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Evaluate the bound pair at the fixed variational choice (or at an
    /// explicit epsilon vector).
    Bounds {
        #[command(flatten)]
        files: NetworkEvidenceArgs,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        /// Comma-separated epsilons overriding the fixed choice.
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Posterior interval for one input via the clamped conditionals.
    Posterior {
        #[command(flatten)]
        files: NetworkEvidenceArgs,
        #[arg(long)]
        input: usize,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        /// Optimize the four clamped bounds instead of using the fixed choice.
        #[arg(long)]
        optimize: bool,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Optimize the variational parameters of the bounds.
    Optimize {
        #[command(flatten)]
        files: NetworkEvidenceArgs,
        /// Which bound to optimize.
        #[arg(long, value_enum, default_value_t = Target::Both)]
        target: Target,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Extra runs from rescaled starting points.
        #[arg(long, default_value_t = 0)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// The scaling experiment: gap curves over a grid of input counts.
    Experiment {
        /// Input-count grid as `start:stop:step` (inclusive) or one integer.
        #[arg(long, default_value = "50:1000:50")]
        n: String,
        #[arg(long, default_value_t = 25)]
        m: usize,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "uniform-random")]
        evidence_mode: EvidenceMode,
        #[arg(long, default_value = "sigmoid")]
        transfer: TransferFunction,
        #[arg(long, default_value_t = 0.5)]
        bias: f64,
        /// CSV output path; per-size means go to stdout.
        #[arg(long)]
        out: PathBuf,
    },

    /// Run the self-check suites; nonzero exit on any failure.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input count for the randomized instances.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        max_inputs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_pair(files: &NetworkEvidenceArgs) -> anyhow::Result<(TwoLayerNetwork, Evidence)> {
    let net = TwoLayerNetwork::load(BufReader::new(
        File::open(&files.network)
            .with_context(|| format!("opening {}", files.network.display()))?,
    ))
    .with_context(|| format!("loading network {}", files.network.display()))?;
    let ev = Evidence::load(BufReader::new(
        File::open(&files.evidence)
            .with_context(|| format!("opening {}", files.evidence.display()))?,
    ))
    .with_context(|| format!("loading evidence {}", files.evidence.display()))?;
    Ok((net, ev))
}

fn parse_epsilon_list(text: &str) -> anyhow::Result<EpsilonVector> {
    let values = text
        .split(',')
        .map(|tok| tok.trim().parse::<f64>().context("parsing epsilon list"))
        .collect::<anyhow::Result<Vec<f64>>>()?;
    Ok(EpsilonVector::new(values)?)
}

fn parse_grid(text: &str) -> anyhow::Result<Vec<usize>> {
    if let Ok(single) = text.parse::<usize>() {
        return Ok(vec![single]);
    }
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must be a single integer or start:stop:step, got `{text}`");
    }
    let start: usize = parts[0].parse().context("grid start")?;
    let stop: usize = parts[1].parse().context("grid stop")?;
    let step: usize = parts[2].parse().context("grid step")?;
    if step == 0 || stop < start {
        bail!("grid needs step >= 1 and stop >= start");
    }
    Ok((start..=stop).step_by(step).collect())
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Generate {
            n_inputs,
            n_outputs,
            bias,
            transfer,
            seed,
            out,
            evidence_out,
            evidence_mode,
        } => {
            let net = TwoLayerNetwork::random(n_inputs, n_outputs, bias, transfer, seed)?;
            net.save(BufWriter::new(File::create(&out)?))?;
            println!(
                "wrote network ({n_inputs} inputs, {n_outputs} outputs) to {}",
                out.display()
            );
            if let Some(path) = evidence_out {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe71d);
                let bits: Vec<bool> = match evidence_mode {
                    EvidenceMode::UniformRandom => (0..n_outputs)
                        .map(|_| rand::Rng::random::<f64>(&mut rng) < 0.5)
                        .collect(),
                    EvidenceMode::ForwardSampled => net.sample_joint(&mut rng).1,
                };
                let ev = Evidence::new(bits.into_iter().enumerate())?;
                ev.save(BufWriter::new(File::create(&path)?))?;
                println!(
                    "wrote evidence ({n_outputs} findings) to {}",
                    path.display()
                );
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Exact {
            files,
            input,
            max_inputs,
            seed: _,
        } => {
            let (net, ev) = load_pair(&files)?;
            let limit = EnumerationLimit::new(max_inputs)?;
            match input {
                None => {
                    let p = exact_marginal(&net, &ev, limit)?;
                    println!("exact_marginal= {} log= {}", sig17(p), sig17(p.ln()));
                }
                Some(j) => {
                    let p = exact_posterior(&net, j, &ev, limit)?;
                    println!("exact_posterior= {} log= {}", sig17(p), sig17(p.ln()));
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Bounds {
            files,
            gamma,
            epsilon,
            seed: _,
        } => {
            let (net, ev) = load_pair(&files)?;
            let eps = match epsilon {
                Some(text) => parse_epsilon_list(&text)?,
                None => fixed_epsilon(&net, &ev, gamma)?,
            };
            let b = bounds_at(&net, &ev, &eps)?;
            println!(
                "log_lower= {} lower= {}",
                sig17(b.log_lower),
                sig17(b.lower())
            );
            println!(
                "log_upper= {} upper= {}",
                sig17(b.log_upper),
                sig17(b.upper())
            );
            println!("S= {}", sig17(b.throwaway));
            Ok(ExitCode::SUCCESS)
        }

        Command::Posterior {
            files,
            input,
            gamma,
            optimize,
            max_iters,
            tol,
            seed,
        } => {
            let (net, ev) = load_pair(&files)?;
            let when_one = net.clamp_input(input, true)?;
            let when_zero = net.clamp_input(input, false)?;
            let interval = if optimize {
                let cfg = OptimizerConfig {
                    init_gamma: gamma,
                    max_iters,
                    rel_tol: tol,
                    restart_seed: seed,
                    ..OptimizerConfig::default()
                };
                // Tightest interval: lower bound of the X=1 branch with the
                // upper bound of the X=0 branch, and vice versa.
                let lo = ldbounds::posterior_bounds(
                    &net,
                    input,
                    &ev,
                    &optimize_lower(&when_one, &ev, &cfg)?.eps,
                    &optimize_upper(&when_zero, &ev, &cfg)?.eps,
                )?;
                let hi = ldbounds::posterior_bounds(
                    &net,
                    input,
                    &ev,
                    &optimize_upper(&when_one, &ev, &cfg)?.eps,
                    &optimize_lower(&when_zero, &ev, &cfg)?.eps,
                )?;
                ldbounds::IntervalProbability::new(lo.lo, hi.hi)?
            } else {
                ldbounds::posterior_bounds(
                    &net,
                    input,
                    &ev,
                    &fixed_epsilon(&when_one, &ev, gamma)?,
                    &fixed_epsilon(&when_zero, &ev, gamma)?,
                )?
            };
            println!(
                "posterior_lo= {} log= {}",
                sig17(interval.lo),
                sig17(interval.lo.ln())
            );
            println!(
                "posterior_hi= {} log= {}",
                sig17(interval.hi),
                sig17(interval.hi.ln())
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Optimize {
            files,
            target,
            gamma,
            max_iters,
            tol,
            restarts,
            seed,
        } => {
            let (net, ev) = load_pair(&files)?;
            let cfg = OptimizerConfig {
                init_gamma: gamma,
                max_iters,
                rel_tol: tol,
                restarts,
                restart_seed: seed,
                ..OptimizerConfig::default()
            };
            let eps_csv = |eps: &EpsilonVector| {
                eps.as_slice()
                    .iter()
                    .map(|&e| sig17(e))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            if matches!(target, Target::Lower | Target::Both) {
                let r = optimize_lower(&net, &ev, &cfg)?;
                println!(
                    "lower: log= {} linear= {} iters= {} converged= {} eps= {}",
                    sig17(r.objective),
                    sig17(r.objective.exp()),
                    r.iters,
                    r.converged,
                    eps_csv(&r.eps)
                );
            }
            if matches!(target, Target::Upper | Target::Both) {
                let r = optimize_upper(&net, &ev, &cfg)?;
                println!(
                    "upper: log= {} linear= {} iters= {} converged= {} eps= {}",
                    sig17(r.objective.ln()),
                    sig17(r.objective),
                    r.iters,
                    r.converged,
                    eps_csv(&r.eps)
                );
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Experiment {
            n,
            m,
            trials,
            gamma,
            seed,
            evidence_mode,
            transfer,
            bias,
            out,
        } => {
            let config = ExperimentConfig {
                m_outputs: m,
                n_grid: parse_grid(&n)?,
                trials,
                gamma,
                seed,
                evidence_mode,
                transfer,
                bias_value: bias,
            };
            let (rows, means) = run_scaling_experiment(&config)?;
            let mut sink = BufWriter::new(File::create(&out)?);
            write_csv(&rows, &mut sink)?;
            sink.flush()?;
            print!("{}", render_means(&means));
            Ok(ExitCode::SUCCESS)
        }

        Command::Validate {
            seed,
            n,
            max_inputs,
        } => {
            let cfg = ValidationConfig {
                seed,
                n_inputs: n,
                limit: EnumerationLimit::new(max_inputs)?,
            };
            let report = run_validation(&cfg);
            print!("{}", report.render());
            Ok(if report.all_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
