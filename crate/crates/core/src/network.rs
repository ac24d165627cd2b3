//! Two-layer belief networks: independent Bernoulli inputs feeding a layer
//! of outputs whose activation probabilities are a transfer function of the
//! weighted input sum. Covers construction and validation, random instance
//! generation, input clamping for conditional queries, joint sampling, and
//! the JSON file format.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::largedev::phi_unit;
use crate::transfer::TransferFunction;

/// A two-layer network with `M` outputs and `N` inputs.
///
/// Weights are stored unscaled as `tau`; the effective weight from input `j`
/// to output `i` is `tau[i][j] / scale_n`, where `scale_n` is the input
/// count *at construction*. Clamping an input removes its column but keeps
/// `scale_n`, so conditional and unconditional queries refer to the same
/// joint distribution.
///
/// Immutable after construction; sampling takes an explicit RNG handle, so
/// values can be shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNetwork {
    tau: Vec<Vec<f64>>,
    bias: Vec<f64>,
    offset: Vec<f64>,
    transfer: TransferFunction,
    scale_n: usize,
}

impl TwoLayerNetwork {
    /// Build and validate a network. `offset` defaults to zeros.
    pub fn new(
        tau: Vec<Vec<f64>>,
        bias: Vec<f64>,
        offset: Option<Vec<f64>>,
        transfer: TransferFunction,
    ) -> Result<Self> {
        let m = tau.len();
        let n = bias.len();
        if m == 0 {
            return Err(Error::DimensionMismatch("need at least one output".into()));
        }
        if n == 0 {
            return Err(Error::DimensionMismatch("need at least one input".into()));
        }
        for (i, row) in tau.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "tau row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let offset = offset.unwrap_or_else(|| vec![0.0; m]);
        if offset.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "offset has {} entries, expected {m}",
                offset.len()
            )));
        }
        for (j, &p) in bias.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::BiasOutOfRange { index: j, value: p });
            }
        }
        for (i, row) in tau.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(Error::NonFinite(format!("tau[{i}][{j}]")));
                }
                if transfer == TransferFunction::NoisyOr && w < 0.0 {
                    return Err(Error::NegativeNoisyOrWeight {
                        output: i,
                        input: j,
                        value: w,
                    });
                }
            }
        }
        for (i, &c) in offset.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("offset[{i}]")));
            }
            if transfer == TransferFunction::NoisyOr && c < 0.0 {
                return Err(Error::NegativeNoisyOrOffset {
                    output: i,
                    value: c,
                });
            }
        }
        Ok(Self {
            tau,
            bias,
            offset,
            transfer,
            scale_n: n,
        })
    }

    /// Random instance: `tau` entries i.i.d. standard normal (absolute
    /// values under noisy-OR, which needs nonnegative weights), every bias
    /// equal to `bias_value`, offsets zero.
    ///
    /// Deterministic given `seed`: the generator is ChaCha8 seeded with
    /// `seed_from_u64`, normals come from one Box-Muller draw per entry
    /// (two uniforms each: `sqrt(-2 ln u1) * cos(2 pi u2)`), and entries
    /// fill row by row in output-major order.
    pub fn random(
        n_inputs: usize,
        n_outputs: usize,
        bias_value: f64,
        transfer: TransferFunction,
        seed: u64,
    ) -> Result<Self> {
        if n_inputs == 0 || n_outputs == 0 {
            return Err(Error::DimensionMismatch(
                "random network needs at least one input and one output".into(),
            ));
        }
        if !bias_value.is_finite() || !(0.0..=1.0).contains(&bias_value) {
            return Err(Error::BiasOutOfRange {
                index: 0,
                value: bias_value,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = (0..n_outputs)
            .map(|_| {
                (0..n_inputs)
                    .map(|_| {
                        let z = standard_normal(&mut rng);
                        if transfer == TransferFunction::NoisyOr {
                            z.abs()
                        } else {
                            z
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(tau, vec![bias_value; n_inputs], None, transfer)
    }

    /// Current number of (unclamped) inputs.
    pub fn n_inputs(&self) -> usize {
        self.bias.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.tau.len()
    }

    /// The weight-scaling denominator: the input count at construction.
    pub fn scale_n(&self) -> usize {
        self.scale_n
    }

    pub fn transfer(&self) -> TransferFunction {
        self.transfer
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn tau_row(&self, i: usize) -> &[f64] {
        &self.tau[i]
    }

    /// Effective (scaled) weight from input `j` to output `i`.
    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.tau[i][j] / self.scale_n as f64
    }

    /// Mean weighted input of output `i`: `offset_i + sum_j theta_ij p_j`.
    pub fn output_mean(&self, i: usize) -> f64 {
        let dot: f64 = self.tau[i]
            .iter()
            .zip(&self.bias)
            .map(|(&t, &p)| t * p)
            .sum();
        self.offset[i] + dot / self.scale_n as f64
    }

    /// Deviation scale of output `i`: `(1/scale_n) sum_j tau_ij^2 phi(p_j)`.
    ///
    /// Zero exactly when every remaining input has a zero weight or a
    /// deterministic bias, i.e. when the weighted sum has zero variance.
    pub fn output_chi_sq(&self, i: usize) -> f64 {
        let sum: f64 = self.tau[i]
            .iter()
            .zip(&self.bias)
            .map(|(&t, &p)| t * t * phi_unit(p))
            .sum();
        sum / self.scale_n as f64
    }

    /// Fix input `j` to `value` and marginalize it out of the parameter set:
    /// column `j` disappears from `tau` and `bias`, each offset absorbs
    /// `theta_ij * value`, and the scaling denominator stays at the original
    /// input count.
    pub fn clamp_input(&self, j: usize, value: bool) -> Result<Self> {
        if j >= self.n_inputs() {
            return Err(Error::InputIndexOutOfRange {
                index: j,
                n_inputs: self.n_inputs(),
            });
        }
        let v = if value { 1.0 } else { 0.0 };
        let tau = self
            .tau
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(k, &w)| (k != j).then_some(w))
                    .collect()
            })
            .collect();
        let offset = self
            .offset
            .iter()
            .enumerate()
            .map(|(i, &c)| c + self.theta(i, j) * v)
            .collect();
        let bias = self
            .bias
            .iter()
            .enumerate()
            .filter_map(|(k, &p)| (k != j).then_some(p))
            .collect();
        Ok(Self {
            tau,
            bias,
            offset,
            transfer: self.transfer,
            scale_n: self.scale_n,
        })
    }

    /// Weighted input of output `i` under the concrete input assignment
    /// encoded in the low bits of `mask` (bit `j` is input `j`).
    pub(crate) fn weighted_sum(&self, i: usize, mask: u64) -> f64 {
        let mut dot = 0.0;
        for (j, &t) in self.tau[i].iter().enumerate() {
            if mask >> j & 1 == 1 {
                dot += t;
            }
        }
        self.offset[i] + dot / self.scale_n as f64
    }

    /// Draw one joint sample: inputs first (independent Bernoulli with their
    /// biases, in index order), then outputs (independent given the inputs,
    /// in index order). Every Bernoulli draw compares one uniform against
    /// the success probability.
    pub fn sample_joint<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<bool>, Vec<bool>) {
        let x: Vec<bool> = self.bias.iter().map(|&p| rng.random::<f64>() < p).collect();
        let y = (0..self.n_outputs())
            .map(|i| {
                let dot: f64 = self.tau[i]
                    .iter()
                    .zip(&x)
                    .filter(|&(_, &active)| active)
                    .map(|(&t, _)| t)
                    .sum();
                let s = self.offset[i] + dot / self.scale_n as f64;
                rng.random::<f64>() < self.transfer.eval_raw(s)
            })
            .collect();
        (x, y)
    }

    /// Write the network as JSON (the documented file schema). Clamped
    /// networks are rejected: the format has no field for a scaling count
    /// that differs from the stored input count, so a reload would change
    /// the weights' meaning.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        if self.scale_n != self.n_inputs() {
            return Err(Error::ClampedSave);
        }
        let file = NetworkFile {
            transfer: self.transfer,
            n_inputs: self.n_inputs(),
            n_outputs: self.n_outputs(),
            tau: self.tau.clone(),
            bias: self.bias.clone(),
            offset: Some(self.offset.clone()),
        };
        serde_json::to_writer_pretty(&mut sink, &file)?;
        sink.write_all(b"\n")?;
        Ok(())
    }

    /// Parse and validate a network from its JSON file form.
    pub fn load<R: Read>(source: R) -> Result<Self> {
        let file: NetworkFile = serde_json::from_reader(source)?;
        if file.tau.len() != file.n_outputs {
            return Err(Error::MalformedFile(format!(
                "declared {} outputs but tau has {} rows",
                file.n_outputs,
                file.tau.len()
            )));
        }
        if file.bias.len() != file.n_inputs {
            return Err(Error::MalformedFile(format!(
                "declared {} inputs but bias has {} entries",
                file.n_inputs,
                file.bias.len()
            )));
        }
        Self::new(file.tau, file.bias, file.offset, file.transfer)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::load(s.as_bytes())
    }
}

/// On-disk JSON schema for a network.
#[derive(Serialize, Deserialize)]
struct NetworkFile {
    transfer: TransferFunction,
    n_inputs: usize,
    n_outputs: usize,
    tau: Vec<Vec<f64>>,
    bias: Vec<f64>,
    #[serde(default)]
    offset: Option<Vec<f64>>,
}

/// One observed output value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Finding {
    pub output: usize,
    pub value: bool,
}

/// An assignment of observed values to a distinct, nonempty subset of
/// outputs. Output indices are validated against a concrete network at the
/// point of use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    findings: Vec<Finding>,
}

impl Evidence {
    pub fn new<I: IntoIterator<Item = (usize, bool)>>(findings: I) -> Result<Self> {
        let findings: Vec<Finding> = findings
            .into_iter()
            .map(|(output, value)| Finding { output, value })
            .collect();
        if findings.is_empty() {
            return Err(Error::EmptyEvidence);
        }
        let mut seen: Vec<usize> = findings.iter().map(|f| f.output).collect();
        seen.sort_unstable();
        for pair in seen.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateFinding { output: pair[0] });
            }
        }
        Ok(Self { findings })
    }

    pub fn findings(&self) -> &[Finding] {
        &self.findings
    }

    /// Number of findings, `K`.
    pub fn len(&self) -> usize {
        self.findings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    /// Check every output index against a network.
    pub fn validate_against(&self, net: &TwoLayerNetwork) -> Result<()> {
        for f in &self.findings {
            if f.output >= net.n_outputs() {
                return Err(Error::OutputIndexOutOfRange {
                    index: f.output,
                    n_outputs: net.n_outputs(),
                });
            }
        }
        Ok(())
    }

    /// Write as a JSON array of `{"output": i, "value": 0|1}` records.
    pub fn save<W: Write>(&self, mut sink: W) -> Result<()> {
        let rows: Vec<FindingFile> = self
            .findings
            .iter()
            .map(|f| FindingFile {
                output: f.output,
                value: f.value as u8,
            })
            .collect();
        serde_json::to_writer_pretty(&mut sink, &rows)?;
        sink.write_all(b"\n")?;
        Ok(())
    }

    pub fn load<R: Read>(source: R) -> Result<Self> {
        let rows: Vec<FindingFile> = serde_json::from_reader(source)?;
        for r in &rows {
            if r.value > 1 {
                return Err(Error::MalformedFile(format!(
                    "finding value {} for output {} is not a bit",
                    r.value, r.output
                )));
            }
        }
        Self::new(rows.into_iter().map(|r| (r.output, r.value == 1)))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::load(s.as_bytes())
    }
}

#[derive(Serialize, Deserialize)]
struct FindingFile {
    output: usize,
    value: u8,
}

/// One standard normal via Box-Muller; consumes two uniforms.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // in (0, 1]
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
