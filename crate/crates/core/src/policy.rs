//! Feedforward policy network trained with cross-entropy loss and Adam.
//!
//! Hidden layers use the exact GELU activation; the two output logits go
//! through a softmax to give `(P(action = 0), P(action = 1))`.
//!
//! Parameters live in one flat vector. For each layer the weights are stored
//! row-major as `out × in`, followed by the `out` biases. The Adam moments use
//! the same layout.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::edge_slots;

pub const DEFAULT_HIDDEN: [usize; 2] = [72, 12];
pub const DEFAULT_LEARNING_RATE: f64 = 0.002;
pub const OUTPUT_SIZE: usize = 2;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkArchitecture {
    pub input_size: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
}

impl NetworkArchitecture {
    /// Architecture whose input is the observation for graphs on `n` vertices.
    pub fn for_vertices(n: usize, hidden_sizes: &[usize]) -> Self {
        Self {
            input_size: 2 * edge_slots(n),
            hidden_sizes: hidden_sizes.to_vec(),
            output_size: OUTPUT_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 {
            return Err(Error::config("input_size", "must be positive"));
        }
        if self.output_size != OUTPUT_SIZE {
            return Err(Error::config("output_size", "the action head has exactly two outputs"));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::config("hidden_sizes", "layer widths must be positive"));
        }
        Ok(())
    }

    /// Widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden_sizes.len() + 2);
        w.push(self.input_size);
        w.extend_from_slice(&self.hidden_sizes);
        w.push(self.output_size);
        w
    }

    pub fn parameter_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// `x·Φ(x)` with `Φ` the standard normal CDF.
#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

#[inline]
pub fn gelu_derivative(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

/// Numerically stable two-way softmax.
#[inline]
pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let max = logits[0].max(logits[1]);
    let e0 = (logits[0] - max).exp();
    let e1 = (logits[1] - max).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainBatch {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<bool>,
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn push(&mut self, observation: Vec<f64>, action: bool) {
        self.observations.push(observation);
        self.actions.push(action);
    }
}

#[derive(Clone, Copy, Debug)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl LayerShape {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inputs * self.outputs
    }

    fn biases(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.inputs * self.outputs;
        start..start + self.outputs
    }
}

#[derive(Clone, Debug)]
pub struct PolicyNetwork {
    arch: NetworkArchitecture,
    shapes: Vec<LayerShape>,
    params: Vec<f64>,
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    step: u64,
}

impl PartialEq for PolicyNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch
            && self.step == other.step
            && bits_eq(&self.params, &other.params)
            && bits_eq(&self.adam_m, &other.adam_m)
            && bits_eq(&self.adam_v, &other.adam_v)
    }
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn layer_shapes(arch: &NetworkArchitecture) -> Vec<LayerShape> {
    let mut offset = 0;
    arch.widths()
        .windows(2)
        .map(|w| {
            let s = LayerShape {
                inputs: w[0],
                outputs: w[1],
                offset,
            };
            offset += w[0] * w[1] + w[1];
            s
        })
        .collect()
}

/// Per-sample activations kept for backpropagation.
struct Trace {
    /// `pre[l]` are the pre-activations of layer `l`.
    pre: Vec<Vec<f64>>,
    /// `post[l]` is the input to layer `l` (`post[0]` is the observation).
    post: Vec<Vec<f64>>,
}

impl PolicyNetwork {
    /// Weights ~ U(−1/√fan_in, 1/√fan_in), zero biases, zero Adam state.
    pub fn new(arch: NetworkArchitecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let shapes = layer_shapes(&arch);
        let count = arch.parameter_count();
        let mut params = vec![0.0; count];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &shapes {
            let limit = 1.0 / (s.inputs as f64).sqrt();
            for w in &mut params[s.weights()] {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Ok(Self {
            arch,
            shapes,
            params,
            adam_m: vec![0.0; count],
            adam_v: vec![0.0; count],
            step: 0,
        })
    }

    pub fn architecture(&self) -> &NetworkArchitecture {
        &self.arch
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Number of Adam updates applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    fn check_input(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.arch.input_size {
            return Err(Error::Shape {
                what: "observation",
                expected: self.arch.input_size,
                got: obs.len(),
            });
        }
        Ok(())
    }

    /// Output logits. Zero inputs are skipped, which makes binary observations cheap.
    pub fn logits(&self, obs: &[f64]) -> Result<[f64; 2]> {
        self.check_input(obs)?;
        let mut x = obs.to_vec();
        let last = self.shapes.len() - 1;
        for (l, s) in self.shapes.iter().enumerate() {
            let mut z = self.affine(s, &x);
            if l != last {
                z.iter_mut().for_each(|v| *v = gelu(*v));
            }
            x = z;
        }
        Ok([x[0], x[1]])
    }

    /// `(P(0), P(1))` for an observation.
    pub fn forward(&self, obs: &[f64]) -> Result<[f64; 2]> {
        Ok(softmax2(self.logits(obs)?))
    }

    fn affine(&self, s: &LayerShape, x: &[f64]) -> Vec<f64> {
        let w = &self.params[s.weights()];
        let mut z = self.params[s.biases()].to_vec();
        // Column-oriented accumulation so sparse inputs skip whole columns.
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, zo) in z.iter_mut().enumerate() {
                *zo += w[o * s.inputs + i] * xi;
            }
        }
        z
    }

    fn forward_trace(&self, obs: &[f64]) -> Trace {
        let mut pre = Vec::with_capacity(self.shapes.len());
        let mut post = Vec::with_capacity(self.shapes.len());
        let mut x = obs.to_vec();
        let last = self.shapes.len() - 1;
        for (l, s) in self.shapes.iter().enumerate() {
            let z = self.affine(s, &x);
            let next = if l == last { z.clone() } else { z.iter().map(|&v| gelu(v)).collect() };
            post.push(std::mem::replace(&mut x, next));
            pre.push(z);
        }
        Trace { pre, post }
    }

    /// Mean negative log-likelihood of the batch actions and its gradient.
    pub fn loss_and_gradient(&self, batch: &TrainBatch) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Domain("training batch is empty".into()));
        }
        if batch.observations.len() != batch.actions.len() {
            return Err(Error::Shape {
                what: "training batch actions",
                expected: batch.observations.len(),
                got: batch.actions.len(),
            });
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;

        for (obs, &action) in batch.observations.iter().zip(&batch.actions) {
            self.check_input(obs)?;
            let trace = self.forward_trace(obs);
            let out = trace.pre.last().expect("at least one layer");
            let p = softmax2([out[0], out[1]]);
            let target = action as usize;
            loss -= p[target].max(f64::MIN_POSITIVE).ln() * scale;

            let mut delta: Vec<f64> = (0..2)
                .map(|k| (p[k] - if k == target { 1.0 } else { 0.0 }) * scale)
                .collect();
            for l in (0..self.shapes.len()).rev() {
                let s = self.shapes[l];
                let input = &trace.post[l];
                let w_range = s.weights();
                let gw = &mut grad[w_range.clone()];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut gw[o * s.inputs..(o + 1) * s.inputs];
                    for (g, &xi) in row.iter_mut().zip(input) {
                        *g += d * xi;
                    }
                }
                for (g, &d) in grad[s.biases()].iter_mut().zip(&delta) {
                    *g += d;
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[w_range];
                let below = &trace.pre[l - 1];
                let mut next = vec![0.0; s.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    let row = &w[o * s.inputs..(o + 1) * s.inputs];
                    for (n, &wi) in next.iter_mut().zip(row) {
                        *n += wi * d;
                    }
                }
                for (n, &z) in next.iter_mut().zip(below) {
                    *n *= gelu_derivative(z);
                }
                delta = next;
            }
        }
        Ok((loss, grad))
    }

    /// One full-batch Adam step. Returns the loss before the update.
    ///
    /// If the loss or any gradient entry is not finite the network is left untouched.
    pub fn train_step(&mut self, batch: &TrainBatch, lr: f64) -> Result<f64> {
        let (loss, grad) = self.loss_and_gradient(batch)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical {
                message: format!("non-finite loss or gradient (loss = {loss})"),
                best_estimate: None,
            });
        }
        self.apply_adam(&grad, lr);
        Ok(loss)
    }

    pub fn apply_adam(&mut self, grad: &[f64], lr: f64) {
        assert_eq!(grad.len(), self.params.len());
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - ADAM_BETA1.powi(t);
        let c2 = 1.0 - ADAM_BETA2.powi(t);
        for i in 0..self.params.len() {
            let g = grad[i];
            self.adam_m[i] = ADAM_BETA1 * self.adam_m[i] + (1.0 - ADAM_BETA1) * g;
            self.adam_v[i] = ADAM_BETA2 * self.adam_v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = self.adam_m[i] / c1;
            let v_hat = self.adam_v[i] / c2;
            self.params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }

    /// Writes the checkpoint format:
    ///
    /// | bytes | content |
    /// |---|---|
    /// | 8 | magic `LSPOLNET` |
    /// | 4 | format version, u32 LE (= 1) |
    /// | 4 | number of widths `k`, u32 LE |
    /// | 4·k | widths input → output, u32 LE each |
    /// | 8 | Adam step counter, u64 LE |
    /// | 8·P | parameters, f64 LE, flat layout described at module level |
    /// | 8·P | Adam first moments |
    /// | 8·P | Adam second moments |
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let widths = self.arch.widths();
        w.write_all(&(widths.len() as u32).to_le_bytes())?;
        for width in widths {
            w.write_all(&(width as u32).to_le_bytes())?;
        }
        w.write_all(&self.step.to_le_bytes())?;
        for block in [&self.params, &self.adam_m, &self.adam_v] {
            for x in block.iter() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::parse("byte 0", "not a policy checkpoint"));
        }
        let version = read_u32(&mut r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::parse("byte 8", format!("unsupported checkpoint version {version}")));
        }
        let k = read_u32(&mut r)? as usize;
        if !(2..=64).contains(&k) {
            return Err(Error::parse("byte 12", format!("implausible layer count {k}")));
        }
        let widths = (0..k).map(|_| read_u32(&mut r).map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let arch = NetworkArchitecture {
            input_size: widths[0],
            hidden_sizes: widths[1..k - 1].to_vec(),
            output_size: widths[k - 1],
        };
        arch.validate()?;
        let mut step_bytes = [0u8; 8];
        r.read_exact(&mut step_bytes)?;
        let count = arch.parameter_count();
        let mut read_block = || -> Result<Vec<f64>> {
            let mut out = Vec::with_capacity(count);
            let mut buf = [0u8; 8];
            for _ in 0..count {
                r.read_exact(&mut buf)?;
                out.push(f64::from_le_bytes(buf));
            }
            Ok(out)
        };
        let params = read_block()?;
        let adam_m = read_block()?;
        let adam_v = read_block()?;
        Ok(Self {
            shapes: layer_shapes(&arch),
            arch,
            params,
            adam_m,
            adam_v,
            step: u64::from_le_bytes(step_bytes),
        })
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"LSPOLNET";
const CHECKPOINT_VERSION: u32 = 1;

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
