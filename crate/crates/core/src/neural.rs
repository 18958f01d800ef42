//! Fully-connected Q-network trained by plain SGD on squared TD error.
//!
//! Hidden layers use the rectifier, the output layer is affine. Only the
//! output slot of the action taken contributes to the loss.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// `outputs × inputs`, row-major.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.biases)
            .map(|(w, b)| b + w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    layers: Vec<Layer>,
}

/// Minibatch of `(input, action slot, TD target)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub inputs: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub targets: Vec<f64>,
}

impl TrainBatch {
    pub fn new(inputs: Vec<Vec<f64>>, actions: Vec<usize>, targets: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Validation("training batch is empty".into()));
        }
        if actions.len() != inputs.len() || targets.len() != inputs.len() {
            return Err(Error::DimensionMismatch {
                context: "training batch",
                expected: inputs.len(),
                found: actions.len().min(targets.len()),
            });
        }
        Ok(Self {
            inputs,
            actions,
            targets,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

impl QNetwork {
    /// Uniform `[−1/√fan_in, 1/√fan_in]` initialization for weights and biases.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.weights.iter_mut().chain(layer.biases.iter_mut()) {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::Validation(format!(
                "network needs at least an input and an output layer of non-zero width, got {layer_sizes:?}"
            )));
        }
        Ok(Self {
            layers: layer_sizes
                .windows(2)
                .map(|w| Layer::zeros(w[0], w[1]))
                .collect(),
        })
    }

    /// Single affine layer with the given weights (`outputs × inputs`) and biases.
    pub fn linear(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        let outputs = biases.len();
        let inputs = weights.first().map_or(0, Vec::len);
        if weights.len() != outputs || weights.iter().any(|r| r.len() != inputs) {
            return Err(Error::Validation("ragged weight matrix".into()));
        }
        let mut net = Self::zeros(&[inputs, outputs])?;
        net.layers[0].weights = weights.concat();
        net.layers[0].biases = biases;
        Ok(net)
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                context: "parameter vector",
                expected: self.param_count(),
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameter".into()));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.biases.len());
            l.weights.copy_from_slice(w);
            l.biases.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (k, layer) in self.layers.iter().enumerate() {
            a = layer.affine(&a);
            if k < last {
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        a
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_batch(&self, batch: &TrainBatch) -> Result<()> {
        for (x, &a) in batch.inputs.iter().zip(&batch.actions) {
            self.check_input(x)?;
            if a >= self.output_len() {
                return Err(Error::IndexOutOfRange {
                    index: a,
                    bound: self.output_len(),
                });
            }
        }
        Ok(())
    }

    /// Mean squared error over the selected output slots.
    pub fn loss(&self, batch: &TrainBatch) -> Result<f64> {
        self.check_batch(batch)?;
        Ok(self.loss_unchecked(batch))
    }

    fn loss_unchecked(&self, batch: &TrainBatch) -> f64 {
        batch
            .inputs
            .iter()
            .zip(&batch.actions)
            .zip(&batch.targets)
            .map(|((x, &a), &t)| (t - self.forward_unchecked(x)[a]).powi(2))
            .sum::<f64>()
            / batch.len() as f64
    }

    /// Loss and its gradient with respect to [`QNetwork::params`].
    pub fn gradient(&self, batch: &TrainBatch) -> Result<(f64, Vec<f64>)> {
        self.check_batch(batch)?;
        let scale = 1.0 / batch.len() as f64;
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer::zeros(l.inputs, l.outputs))
            .collect();
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for ((x, &action), &target) in batch.inputs.iter().zip(&batch.actions).zip(&batch.targets) {
            // activations[k] is the input of layer k
            let mut activations = vec![x.clone()];
            for (k, layer) in self.layers.iter().enumerate() {
                let mut z = layer.affine(&activations[k]);
                if k < last {
                    z.iter_mut().for_each(|v| *v = v.max(0.0));
                }
                activations.push(z);
            }
            let q = activations[last + 1][action];
            let err = q - target;
            loss += err * err;

            let mut delta = vec![0.0; self.output_len()];
            delta[action] = 2.0 * err * scale;
            for k in (0..=last).rev() {
                let layer = &self.layers[k];
                let input = &activations[k];
                let g = &mut grads[k];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(gw, &a)| *gw += d * a);
                }
                if k == 0 {
                    break;
                }
                let mut back = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    back.iter_mut().zip(w).for_each(|(b, &w)| *b += d * w);
                }
                // rectifier derivative: the stored activation is positive iff the unit is live
                back.iter_mut().zip(input).for_each(|(b, &a)| {
                    if a <= 0.0 {
                        *b = 0.0
                    }
                });
                delta = back;
            }
        }
        let flat = grads
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect();
        Ok((loss * scale, flat))
    }

    /// One SGD step with learning rate `eta`; returns the loss before the step.
    pub fn train_step(&mut self, batch: &TrainBatch, eta: f64) -> Result<f64> {
        if !(eta >= 0.0) {
            return Err(Error::Validation(format!(
                "learning rate must be non-negative, got {eta}"
            )));
        }
        let (loss, grad) = self.gradient(batch)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss {loss}")));
        }
        if eta == 0.0 {
            return Ok(loss);
        }
        let mut g = grad.iter();
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *p -= eta * g.next().expect("gradient matches parameter count");
            }
        }
        Ok(loss)
    }

    /// Writes the layer sizes on the first line, then one parameter per line.
    pub fn to_text(&self) -> String {
        let sizes: Vec<String> = self.layer_sizes().iter().map(usize::to_string).collect();
        let mut out = sizes.join(" ");
        out.push('\n');
        for p in self.params() {
            writeln!(out, "{p:?}").expect("write to string");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing layer-size header".into(),
        })?;
        let sizes = header
            .split_whitespace()
            .map(|s| {
                s.parse::<usize>().map_err(|e| Error::Parse {
                    line: 1,
                    message: format!("layer size {s:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut net = Self::zeros(&sizes)?;
        let params = lines
            .map(|(i, l)| {
                l.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("parameter {l:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        net.set_params(&params)?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Frozen copy of the online network used for TD targets.
pub fn sync_target(online: &QNetwork) -> QNetwork {
    online.clone()
}

/// Finite-difference step of [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

/// Largest relative disagreement between the analytic gradient and central
/// differences over every parameter. The denominator is floored at `1e-8`.
pub fn gradient_check(net: &QNetwork, batch: &TrainBatch) -> Result<f64> {
    let (_, analytic) = net.gradient(batch)?;
    let base = net.params();
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for (i, &g) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + FD_STEP;
        probe.set_params(&p)?;
        let up = probe.loss_unchecked(batch);
        p[i] = base[i] - FD_STEP;
        probe.set_params(&p)?;
        let down = probe.loss_unchecked(batch);
        let numeric = (up - down) / (2.0 * FD_STEP);
        let denom = g.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((g - numeric).abs() / denom);
    }
    Ok(worst)
}
