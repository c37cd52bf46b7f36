//! Feed-forward network with a softmax output trained on cross-entropy.
//!
//! Optimization is mini-batch gradient descent with Adam moment estimates.
//! Training keeps the tail of each class's rows (in input order) for
//! early stopping and restores the parameters with the lowest validation loss.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub validation_fraction: f64,
    /// Minimum decrease in monitored loss that counts as an improvement.
    pub tolerance: f64,
    /// L2 penalty `l2/2 · Σw²` on weights (not biases).
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![100],
            activation: Activation::Relu,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 200,
            early_stop_patience: 20,
            validation_fraction: 0.15,
            tolerance: 1e-4,
            l2: 1e-4,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_layers.contains(&0) {
            return Err(ModelError::Config("hidden layer sizes must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.early_stop_patience == 0 {
            return Err(ModelError::Config(
                "batch_size, max_epochs and early_stop_patience must be positive".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return Err(ModelError::Config(format!(
                "validation_fraction must be in (0, 0.5], got {}",
                self.validation_fraction
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(ModelError::Config("tolerance must be nonnegative".into()));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(ModelError::Config("l2 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Fully connected layer; `weights` is row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub activation: Activation,
    pub layers: Vec<Dense>,
}

fn nll(p: f64) -> f64 {
    if p.is_nan() {
        f64::NAN
    } else {
        -p.max(f64::MIN_POSITIVE).ln()
    }
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(inputs: usize, hidden: &[usize], outputs: usize, activation: Activation, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(outputs);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.random_range(-bound..bound))
                        .collect(),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Self { activation, layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Activations of every layer, input first, softmax probabilities last.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let input = &acts[li];
            let mut out: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    layer.bias[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            if li == last {
                softmax_in_place(&mut out);
            } else {
                out.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            acts.push(out);
        }
        acts
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().expect("network has an output layer")
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let p = self.predict_proba(x);
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        best
    }

    /// Mean cross-entropy over the selected rows.
    pub fn loss(&self, rows: &[Vec<f64>], targets: &[usize], idx: &[usize]) -> f64 {
        let total: f64 = idx
            .iter()
            .map(|&i| nll(self.predict_proba(&rows[i])[targets[i]]))
            .sum();
        total / idx.len() as f64
    }

    /// Mean cross-entropy plus `l2/2 · Σw²`, and its gradient flattened in
    /// [`Mlp::flat_params`] order.
    pub fn loss_and_gradient(
        &self,
        rows: &[Vec<f64>],
        targets: &[usize],
        idx: &[usize],
        l2: f64,
    ) -> (f64, Vec<f64>) {
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense {
                inputs: l.inputs,
                outputs: l.outputs,
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect();
        let mut loss = 0.0;
        for &i in idx {
            let acts = self.forward(&rows[i]);
            let probs = acts.last().unwrap();
            loss += nll(probs[targets[i]]);
            // Softmax + cross-entropy: dL/dz = p − onehot.
            let mut delta: Vec<f64> = probs.clone();
            delta[targets[i]] -= 1.0;
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grads[li];
                for o in 0..layer.outputs {
                    g.bias[o] += delta[o];
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (w, v) in row.iter_mut().zip(input) {
                        *w += delta[o] * v;
                    }
                }
                if li == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * delta[o];
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= self.activation.derivative(*a);
                }
                delta = prev;
            }
        }
        let scale = 1.0 / idx.len() as f64;
        let mut penalty = 0.0;
        let mut flat = Vec::with_capacity(self.param_count());
        for (g, l) in grads.iter().zip(&self.layers) {
            for (gw, w) in g.weights.iter().zip(&l.weights) {
                penalty += w * w;
                flat.push(gw * scale + l2 * w);
            }
            flat.extend(g.bias.iter().map(|v| v * scale));
        }
        (loss * scale + 0.5 * l2 * penalty, flat)
    }

    /// All parameters: per layer, weights then biases.
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
    }

    /// Trains a fresh network on `rows`.
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[usize],
        n_classes: usize,
        cfg: &MlpConfig,
    ) -> Result<Self, ModelError> {
        cfg.validate()?;
        let inputs = rows.first().map_or(0, Vec::len);
        let mut net = Mlp::new(inputs, &cfg.hidden_layers, n_classes, cfg.activation, cfg.seed);
        let (train_idx, val_idx) = validation_split(targets, n_classes, cfg.validation_fraction);
        if train_idx.is_empty() {
            return Err(ModelError::Data("no training rows left after validation split".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_ba7c4);
        let mut adam = Adam::new(net.param_count(), cfg.learning_rate);
        let mut params = net.flat_params();
        let mut best_params = params.clone();
        let mut best_loss = f64::INFINITY;
        let mut stale = 0;
        let mut order = train_idx.clone();
        for epoch in 0..cfg.max_epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let (loss, grad) = net.loss_and_gradient(rows, targets, batch, cfg.l2);
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(ModelError::Diverged { epoch });
                }
                epoch_loss += loss * batch.len() as f64;
                adam.step(&mut params, &grad);
                net.set_flat_params(&params);
            }
            epoch_loss /= order.len() as f64;
            let monitored = if val_idx.is_empty() {
                epoch_loss
            } else {
                net.loss(rows, targets, &val_idx)
            };
            if !monitored.is_finite() {
                return Err(ModelError::Diverged { epoch });
            }
            if monitored < best_loss - cfg.tolerance {
                best_loss = monitored;
                best_params.clone_from(&params);
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.early_stop_patience {
                    break;
                }
            }
        }
        net.set_flat_params(&best_params);
        Ok(net)
    }
}

/// Per class, the last `⌊fraction · count⌋` rows (in input order) validate.
fn validation_split(targets: &[usize], n_classes: usize, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &t) in targets.iter().enumerate() {
        per_class[t].push(i);
    }
    let mut val = vec![false; targets.len()];
    for rows in &per_class {
        let k = (fraction * rows.len() as f64).floor() as usize;
        for &i in &rows[rows.len() - k..] {
            val[i] = true;
        }
    }
    (0..targets.len()).partition(|&i| !val[i])
}

struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}
