//! Fully connected regressor: `hidden_layers` blocks of dense -> batch norm ->
//! ELU, then a linear output unit. Trained with Adam on mean squared error plus
//! an L2 penalty on the dense weights (not on biases or batch-norm parameters).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::ModelError;
use crate::dataset::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub elu_alpha: f64,
    pub l2_lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: 9,
            hidden_width: 32,
            elu_alpha: 1.0,
            l2_lambda: 1e-4,
            epochs: 150,
            batch_size: 128,
            adam: AdamConfig::default(),
            bn_eps: 1e-5,
            bn_momentum: 0.9,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_width < 1 || self.epochs < 1 || self.batch_size < 1 {
            return Err(ModelError::InvalidConfig("mlp: widths, epochs and batch_size must be >= 1".into()));
        }
        if !(self.l2_lambda >= 0.0) || !(self.bn_eps > 0.0) || !(0.0..1.0).contains(&self.bn_momentum) {
            return Err(ModelError::InvalidConfig("mlp: need l2 >= 0, bn_eps > 0, 0 <= momentum < 1".into()));
        }
        if !(self.adam.lr > 0.0) || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) {
            return Err(ModelError::InvalidConfig("mlp: need lr > 0 and betas in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; activations are cached for backprop.
    Train,
    /// Running statistics.
    Infer,
}

/// Weights are `n_out x n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Dense {
    fn forward(&self, h: &[f64], m: usize) -> Vec<f64> {
        // transposed copy so the inner loop runs over contiguous outputs
        let mut wt = vec![0.0; self.n_in * self.n_out];
        for o in 0..self.n_out {
            for i in 0..self.n_in {
                wt[i * self.n_out + o] = self.w[o * self.n_in + i];
            }
        }
        let mut z = Vec::with_capacity(m * self.n_out);
        for hr in h.chunks_exact(self.n_in).take(m) {
            let start = z.len();
            z.extend_from_slice(&self.b);
            let zr = &mut z[start..];
            for (&hi, wi) in hr.iter().zip(wt.chunks_exact(self.n_out)) {
                for (zo, w) in zr.iter_mut().zip(wi) {
                    *zo += hi * w;
                }
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayer {
    pub dense: Dense,
    pub bn: BatchNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub hidden: Vec<HiddenLayer>,
    pub output: Dense,
    pub elu_alpha: f64,
    pub bn_eps: f64,
}

/// Per-layer activations from a train-mode pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Vec<f64>,
    /// Normalized pre-activations, before scale and shift.
    pub zhat: Vec<f64>,
    /// ELU input.
    pub u: Vec<f64>,
    pub inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub rows: usize,
    pub layers: Vec<LayerCache>,
    pub output_input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<LayerGrad>,
    pub output_w: Vec<f64>,
    pub output_b: Vec<f64>,
}

impl Gradients {
    /// Same order as [`Network::tensors_mut`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::with_capacity(4 * self.hidden.len() + 2);
        for l in &self.hidden {
            v.extend([&l.w[..], &l.b[..], &l.gamma[..], &l.beta[..]]);
        }
        v.push(&self.output_w);
        v.push(&self.output_b);
        v
    }
}

pub fn elu(x: f64, alpha: f64) -> f64 {
    if x > 0.0 { x } else { alpha * x.exp_m1() }
}

fn elu_grad(x: f64, alpha: f64) -> f64 {
    if x > 0.0 { 1.0 } else { alpha * x.exp() }
}

fn truncated_normal<R: Rng>(r: &mut R, sigma: f64) -> f64 {
    loop {
        let z: f64 = r.sample(StandardNormal);
        if z.abs() <= 2.0 {
            return sigma * z;
        }
    }
}

/// He-normal initialization, truncated at two standard deviations.
pub fn mlp_init(cfg: &MlpConfig, n_features: usize, seed: u64) -> Result<Network, ModelError> {
    cfg.validate()?;
    if n_features < 1 {
        return Err(ModelError::InvalidConfig("mlp: need at least one input feature".into()));
    }
    let mut r = rng::stream(seed, &[rng::tag::MLP_INIT]);
    let mut dense = |n_in: usize, n_out: usize| {
        let sigma = (2.0 / n_in as f64).sqrt();
        Dense { n_in, n_out, w: (0..n_in * n_out).map(|_| truncated_normal(&mut r, sigma)).collect(), b: vec![0.0; n_out] }
    };
    let width = cfg.hidden_width;
    let mut hidden = Vec::with_capacity(cfg.hidden_layers);
    for k in 0..cfg.hidden_layers {
        let n_in = if k == 0 { n_features } else { width };
        hidden.push(HiddenLayer {
            dense: dense(n_in, width),
            bn: BatchNorm {
                gamma: vec![1.0; width],
                beta: vec![0.0; width],
                running_mean: vec![0.0; width],
                running_var: vec![1.0; width],
            },
        });
    }
    let last = if cfg.hidden_layers == 0 { n_features } else { width };
    let output = dense(last, 1);
    Ok(Network { hidden, output, elu_alpha: cfg.elu_alpha, bn_eps: cfg.bn_eps })
}

impl Network {
    pub fn n_inputs(&self) -> usize {
        self.hidden.first().map_or(self.output.n_in, |l| l.dense.n_in)
    }

    /// Trainable tensors: per hidden layer `w, b, gamma, beta`, then output `w, b`.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::with_capacity(4 * self.hidden.len() + 2);
        for l in &mut self.hidden {
            v.push(&mut l.dense.w);
            v.push(&mut l.dense.b);
            v.push(&mut l.bn.gamma);
            v.push(&mut l.bn.beta);
        }
        v.push(&mut self.output.w);
        v.push(&mut self.output.b);
        v
    }

    pub fn tensor_shapes(&self) -> Vec<usize> {
        let mut v = Vec::new();
        for l in &self.hidden {
            v.extend([l.dense.w.len(), l.dense.b.len(), l.bn.gamma.len(), l.bn.beta.len()]);
        }
        v.extend([self.output.w.len(), self.output.b.len()]);
        v
    }

    fn l2_sum(&self) -> f64 {
        let hidden: f64 = self.hidden.iter().map(|l| l.dense.w.iter().map(|w| w * w).sum::<f64>()).sum();
        hidden + self.output.w.iter().map(|w| w * w).sum::<f64>()
    }

    /// Forward pass over the rows of `x`.
    pub fn forward(&self, x: &Matrix, mode: Mode) -> Result<(Vec<f64>, Option<ForwardCache>), ModelError> {
        let m = x.rows();
        if m == 0 {
            return Err(ModelError::BatchTooSmall { needed: 1, got: 0 });
        }
        if mode == Mode::Train && m < 2 {
            return Err(ModelError::BatchTooSmall { needed: 2, got: m });
        }
        if x.cols() != self.n_inputs() {
            return Err(ModelError::DimensionMismatch { expected: self.n_inputs(), got: x.cols() });
        }
        let mut h = x.as_slice().to_vec();
        let mut layers = Vec::new();
        for layer in &self.hidden {
            let width = layer.dense.n_out;
            let z = layer.dense.forward(&h, m);
            let (mean, var) = match mode {
                Mode::Train => {
                    let mut mean = vec![0.0; width];
                    let mut var = vec![0.0; width];
                    for r in 0..m {
                        for j in 0..width {
                            mean[j] += z[r * width + j];
                        }
                    }
                    mean.iter_mut().for_each(|v| *v /= m as f64);
                    for r in 0..m {
                        for j in 0..width {
                            let d = z[r * width + j] - mean[j];
                            var[j] += d * d;
                        }
                    }
                    var.iter_mut().for_each(|v| *v /= m as f64);
                    (mean, var)
                }
                Mode::Infer => (layer.bn.running_mean.clone(), layer.bn.running_var.clone()),
            };
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.bn_eps).sqrt()).collect();
            let mut zhat = vec![0.0; m * width];
            let mut u = vec![0.0; m * width];
            let mut a = vec![0.0; m * width];
            for r in 0..m {
                for j in 0..width {
                    let k = r * width + j;
                    zhat[k] = (z[k] - mean[j]) * inv_std[j];
                    u[k] = layer.bn.gamma[j] * zhat[k] + layer.bn.beta[j];
                    a[k] = elu(u[k], self.elu_alpha);
                }
            }
            if mode == Mode::Train {
                layers.push(LayerCache { input: h, zhat, u, inv_std, batch_mean: mean, batch_var: var });
            }
            h = a;
        }
        let pred = self.output.forward(&h, m);
        let cache = (mode == Mode::Train).then(|| ForwardCache { rows: m, layers, output_input: h });
        Ok((pred, cache))
    }

    /// Inference-mode predictions.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if x.rows() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.forward(x, Mode::Infer)?.0)
    }

    /// Train-mode loss: batch MSE plus `l2 * sum(w^2)` over dense weights.
    pub fn loss(&self, x: &Matrix, y: &[f64], l2: f64) -> Result<f64, ModelError> {
        let (pred, _) = self.forward(x, Mode::Train)?;
        Ok(mse(&pred, y) + l2 * self.l2_sum())
    }

    /// Loss and gradient of every trainable parameter.
    pub fn gradients(&self, x: &Matrix, y: &[f64], l2: f64) -> Result<(f64, Gradients, ForwardCache), ModelError> {
        if y.len() != x.rows() {
            return Err(ModelError::DimensionMismatch { expected: x.rows(), got: y.len() });
        }
        let (pred, cache) = self.forward(x, Mode::Train)?;
        let cache = cache.expect("train mode caches");
        let m = cache.rows;
        let loss = mse(&pred, y) + l2 * self.l2_sum();

        let dpred: Vec<f64> = pred.iter().zip(y).map(|(p, t)| 2.0 * (p - t) / m as f64).collect();
        let (mut dh, output_w, output_b) = dense_backward(&self.output, &cache.output_input, &dpred, m, l2);

        let mut hidden = Vec::with_capacity(self.hidden.len());
        for (layer, lc) in self.hidden.iter().zip(&cache.layers).rev() {
            let width = layer.dense.n_out;
            let mut dgamma = vec![0.0; width];
            let mut dbeta = vec![0.0; width];
            let mut dzhat = vec![0.0; m * width];
            for r in 0..m {
                for j in 0..width {
                    let k = r * width + j;
                    let du = dh[k] * elu_grad(lc.u[k], self.elu_alpha);
                    dgamma[j] += du * lc.zhat[k];
                    dbeta[j] += du;
                    dzhat[k] = du * layer.bn.gamma[j];
                }
            }
            let mut sum_d = vec![0.0; width];
            let mut sum_dz = vec![0.0; width];
            for r in 0..m {
                for j in 0..width {
                    let k = r * width + j;
                    sum_d[j] += dzhat[k];
                    sum_dz[j] += dzhat[k] * lc.zhat[k];
                }
            }
            let mf = m as f64;
            let mut dz = vec![0.0; m * width];
            for r in 0..m {
                for j in 0..width {
                    let k = r * width + j;
                    dz[k] = lc.inv_std[j] / mf * (mf * dzhat[k] - sum_d[j] - lc.zhat[k] * sum_dz[j]);
                }
            }
            let (dh_in, dw, db) = dense_backward(&layer.dense, &lc.input, &dz, m, l2);
            dh = dh_in;
            hidden.push(LayerGrad { w: dw, b: db, gamma: dgamma, beta: dbeta });
        }
        hidden.reverse();
        Ok((loss, Gradients { hidden, output_w, output_b }, cache))
    }

    /// Folds a train-mode pass's batch statistics into the running estimates.
    pub fn update_running_stats(&mut self, cache: &ForwardCache, momentum: f64) {
        for (layer, lc) in self.hidden.iter_mut().zip(&cache.layers) {
            for j in 0..layer.bn.running_mean.len() {
                layer.bn.running_mean[j] = momentum * layer.bn.running_mean[j] + (1.0 - momentum) * lc.batch_mean[j];
                layer.bn.running_var[j] = momentum * layer.bn.running_var[j] + (1.0 - momentum) * lc.batch_var[j];
            }
        }
    }
}

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

/// Returns (dL/dinput, dL/dW, dL/db) given dL/dz.
fn dense_backward(d: &Dense, input: &[f64], dz: &[f64], m: usize, l2: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut dh = vec![0.0; m * d.n_in];
    let mut dw: Vec<f64> = d.w.iter().map(|w| 2.0 * l2 * w).collect();
    let mut db = vec![0.0; d.n_out];
    for r in 0..m {
        let hr = &input[r * d.n_in..(r + 1) * d.n_in];
        let dhr = &mut dh[r * d.n_in..(r + 1) * d.n_in];
        for o in 0..d.n_out {
            let g = dz[r * d.n_out + o];
            db[o] += g;
            let wo = &d.w[o * d.n_in..(o + 1) * d.n_in];
            let dwo = &mut dw[o * d.n_in..(o + 1) * d.n_in];
            for (dw, h) in dwo.iter_mut().zip(hr) {
                *dw += g * h;
            }
            for (dh, w) in dhr.iter_mut().zip(wo) {
                *dh += g * w;
            }
        }
    }
    (dh, dw, db)
}

/// Trained network plus the target scaling it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub net: Network,
    pub target_mean: f64,
    pub target_std: f64,
    /// Mean training loss per epoch, in standardized target units.
    pub loss_history: Vec<f64>,
}

impl MlpModel {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        Ok(self.net.predict(x)?.into_iter().map(|p| p * self.target_std + self.target_mean).collect())
    }
}

/// Consecutive batches of `batch` rows; a trailing batch of fewer than two rows
/// joins the one before it.
pub fn batch_bounds(n: usize, batch: usize) -> Vec<(usize, usize)> {
    let batch = batch.max(2);
    let mut out: Vec<(usize, usize)> = (0..n).step_by(batch).map(|s| (s, (s + batch).min(n))).collect();
    if out.len() >= 2 {
        let (s, e) = out[out.len() - 1];
        if e - s < 2 {
            out.pop();
            out.last_mut().expect("at least one batch").1 = e;
        }
    }
    out
}

/// Mini-batch Adam training on standardized inputs. Targets are standardized
/// internally and mapped back at prediction time.
pub fn mlp_fit(x: &Matrix, y: &[f64], cfg: &MlpConfig, seed: u64) -> Result<MlpModel, ModelError> {
    cfg.validate()?;
    let n = x.rows();
    if n < 2 {
        return Err(ModelError::TooFewRows { needed: 2, got: n });
    }
    if y.len() != n {
        return Err(ModelError::DimensionMismatch { expected: n, got: y.len() });
    }
    let target_mean = y.iter().sum::<f64>() / n as f64;
    let sd = (y.iter().map(|v| (v - target_mean) * (v - target_mean)).sum::<f64>() / n as f64).sqrt();
    let target_std = if sd > 0.0 { sd } else { 1.0 };
    let ys: Vec<f64> = y.iter().map(|v| (v - target_mean) / target_std).collect();

    let mut net = mlp_init(cfg, x.cols(), seed)?;
    let mut adam = AdamState::new(&net.tensor_shapes());
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    let bounds = batch_bounds(n, cfg.batch_size);
    let mut by = Vec::with_capacity(cfg.batch_size + 1);
    for epoch in 0..cfg.epochs {
        use rand::seq::SliceRandom;
        order.sort_unstable();
        order.shuffle(&mut rng::stream(seed, &[rng::tag::MLP_EPOCH, epoch as u64]));
        let mut total = 0.0;
        for &(s, e) in &bounds {
            let idx = &order[s..e];
            let bx = x.select_rows(idx);
            by.clear();
            by.extend(idx.iter().map(|&i| ys[i]));
            let (loss, grads, cache) = net.gradients(&bx, &by, cfg.l2_lambda)?;
            net.update_running_stats(&cache, cfg.bn_momentum);
            let g = grads.tensors();
            adam_step(&mut adam, &mut net.tensors_mut(), &g, &cfg.adam)?;
            total += loss * (e - s) as f64;
        }
        loss_history.push(total / n as f64);
    }
    Ok(MlpModel { net, target_mean, target_std, loss_history })
}
