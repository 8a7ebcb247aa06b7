//! One-hidden-layer tanh MLP with softmax cross-entropy and hand-written backprop,
//! trained on two Gaussian blobs.

use serde::{Deserialize, Serialize};

use super::{Evaluation, GradientOracle};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    pub n_train: usize,
    /// Each blob is centred at `+-separation` in every coordinate.
    pub separation: f64,
    pub seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            input_dim: 10,
            hidden: 32,
            classes: 2,
            n_train: 512,
            separation: 0.5,
            seed: 0,
        }
    }
}

const DATA_STREAM: u64 = 0x6d6c_7064; // "mlpd"

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.n_train == 0 {
            return Err(Error::config("mlp dimensions and n_train must be >= 1"));
        }
        if self.classes != 2 {
            return Err(Error::config("the blob dataset has exactly 2 classes"));
        }
        if !self.separation.is_finite() {
            return Err(Error::config("blob separation must be finite"));
        }
        Ok(())
    }

    /// Regenerates the training set from `seed`; balanced, labels alternate.
    pub fn dataset(&self) -> Dataset {
        let mut rng = Rng::new(self.seed, DATA_STREAM);
        let mut features = Vec::with_capacity(self.n_train * self.input_dim);
        let mut labels = Vec::with_capacity(self.n_train);
        for i in 0..self.n_train {
            let label = i % 2;
            let centre = if label == 0 {
                -self.separation
            } else {
                self.separation
            };
            for _ in 0..self.input_dim {
                features.push(centre + rng.standard_normal());
            }
            labels.push(label);
        }
        Dataset {
            input_dim: self.input_dim,
            features,
            labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    input_dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(input_dim: usize, features: Vec<f64>, labels: Vec<usize>) -> Result<Self> {
        if input_dim == 0 || features.len() != input_dim * labels.len() {
            return Err(Error::config("feature matrix does not match labels"));
        }
        Ok(Dataset {
            input_dim,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.input_dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            input_dim: self.input_dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Parameter layout: `[w1 (hidden x input), b1 (hidden), w2 (classes x hidden), b2 (classes)]`.
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
}

const INIT_STREAM: u64 = 0x6d6c_7069; // "mlpi"

impl Mlp {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Mlp { spec })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    /// Glorot-normal weights, zero biases, drawn from `seed`.
    pub fn init_params(&self, seed: u64) -> Vec<Tensor> {
        let MlpSpec {
            input_dim,
            hidden,
            classes,
            ..
        } = self.spec;
        let mut rng = Rng::new(seed, INIT_STREAM);
        let mut glorot = |fan_out: usize, fan_in: usize| {
            let sd = (2.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_out * fan_in)
                .map(|_| sd * rng.standard_normal())
                .collect();
            Tensor::from_vec(&[fan_out, fan_in], data).expect("positive dims")
        };
        let w1 = glorot(hidden, input_dim).named("w1");
        let w2 = glorot(classes, hidden).named("w2");
        vec![
            w1,
            Tensor::new(&[hidden], 0.0)
                .expect("positive dims")
                .named("b1"),
            w2,
            Tensor::new(&[classes], 0.0)
                .expect("positive dims")
                .named("b2"),
        ]
    }

    /// Bias vectors take the fan sum of their layer.
    pub fn fan_sums(&self) -> Vec<usize> {
        let l1 = self.spec.input_dim + self.spec.hidden;
        let l2 = self.spec.hidden + self.spec.classes;
        vec![l1, l1, l2, l2]
    }

    fn check_params(&self, params: &[Tensor]) -> Result<()> {
        let MlpSpec {
            input_dim,
            hidden,
            classes,
            ..
        } = self.spec;
        let expected = [
            vec![hidden, input_dim],
            vec![hidden],
            vec![classes, hidden],
            vec![classes],
        ];
        if params.len() != 4 {
            return Err(Error::config(format!(
                "mlp expects 4 tensors, got {}",
                params.len()
            )));
        }
        for (p, dims) in params.iter().zip(&expected) {
            if &p.shape().dims() != dims {
                return Err(Error::ShapeMismatch {
                    left: p.shape().dims(),
                    right: dims.clone(),
                });
            }
        }
        Ok(())
    }

    fn hidden_activations(&self, params: &[Tensor], x: &[f64], h: &mut [f64]) {
        let (w1, b1) = (params[0].data(), params[1].data());
        let d = self.spec.input_dim;
        for (j, hj) in h.iter_mut().enumerate() {
            let row = &w1[j * d..(j + 1) * d];
            let pre: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b1[j];
            *hj = pre.tanh();
        }
    }

    fn logits(&self, params: &[Tensor], h: &[f64], z: &mut [f64]) {
        let (w2, b2) = (params[2].data(), params[3].data());
        let k = self.spec.hidden;
        for (c, zc) in z.iter_mut().enumerate() {
            let row = &w2[c * k..(c + 1) * k];
            *zc = row.iter().zip(h).map(|(w, hi)| w * hi).sum::<f64>() + b2[c];
        }
    }

    /// Class probabilities for one input.
    pub fn predict(&self, params: &[Tensor], x: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        let mut h = vec![0.0; self.spec.hidden];
        let mut z = vec![0.0; self.spec.classes];
        self.hidden_activations(params, x, &mut h);
        self.logits(params, &h, &mut z);
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Mean cross-entropy over `data`.
    pub fn loss(&self, params: &[Tensor], data: &Dataset) -> Result<f64> {
        self.check_params(params)?;
        if data.is_empty() {
            return Err(Error::config("empty batch"));
        }
        let mut h = vec![0.0; self.spec.hidden];
        let mut z = vec![0.0; self.spec.classes];
        let mut total = 0.0;
        for i in 0..data.len() {
            self.hidden_activations(params, data.row(i), &mut h);
            self.logits(params, &h, &mut z);
            total += log_sum_exp(&z) - z[data.label(i)];
        }
        Ok(total / data.len() as f64)
    }

    /// Mean cross-entropy and its gradient with respect to every tensor.
    pub fn loss_and_grads(&self, params: &[Tensor], data: &Dataset) -> Result<(f64, Vec<Tensor>)> {
        self.check_params(params)?;
        if data.is_empty() {
            return Err(Error::config("empty batch"));
        }
        if data.input_dim() != self.spec.input_dim {
            return Err(Error::config(
                "batch input dimension does not match the network",
            ));
        }
        let MlpSpec {
            input_dim: d,
            hidden: k,
            classes: c,
            ..
        } = self.spec;
        let w2 = params[2].data();
        let mut grads: Vec<Tensor> = params.iter().map(Tensor::zeros_like).collect();
        let scale = 1.0 / data.len() as f64;

        let mut h = vec![0.0; k];
        let mut z = vec![0.0; c];
        let mut dh = vec![0.0; k];
        let mut total = 0.0;
        for i in 0..data.len() {
            let x = data.row(i);
            let y = data.label(i);
            self.hidden_activations(params, x, &mut h);
            self.logits(params, &h, &mut z);
            total += log_sum_exp(&z) - z[y];

            // dL/dz = (softmax(z) - onehot(y)) / N
            softmax_in_place(&mut z);
            z[y] -= 1.0;
            z.iter_mut().for_each(|v| *v *= scale);

            dh.iter_mut().for_each(|v| *v = 0.0);
            {
                let (gw2, rest) = grads[2..].split_at_mut(1);
                let gw2 = gw2[0].data_mut();
                let gb2 = rest[0].data_mut();
                for (cls, &dz) in z.iter().enumerate() {
                    gb2[cls] += dz;
                    for j in 0..k {
                        gw2[cls * k + j] += dz * h[j];
                        dh[j] += w2[cls * k + j] * dz;
                    }
                }
            }
            let (gw1, rest) = grads.split_at_mut(1);
            let gw1 = gw1[0].data_mut();
            let gb1 = rest[0].data_mut();
            for j in 0..k {
                let dpre = dh[j] * (1.0 - h[j] * h[j]);
                gb1[j] += dpre;
                let row = &mut gw1[j * d..(j + 1) * d];
                for (g, &xi) in row.iter_mut().zip(x) {
                    *g += dpre * xi;
                }
            }
        }
        Ok((total * scale, grads))
    }

    /// Gradients of single-sample losses, one parameter list per sample.
    pub fn per_sample_grads(
        &self,
        params: &[Tensor],
        data: &Dataset,
        indices: &[usize],
    ) -> Result<Vec<Vec<Tensor>>> {
        indices
            .iter()
            .map(|&i| {
                self.loss_and_grads(params, &data.subset(&[i]))
                    .map(|(_, g)| g)
            })
            .collect()
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    z.iter_mut().for_each(|v| *v = (*v - max).exp());
    let total: f64 = z.iter().sum();
    z.iter_mut().for_each(|v| *v /= total);
}

/// Mini-batch oracle that walks a reshuffled permutation of the training set each epoch.
#[derive(Debug, Clone)]
pub struct MlpOracle {
    mlp: Mlp,
    data: Dataset,
    batch_size: usize,
    rng: Rng,
    order: Vec<usize>,
    cursor: usize,
}

impl MlpOracle {
    pub fn new(mlp: Mlp, data: Dataset, batch_size: usize, rng: Rng) -> Result<Self> {
        if batch_size == 0 || batch_size > data.len() {
            return Err(Error::config(format!(
                "batch size must be in 1..={}, got {batch_size}",
                data.len()
            )));
        }
        let n = data.len();
        let mut oracle = MlpOracle {
            mlp,
            data,
            batch_size,
            rng,
            order: (0..n).collect(),
            cursor: n,
        };
        oracle.reshuffle_if_needed();
        Ok(oracle)
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.data.len().div_ceil(self.batch_size)
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    fn reshuffle_if_needed(&mut self) {
        if self.cursor >= self.order.len() {
            self.rng.shuffle(&mut self.order);
            self.cursor = 0;
        }
    }

    fn next_batch(&mut self) -> Vec<usize> {
        self.reshuffle_if_needed();
        let end = (self.cursor + self.batch_size).min(self.order.len());
        let batch = self.order[self.cursor..end].to_vec();
        self.cursor = end;
        batch
    }
}

impl GradientOracle for MlpOracle {
    fn evaluate(&mut self, params: &[Tensor], _step: u64) -> Result<Evaluation> {
        let indices = self.next_batch();
        let batch = self.data.subset(&indices);
        let (loss, grads) = self.mlp.loss_and_grads(params, &batch)?;
        Ok(Evaluation {
            loss: Some(loss),
            grads,
        })
    }

    /// Full training-set loss.
    fn loss(&self, params: &[Tensor]) -> Option<f64> {
        self.mlp.loss(params, &self.data).ok()
    }
}
