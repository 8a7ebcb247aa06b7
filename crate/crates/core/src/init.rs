//! Second-moment initialization strategies and the warmup comparator.
//!
//! The first moment always starts at zero; only `v0` varies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::{Shape, Tensor};

/// Default scale for [`InitStrategy::Random`].
pub const DEFAULT_RANDOM_SIGMA: f64 = 100.0;
/// Default scale for [`InitStrategy::DataDriven`].
pub const DEFAULT_DATA_SIGMA: f64 = 1.0;
/// `fan_sum` used for standalone scalar parameters.
pub const SCALAR_FAN_SUM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitStrategy {
    Zero,
    /// `v0 = sigma / (fan_in + fan_out) * chi2_1`, entrywise.
    Random {
        sigma: f64,
    },
    /// `v0 = sigma * (mean(g)^2 + var(g))` over sampled gradients.
    DataDriven {
        sigma: f64,
    },
    Constant {
        lambda: f64,
    },
}

impl InitStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitStrategy::Zero => Ok(()),
            InitStrategy::Random { sigma } | InitStrategy::DataDriven { sigma } => {
                if sigma.is_finite() && sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("sigma must be >= 0, got {sigma}")))
                }
            }
            InitStrategy::Constant { lambda } => {
                if lambda.is_finite() && lambda >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("lambda must be >= 0, got {lambda}")))
                }
            }
        }
    }

    pub fn needs_samples(&self) -> bool {
        matches!(self, InitStrategy::DataDriven { .. })
    }

    /// Produces `v0` for one parameter tensor.
    ///
    /// `fan_sum` is only read by `Random`; `samples` (per-sample gradients
    /// for this tensor) only by `DataDriven`.
    pub fn initial_v(
        &self,
        param: &Tensor,
        fan_sum: usize,
        rng: Option<&mut Rng>,
        samples: Option<&[Tensor]>,
    ) -> Result<Tensor> {
        self.validate()?;
        let v0 = match *self {
            InitStrategy::Zero => Tensor::zeros_like(param),
            InitStrategy::Constant { lambda } => Tensor::filled(param.shape(), lambda),
            InitStrategy::Random { sigma } => {
                let rng = rng.ok_or_else(|| {
                    Error::MissingData("random v0 needs a random number generator".into())
                })?;
                let mut v = random_v0_flat(param.len(), fan_sum, sigma, rng)?;
                v = Tensor::with_shape(param.shape(), v.into_data())?;
                v
            }
            InitStrategy::DataDriven { sigma } => {
                let samples = samples.ok_or_else(|| {
                    Error::MissingData("data-driven v0 needs per-sample gradients".into())
                })?;
                let v = data_driven_v0(samples, sigma)?;
                param.ensure_same_shape(&v)?;
                v
            }
        };
        Ok(v0.named(param.name()))
    }
}

/// `fan_in + fan_out` for matrices, [`SCALAR_FAN_SUM`] for flat tensors.
///
/// Bias vectors should instead be given the fan sum of their layer.
pub fn default_fan_sum(shape: Shape) -> usize {
    match shape {
        Shape::Matrix { fan_out, fan_in } => fan_out + fan_in,
        Shape::Flat(_) => SCALAR_FAN_SUM,
    }
}

/// Scaled chi-squared draw for a `fan_out x fan_in` weight matrix.
pub fn random_v0(fan_out: usize, fan_in: usize, sigma: f64, rng: &mut Rng) -> Result<Tensor> {
    let shape = Shape::from_dims(&[fan_out, fan_in])?;
    let flat = random_v0_flat(shape.len(), fan_out + fan_in, sigma, rng)?;
    Tensor::with_shape(shape, flat.into_data())
}

/// Scaled chi-squared draw with an explicit `fan_sum`, for bias vectors and scalars.
pub fn random_v0_flat(len: usize, fan_sum: usize, sigma: f64, rng: &mut Rng) -> Result<Tensor> {
    if fan_sum < 1 {
        return Err(Error::config("fan_sum must be >= 1"));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::config(format!("sigma must be >= 0, got {sigma}")));
    }
    let shape = Shape::from_dims(&[len])?;
    let scale = sigma / fan_sum as f64;
    let data = (0..len)
        .map(|_| {
            let z = rng.standard_normal();
            scale * z * z
        })
        .collect();
    Tensor::with_shape(shape, data)
}

/// `sigma * (mean^2 + population variance)` over the sample axis.
pub fn data_driven_v0(per_sample_grads: &[Tensor], sigma: f64) -> Result<Tensor> {
    if per_sample_grads.len() < 2 {
        return Err(Error::InsufficientSamples(per_sample_grads.len()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::config(format!("sigma must be >= 0, got {sigma}")));
    }
    let first = &per_sample_grads[0];
    for g in &per_sample_grads[1..] {
        first.ensure_same_shape(g)?;
    }
    let n = per_sample_grads.len() as f64;
    let mut mean = vec![0.0; first.len()];
    for g in per_sample_grads {
        for (acc, &x) in mean.iter_mut().zip(g.data()) {
            *acc += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut var = vec![0.0; first.len()];
    for g in per_sample_grads {
        for ((acc, &x), &mu) in var.iter_mut().zip(g.data()).zip(&mean) {
            *acc += (x - mu) * (x - mu);
        }
    }
    let data = mean
        .iter()
        .zip(&var)
        .map(|(&mu, &ss)| sigma * (mu * mu + ss / n))
        .collect();
    Tensor::with_shape(first.shape(), data)
}

/// Linear warmup from `base_lr / W` to `base_lr` over the first `W` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmupSchedule {
    pub warmup_steps: u64,
    pub base_lr: f64,
}

impl WarmupSchedule {
    pub fn new(warmup_steps: u64, base_lr: f64) -> Self {
        WarmupSchedule {
            warmup_steps,
            base_lr,
        }
    }

    pub fn constant(base_lr: f64) -> Self {
        Self::new(0, base_lr)
    }

    pub fn lr(&self, t: u64) -> f64 {
        warmup_lr(t, self)
    }
}

/// `base_lr * min(1, t / W)`; `W = 0` disables warmup.
pub fn warmup_lr(t: u64, sched: &WarmupSchedule) -> f64 {
    if sched.warmup_steps == 0 || t >= sched.warmup_steps {
        return sched.base_lr;
    }
    sched.base_lr * t as f64 / sched.warmup_steps as f64
}
