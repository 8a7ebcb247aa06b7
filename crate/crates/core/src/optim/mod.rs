//! Optimizer state machines.
//!
//! Every variant keeps a `(m, v, t)` triple per parameter tensor. `v` is
//! seeded by an [`InitStrategy`]; `m` always starts at zero. The learning
//! rate for a step is passed in by the caller so schedules stay outside the
//! update rules.

mod step;

pub use step::{
    adabelief_step, adabound_step, adam_step, adamw_step, radam_rectified, radam_rho, radam_step,
    rmsprop_step, sgdm_step,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{default_fan_sum, InitStrategy};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[serde(alias = "sgd")]
    SgdMomentum,
    RmsProp,
    Adam,
    AdamW,
    RAdam,
    AdaBound,
    AdaBelief,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::SgdMomentum => "sgdmomentum",
            Variant::RmsProp => "rmsprop",
            Variant::Adam => "adam",
            Variant::AdamW => "adamw",
            Variant::RAdam => "radam",
            Variant::AdaBound => "adabound",
            Variant::AdaBelief => "adabelief",
        }
    }

    /// Variants whose `v` slot is a nonnegative second-moment estimate.
    pub fn is_adam_family(&self) -> bool {
        !matches!(self, Variant::SgdMomentum)
    }
}

/// Deserializes with every field optional (see [`Default`]) and unknown fields rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub variant: Variant,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub momentum: f64,
    /// AdaBound: the SGD learning rate the bounds converge to.
    pub final_lr: f64,
    /// AdaBound: convergence speed of the bounds.
    pub gamma: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            variant: Variant::Adam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            momentum: 0.0,
            final_lr: 0.1,
            gamma: 1e-3,
        }
    }
}

impl OptimizerConfig {
    pub fn new(variant: Variant, lr: f64) -> Self {
        OptimizerConfig {
            variant,
            lr,
            ..Default::default()
        }
    }

    pub fn adam(lr: f64) -> Self {
        Self::new(Variant::Adam, lr)
    }

    pub fn sgd(lr: f64, momentum: f64) -> Self {
        OptimizerConfig {
            momentum,
            ..Self::new(Variant::SgdMomentum, lr)
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..1.0).contains(&x);
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !unit(self.beta1) {
            return Err(Error::config(format!(
                "beta1 must be in [0, 1), got {}",
                self.beta1
            )));
        }
        if !unit(self.beta2) {
            return Err(Error::config(format!(
                "beta2 must be in [0, 1), got {}",
                self.beta2
            )));
        }
        // eps = 0 is allowed so closed-form checks can run without the guard.
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::config(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay must be >= 0"));
        }
        if self.weight_decay > 0.0 && self.variant != Variant::AdamW {
            return Err(Error::config(format!(
                "weight_decay is only used by adamw, not {}",
                self.variant.name()
            )));
        }
        if !unit(self.momentum) {
            return Err(Error::config(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.variant == Variant::AdaBound {
            if !(self.final_lr.is_finite() && self.final_lr > 0.0) {
                return Err(Error::config("final_lr must be > 0"));
            }
            if !(self.gamma.is_finite() && self.gamma > 0.0) {
                return Err(Error::config("gamma must be > 0"));
            }
        }
        Ok(())
    }
}

/// Moments and step count for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    /// First moment (velocity for SGD-momentum).
    pub m: Tensor,
    /// Second moment; AdaBelief keeps its belief variance `s` here.
    pub v: Tensor,
    pub t: u64,
}

impl ParamState {
    pub fn new(param: &Tensor, v0: Tensor) -> Result<Self> {
        param.ensure_same_shape(&v0)?;
        Ok(ParamState {
            m: Tensor::zeros_like(param),
            v: v0,
            t: 0,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.m.is_finite() && self.v.is_finite()
    }
}

/// Where the initializer gets its randomness, data and fan sums from.
#[derive(Default)]
pub struct InitSources<'a> {
    pub rng: Option<&'a mut Rng>,
    /// One entry per sample, each aligned with the parameter list.
    pub sample_grads: Option<&'a [Vec<Tensor>]>,
    /// Per-tensor `fan_in + fan_out`; defaults to [`default_fan_sum`].
    pub fan_sums: Option<&'a [usize]>,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    cfg: OptimizerConfig,
    params: Vec<ParamState>,
}

/// Builds zeroed first moments and strategy-seeded second moments for `params`.
pub fn build_optimizer(
    cfg: &OptimizerConfig,
    init: &InitStrategy,
    params: &[Tensor],
    sources: InitSources<'_>,
) -> Result<OptimizerState> {
    cfg.validate()?;
    init.validate()?;
    let InitSources {
        mut rng,
        sample_grads,
        fan_sums,
    } = sources;
    if init.needs_samples() && sample_grads.is_none() {
        return Err(Error::MissingData(
            "data-driven v0 needs a per-sample gradient source".into(),
        ));
    }
    if let Some(fs) = fan_sums {
        if fs.len() != params.len() {
            return Err(Error::config(format!(
                "{} fan sums for {} parameter tensors",
                fs.len(),
                params.len()
            )));
        }
    }

    let mut states = Vec::with_capacity(params.len());
    for (i, p) in params.iter().enumerate() {
        let fan_sum = fan_sums.map_or_else(|| default_fan_sum(p.shape()), |fs| fs[i]);
        let samples: Option<Vec<Tensor>> = match sample_grads {
            Some(sg) => Some(
                sg.iter()
                    .map(|sample| {
                        sample.get(i).cloned().ok_or_else(|| {
                            Error::MissingData(format!("sample gradient for tensor {i}"))
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            None => None,
        };
        let v0 = init.initial_v(p, fan_sum, rng.as_deref_mut(), samples.as_deref())?;
        states.push(ParamState::new(p, v0)?);
    }
    Ok(OptimizerState {
        cfg: *cfg,
        params: states,
    })
}

impl OptimizerState {
    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn states(&self) -> &[ParamState] {
        &self.params
    }

    pub fn states_mut(&mut self) -> &mut [ParamState] {
        &mut self.params
    }

    pub fn step_count(&self) -> u64 {
        self.params.first().map_or(0, |s| s.t)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(ParamState::is_finite)
    }

    /// Applies one update to every tensor and returns the per-tensor steps.
    pub fn step(
        &mut self,
        params: &mut [Tensor],
        grads: &[Tensor],
        lr_t: f64,
    ) -> Result<Vec<Tensor>> {
        if params.len() != self.params.len() || grads.len() != self.params.len() {
            return Err(Error::config(format!(
                "optimizer tracks {} tensors, got {} params and {} grads",
                self.params.len(),
                params.len(),
                grads.len()
            )));
        }
        let step_fn = match self.cfg.variant {
            Variant::SgdMomentum => sgdm_step,
            Variant::RmsProp => rmsprop_step,
            Variant::Adam => adam_step,
            Variant::AdamW => adamw_step,
            Variant::RAdam => radam_step,
            Variant::AdaBound => adabound_step,
            Variant::AdaBelief => adabelief_step,
        };
        self.params
            .iter_mut()
            .zip(params.iter_mut())
            .zip(grads)
            .map(|((state, theta), g)| step_fn(state, theta, g, &self.cfg, lr_t))
            .collect()
    }
}
