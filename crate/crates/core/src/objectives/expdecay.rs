//! Exponentially shrinking gradients `g_t = |g_1| r^(t-1) s_t`.

use serde::{Deserialize, Serialize};

use super::{single_scalar, Evaluation, GradientOracle};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignRule {
    /// `s_t = +1` for every step.
    #[default]
    Aligned,
    /// `s_t = (-1)^(t-1)`.
    Alternating,
}

impl SignRule {
    pub fn sign(&self, t: u64) -> f64 {
        match self {
            SignRule::Aligned => 1.0,
            SignRule::Alternating => {
                if t % 2 == 1 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpDecayParams {
    pub g1_mag: f64,
    pub r: f64,
    #[serde(default)]
    pub signs: SignRule,
}

impl ExpDecayParams {
    pub fn new(g1_mag: f64, r: f64, signs: SignRule) -> Result<Self> {
        let p = ExpDecayParams { g1_mag, r, signs };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g1_mag.is_finite() && self.g1_mag > 0.0) {
            return Err(Error::config(format!(
                "|g1| must be > 0, got {}",
                self.g1_mag
            )));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::config(format!(
                "decay rate must be in (0, 1), got {}",
                self.r
            )));
        }
        Ok(())
    }
}

/// Gradient at step `t >= 1`.
pub fn expdecay_grad(t: u64, p: &ExpDecayParams) -> f64 {
    debug_assert!(t >= 1);
    p.g1_mag * p.r.powi((t.saturating_sub(1)).min(i32::MAX as u64) as i32) * p.signs.sign(t)
}

/// Position-independent oracle: the gradient only depends on the step index.
#[derive(Debug, Clone)]
pub struct ExpDecayOracle {
    pub params: ExpDecayParams,
}

impl GradientOracle for ExpDecayOracle {
    fn evaluate(&mut self, params: &[Tensor], step: u64) -> Result<Evaluation> {
        single_scalar(params)?;
        if step == 0 {
            return Err(Error::config("steps are 1-based"));
        }
        Ok(Evaluation {
            loss: None,
            grads: vec![Tensor::scalar(expdecay_grad(step, &self.params))],
        })
    }
}
