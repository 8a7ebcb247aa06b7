//! Noisy gradient oracle on a linear loss: `g_t ~ N(gbar, sigma^2 I)`.

use super::{Evaluation, GradientOracle};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct NgosParams {
    pub gbar: Tensor,
    pub sigma: f64,
}

impl NgosParams {
    pub fn new(gbar: Tensor, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::config(format!(
                "noise scale must be >= 0, got {sigma}"
            )));
        }
        Ok(NgosParams { gbar, sigma })
    }

    /// Per-coordinate `E[g^2] = gbar^2 + sigma^2`.
    pub fn second_moment(&self) -> Tensor {
        let s2 = self.sigma * self.sigma;
        self.gbar.map(|g| g * g + s2)
    }
}

pub fn ngos_sample(p: &NgosParams, rng: &mut Rng) -> Tensor {
    let sigma = p.sigma;
    p.gbar.map(|g| g + sigma * rng.standard_normal())
}

#[derive(Debug, Clone)]
pub struct NgosOracle {
    pub params: NgosParams,
    pub rng: Rng,
}

impl GradientOracle for NgosOracle {
    fn evaluate(&mut self, params: &[Tensor], _step: u64) -> Result<Evaluation> {
        match params {
            [theta] => {
                theta.ensure_same_shape(&self.params.gbar)?;
                let g = ngos_sample(&self.params, &mut self.rng).named(theta.name());
                Ok(Evaluation {
                    loss: self.loss(params),
                    grads: vec![g],
                })
            }
            _ => Err(Error::config(
                "noisy linear loss expects one parameter tensor",
            )),
        }
    }

    /// Expected loss `gbar . theta`.
    fn loss(&self, params: &[Tensor]) -> Option<f64> {
        let theta = params.first()?;
        Some(
            theta
                .data()
                .iter()
                .zip(self.params.gbar.data())
                .map(|(x, g)| x * g)
                .sum(),
        )
    }
}
