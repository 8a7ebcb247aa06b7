//! Gradient oracles.

mod expdecay;
mod mlp;
mod ngos;
mod quadratic;
mod saddle;

pub use expdecay::{expdecay_grad, ExpDecayOracle, ExpDecayParams, SignRule};
pub use mlp::{Dataset, Mlp, MlpOracle, MlpSpec};
pub use ngos::{ngos_sample, NgosOracle, NgosParams};
pub use quadratic::{quadratic_value_grad, QuadraticOracle};
pub use saddle::{SaddleOracle, SaddleParams, SwitchRule};

use crate::error::Result;
use crate::tensor::Tensor;

/// One oracle call: a gradient per parameter tensor, plus the loss when the
/// oracle can compute it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: Option<f64>,
    pub grads: Vec<Tensor>,
}

pub trait GradientOracle {
    /// Gradients at `params` for step `step` (1-based). Shapes match `params`.
    fn evaluate(&mut self, params: &[Tensor], step: u64) -> Result<Evaluation>;

    /// Deterministic loss at `params`, if the objective has one.
    fn loss(&self, _params: &[Tensor]) -> Option<f64> {
        None
    }
}

pub(crate) fn single_scalar(params: &[Tensor]) -> Result<f64> {
    match params {
        [p] if p.len() == 1 => Ok(p.data()[0]),
        _ => Err(crate::Error::config(
            "scalar objective expects exactly one single-entry parameter tensor",
        )),
    }
}
