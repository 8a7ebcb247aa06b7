use crate::error::{Error, Result};
use crate::tensor::sign;

/// An adaptive step written as magnitude times direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecomposition {
    pub magnitude: f64,
    pub sign: f64,
}

impl StepDecomposition {
    /// Signed step size `magnitude * sign`, i.e. `alpha * m_hat / sqrt(v_hat)`.
    pub fn signed(&self) -> f64 {
        self.magnitude * self.sign
    }
}

/// Splits `alpha * m_hat / sqrt(v_hat)` into `alpha * sqrt(1 / (1 + (v_hat - m_hat^2) / m_hat^2))`
/// and `sign(m_hat)`. The magnitude equals `alpha` exactly when `v_hat = m_hat^2`.
pub fn decompose_step(m_hat: f64, v_hat: f64, alpha: f64) -> Result<StepDecomposition> {
    if m_hat == 0.0 {
        return Err(Error::UndefinedSign);
    }
    if v_hat.is_nan() || v_hat <= 0.0 {
        return Err(Error::Domain(format!(
            "second moment must be > 0, got {v_hat}"
        )));
    }
    let m2 = m_hat * m_hat;
    let magnitude = alpha * (1.0 / (1.0 + (v_hat - m2) / m2)).sqrt();
    Ok(StepDecomposition {
        magnitude,
        sign: sign(m_hat),
    })
}
