//! Expected moment dynamics under the noisy linear-loss oracle.

use crate::error::{Error, Result};

/// `(E[m_t], E[v_t])` for `g ~ N(gbar, sigma^2)`:
/// `beta1^t m0 + (1 - beta1^t) gbar` and `beta2^t v0 + (1 - beta2^t)(gbar^2 + sigma^2)`.
pub fn expected_moments(
    gbar: f64,
    sigma: f64,
    m0: f64,
    v0: f64,
    beta1: f64,
    beta2: f64,
    t: u64,
) -> (f64, f64) {
    let p1 = powu(beta1, t);
    let p2 = powu(beta2, t);
    let m = p1 * m0 + (1.0 - p1) * gbar;
    let v = p2 * v0 + (1.0 - p2) * (gbar * gbar + sigma * sigma);
    (m, v)
}

/// Distance between the steady-state second moment and its initial value.
pub fn drift(v0: f64, gbar: f64, sigma: f64) -> f64 {
    (gbar * gbar + sigma * sigma - v0).abs()
}

/// First-order expected RMSprop step `-alpha gbar / sqrt(E[v_t])`.
pub fn rmsprop_expected_step(
    gbar: f64,
    sigma: f64,
    v0: f64,
    beta2: f64,
    t: u64,
    alpha: f64,
) -> Result<f64> {
    let (_, ev) = expected_moments(gbar, sigma, 0.0, v0, 0.0, beta2, t);
    if ev.is_nan() || ev <= 0.0 {
        return Err(Error::Domain(format!(
            "expected second moment is {ev} at t={t}; the step is undefined"
        )));
    }
    Ok(-alpha * gbar / ev.sqrt())
}

pub(crate) fn powu(base: f64, t: u64) -> f64 {
    if t <= i32::MAX as u64 {
        base.powi(t as i32)
    } else {
        base.powf(t as f64)
    }
}
