//! Adam under exponentially shrinking gradients.
//!
//! With `g_t = |g_1| r^(t-1)` (aligned signs) and zero initial moments the
//! bias-corrected ratio has the closed form `|m_hat_t| / sqrt(v_hat_t) = C k_t`
//! where
//!
//! ```text
//! C   = (1 - b1) sqrt(b2 - r^2) / (sqrt(1 - b2) (b1 - r))
//! k_t = sqrt(1 - b2^t) / (1 - b1^t) * ((b1/r)^t - 1) / sqrt((b2/r^2)^t - 1)
//! ```
//!
//! and `k_t -> k_inf^t` with `k_inf = b1 / sqrt(b2)`. The importance of the
//! first `T` steps is the share `S_T / S_inf` of `sum k_t` they carry.

use serde::Serialize;

use super::moments::powu;
use crate::error::{Error, Result};
use crate::objectives::{ExpDecayParams, SignRule};

/// Raw and bias-corrected moments after `t` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedMoments {
    pub m: f64,
    pub v: f64,
    pub m_hat: f64,
    pub v_hat: f64,
}

/// Closed-form Adam moments for aligned exponentially decaying gradients.
///
/// The geometric sums are evaluated as `(b1^t - r^t) / (b1 - r)` and
/// `(b2^t - r^(2t)) / (b2 - r^2)`, which equal the textbook
/// `r^(t-1) ((b1/r)^t - 1) / (b1/r - 1)` forms but never overflow.
pub fn expdecay_closed_moments(
    p: &ExpDecayParams,
    beta1: f64,
    beta2: f64,
    t: u64,
) -> Result<ClosedMoments> {
    p.validate()?;
    if p.signs != SignRule::Aligned {
        return Err(Error::config(
            "closed-form moments need aligned gradient signs",
        ));
    }
    if t == 0 {
        return Err(Error::config("closed-form moments are defined for t >= 1"));
    }
    let r = p.r;
    if r == beta1 {
        return Err(Error::DegenerateRatio(format!("r equals beta1 ({r})")));
    }
    if r * r == beta2 {
        return Err(Error::DegenerateRatio(format!(
            "r^2 equals beta2 ({beta2})"
        )));
    }
    let g1 = p.g1_mag;
    let m = (1.0 - beta1) * g1 * (powu(beta1, t) - powu(r, t)) / (beta1 - r);
    let v = (1.0 - beta2) * g1 * g1 * (powu(beta2, t) - powu(r * r, t)) / (beta2 - r * r);
    Ok(ClosedMoments {
        m,
        v,
        m_hat: m / (1.0 - powu(beta1, t)),
        v_hat: v / (1.0 - powu(beta2, t)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceReport {
    pub beta1: f64,
    pub beta2: f64,
    pub r: f64,
    pub k_inf: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// Lower bound `(1 - k_inf) / (C k_inf)` on the first step's share of the total motion.
    pub sigma_first: f64,
    /// `k_t` for `t = 1..=T_max`.
    #[serde(skip)]
    pub k_t: Vec<f64>,
    /// `S_T / S_inf` from the `k_t` partial sums.
    #[serde(skip)]
    pub exact_ratio: Vec<f64>,
    /// `1 - k_inf^T`.
    #[serde(skip)]
    pub approx_ratio: Vec<f64>,
    /// `1 - r^T`, the same share for plain SGD.
    #[serde(skip)]
    pub sgd_ratio: Vec<f64>,
    pub s_inf: f64,
    /// Number of `k_t` terms summed for `s_inf`.
    pub terms: usize,
}

impl ImportanceReport {
    pub fn t_max(&self) -> usize {
        self.k_t.len()
    }
}

const TAIL_REL_TOL: f64 = 1e-12;
const MAX_TERMS: usize = 1_000_000;

fn k_term(beta1: f64, beta2: f64, r: f64, k_inf: f64, t: u64) -> f64 {
    let bias = (1.0 - powu(beta2, t)).sqrt() / (1.0 - powu(beta1, t));
    let num = 1.0 - powu(r / beta1, t);
    let den = (1.0 - powu(r * r / beta2, t)).sqrt();
    bias * powu(k_inf, t) * num / den
}

/// Closed-form constants plus the `k_t`, exact, approximate and SGD importance series.
pub fn importance_report(beta1: f64, beta2: f64, r: f64, t_max: usize) -> Result<ImportanceReport> {
    if !(0.0 < r && r < beta1 && beta1 < beta2.sqrt() && beta2 < 1.0) {
        return Err(Error::config(format!(
            "need 0 < r < beta1 < sqrt(beta2) < 1, got r={r}, beta1={beta1}, beta2={beta2}"
        )));
    }
    if t_max == 0 {
        return Err(Error::config("T_max must be >= 1"));
    }
    let k_inf = beta1 / beta2.sqrt();
    let c = (1.0 - beta1) * (beta2 - r * r).sqrt() / ((1.0 - beta2).sqrt() * (beta1 - r));
    let sigma_first = (1.0 - k_inf) / (c * k_inf);

    // k_t <= bound * k_inf^t for all t >= 1, so the tail after n terms is at most
    // bound * k_inf^(n+1) / (1 - k_inf).
    let bound = 1.0 / ((1.0 - beta1) * (1.0 - r * r / beta2).sqrt());
    let mut k_t = Vec::with_capacity(t_max);
    let mut s_inf = 0.0;
    let mut n = 0usize;
    loop {
        n += 1;
        let k = k_term(beta1, beta2, r, k_inf, n as u64);
        if n <= t_max {
            k_t.push(k);
        }
        s_inf += k;
        let tail = bound * powu(k_inf, n as u64 + 1) / (1.0 - k_inf);
        if n >= t_max && tail < TAIL_REL_TOL * s_inf {
            break;
        }
        if n >= MAX_TERMS.max(t_max) {
            break;
        }
    }

    let mut exact_ratio = Vec::with_capacity(t_max);
    let mut partial = 0.0;
    for &k in &k_t {
        partial += k;
        exact_ratio.push(partial / s_inf);
    }
    let approx_ratio = (1..=t_max as u64).map(|t| 1.0 - powu(k_inf, t)).collect();
    let sgd_ratio = (1..=t_max as u64).map(|t| 1.0 - powu(r, t)).collect();

    Ok(ImportanceReport {
        beta1,
        beta2,
        r,
        k_inf,
        c,
        sigma_first,
        k_t,
        exact_ratio,
        approx_ratio,
        sgd_ratio,
        s_inf,
        terms: n,
    })
}
