//! Per-step update statistics.

use crate::error::{Error, Result};
use crate::tensor::{global_norm, Tensor};

pub const HISTOGRAM_BINS: usize = 60;
pub const HISTOGRAM_FLOOR: f64 = 1e-12;

/// `HISTOGRAM_BINS + 1` log-spaced edges from `1e-12` to `10 * alpha`.
pub fn histogram_edges(alpha: f64) -> Result<Vec<f64>> {
    let top = 10.0 * alpha;
    if !(top > HISTOGRAM_FLOOR && top.is_finite()) {
        return Err(Error::Domain(format!(
            "histogram range needs 10*alpha > 1e-12, got alpha={alpha}"
        )));
    }
    let ratio = (top / HISTOGRAM_FLOOR).ln();
    Ok((0..=HISTOGRAM_BINS)
        .map(|i| {
            if i == HISTOGRAM_BINS {
                top
            } else {
                HISTOGRAM_FLOOR * (ratio * i as f64 / HISTOGRAM_BINS as f64).exp()
            }
        })
        .collect())
}

/// Counts of `|dtheta|` per log bin; `counts[0]` is the underflow bin
/// (`< 1e-12`, zeros included) and the last entry the overflow bin (`>= 10 alpha`).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub step: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_deltas(step: usize, deltas: &[Tensor], alpha: f64) -> Result<Self> {
        let edges = histogram_edges(alpha)?;
        let mut counts = vec![0u64; HISTOGRAM_BINS + 2];
        for x in deltas.iter().flat_map(|t| t.data()).map(|x| x.abs()) {
            let slot = if x < edges[0] {
                0
            } else if x >= edges[HISTOGRAM_BINS] {
                HISTOGRAM_BINS + 1
            } else {
                // first edge strictly greater than x
                edges.partition_point(|&e| e <= x)
            };
            counts[slot] += 1;
        }
        Ok(Histogram {
            step,
            edges,
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(lo, hi, count)` rows including the underflow and overflow bins.
    pub fn rows(&self) -> Vec<(f64, f64, u64)> {
        let n = self.edges.len();
        let mut rows = Vec::with_capacity(n + 1);
        rows.push((0.0, self.edges[0], self.counts[0]));
        for i in 0..n - 1 {
            rows.push((self.edges[i], self.edges[i + 1], self.counts[i + 1]));
        }
        rows.push((self.edges[n - 1], f64::INFINITY, self.counts[n]));
        rows
    }
}

/// Share of coordinates whose update magnitude lies in `[0.999 alpha, alpha]`.
pub fn sign_descent_fraction(deltas: &[Tensor], alpha: f64) -> f64 {
    let total: usize = deltas.iter().map(Tensor::len).sum();
    if total == 0 {
        return 0.0;
    }
    let lo = 0.999 * alpha;
    let hits = deltas
        .iter()
        .flat_map(|t| t.data())
        .filter(|x| {
            let a = x.abs();
            a >= lo && a <= alpha
        })
        .count();
    hits as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepStats {
    /// `||dtheta_t||_2` for `t = 1..`.
    pub norms: Vec<f64>,
    pub sign_fractions: Vec<f64>,
    pub histograms: Vec<Histogram>,
}

/// Statistics over a trajectory of per-step updates.
///
/// `lrs[t-1]` is the learning rate used at step `t`; histograms are taken at
/// the 1-based steps in `hist_steps` that exist in the trajectory.
pub fn step_stats(
    trajectory: &[Vec<Tensor>],
    lrs: &[f64],
    hist_steps: &[usize],
) -> Result<StepStats> {
    if trajectory.is_empty() {
        return Err(Error::config("empty trajectory"));
    }
    if lrs.len() != trajectory.len() {
        return Err(Error::config("one learning rate per step is required"));
    }
    let norms = trajectory.iter().map(|d| global_norm(d)).collect();
    let sign_fractions = trajectory
        .iter()
        .zip(lrs)
        .map(|(d, &lr)| sign_descent_fraction(d, lr))
        .collect();
    let histograms = hist_steps
        .iter()
        .filter(|&&s| s >= 1 && s <= trajectory.len())
        .map(|&s| Histogram::from_deltas(s, &trajectory[s - 1], lrs[s - 1]))
        .collect::<Result<_>>()?;
    Ok(StepStats {
        norms,
        sign_fractions,
        histograms,
    })
}
