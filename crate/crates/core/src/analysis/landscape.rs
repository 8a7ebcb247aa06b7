//! Loss along two random, norm-matched directions around a point.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    /// Offsets along each direction, shared by both axes.
    pub coords: Vec<f64>,
    /// `values[i * R + j]` is the loss at `center + coords[i] d1 + coords[j] d2`.
    pub values: Vec<f64>,
}

impl LandscapeGrid {
    pub fn resolution(&self) -> usize {
        self.coords.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.coords.len() + j]
    }

    /// `(a, b, loss)` rows in grid order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let r = self.coords.len();
        (0..r * r).map(move |k| (self.coords[k / r], self.coords[k % r], self.values[k]))
    }

    /// Index of the smallest finite value.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let r = self.coords.len();
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| (k / r, k % r))
    }
}

/// A standard-normal direction with each tensor slice rescaled to the norm of
/// the matching parameter tensor. Zero-norm tensors get a zero slice.
pub fn normalized_direction(center: &[Tensor], rng: &mut Rng) -> Vec<Tensor> {
    center
        .iter()
        .map(|p| {
            let raw = p.map(|_| rng.standard_normal());
            let norm = raw.l2_norm();
            let target = p.l2_norm();
            if norm > 0.0 && target > 0.0 {
                raw.scale(target / norm)
            } else {
                Tensor::zeros_like(p)
            }
        })
        .collect()
}

/// Evaluates `loss` on an `R x R` grid over `[-w, w]^2` spanned by two random directions.
///
/// For odd `R` the middle cell is exactly the center.
pub fn landscape_scan<F>(
    mut loss: F,
    center: &[Tensor],
    rng: &mut Rng,
    half_width: f64,
    resolution: usize,
) -> Result<LandscapeGrid>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    if resolution < 2 {
        return Err(Error::config(format!(
            "resolution must be >= 2, got {resolution}"
        )));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::config(format!(
            "half width must be > 0, got {half_width}"
        )));
    }
    let d1 = normalized_direction(center, rng);
    let d2 = normalized_direction(center, rng);
    let span = (resolution - 1) as f64;
    let coords: Vec<f64> = (0..resolution)
        .map(|i| half_width * (2.0 * i as f64 - span) / span)
        .collect();

    let mut values = Vec::with_capacity(resolution * resolution);
    let mut point: Vec<Tensor> = center.to_vec();
    for &a in &coords {
        for &b in &coords {
            for ((p, c), (u, w)) in point.iter_mut().zip(center).zip(d1.iter().zip(&d2)) {
                for (((x, &x0), &du), &dw) in p
                    .data_mut()
                    .iter_mut()
                    .zip(c.data())
                    .zip(u.data())
                    .zip(w.data())
                {
                    *x = x0 + a * du + b * dw;
                }
            }
            values.push(loss(&point)?);
        }
    }
    Ok(LandscapeGrid { coords, values })
}
