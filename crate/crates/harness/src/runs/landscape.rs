use std::fs;

use v0init_core::analysis::landscape_scan;
use v0init_core::objectives::{quadratic_value_grad, Mlp};
use v0init_core::{Rng, Tensor};

use super::mlp::mlp_spec;
use super::{finite_all, LANDSCAPE_STREAM};
use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, CsvTable, RunOutput};

#[derive(Debug, Clone)]
enum Target {
    Mlp(Mlp),
    Quadratic { a: Tensor, x_star: Tensor },
}

#[derive(Debug, Clone)]
pub struct LandscapePlan {
    target: Target,
    center: Vec<Tensor>,
    half_width: f64,
    resolution: usize,
    seed: u64,
}

fn vector(name: &str, xs: &[f64]) -> Result<Tensor> {
    if xs.is_empty() || !finite_all(xs) {
        return Err(HarnessError::config(format!(
            "quadratic `{name}` must be a nonempty list of finite numbers"
        )));
    }
    Ok(Tensor::from_vec(&[xs.len()], xs.to_vec())
        .expect("nonempty")
        .named(name))
}

/// Reads a `params.json` snapshot and checks it against the network layout.
fn load_snapshot(path: &std::path::Path, mlp: &Mlp) -> Result<Vec<Tensor>> {
    let bad = |msg: String| HarnessError::config(format!("snapshot {}: {msg}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let params: Vec<Tensor> = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let layout = mlp.init_params(0);
    if params.len() != layout.len() {
        return Err(bad(format!(
            "expected {} tensors, found {}",
            layout.len(),
            params.len()
        )));
    }
    for (p, want) in params.iter().zip(&layout) {
        if p.shape() != want.shape() || p.len() != p.shape().len() {
            return Err(bad(format!(
                "tensor `{}` does not match shape {:?}",
                p.name(),
                want.shape().dims()
            )));
        }
        if !p.is_finite() {
            return Err(bad(format!("tensor `{}` has non-finite entries", p.name())));
        }
    }
    Ok(params)
}

impl LandscapePlan {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let l = cfg.landscape.clone().expect("resolved landscape section");
        if l.resolution < 2 {
            return Err(HarnessError::config("resolution must be >= 2"));
        }
        if !(l.half_width.is_finite() && l.half_width > 0.0) {
            return Err(HarnessError::config("half_width must be > 0"));
        }
        let (target, center) = match cfg.experiment {
            Experiment::Quadratic => {
                if l.snapshot.is_some() {
                    return Err(HarnessError::config(
                        "snapshots apply to the mlp landscape only",
                    ));
                }
                let q = cfg.quadratic.clone().expect("resolved quadratic section");
                let a = vector("a", &q.a)?;
                let x_star = vector("x_star", &q.x_star)?;
                let x0 = vector("x0", q.x0.as_deref().unwrap_or(&q.x_star))?;
                if q.a.iter().any(|&c| c <= 0.0) {
                    return Err(HarnessError::config("quadratic curvature must be > 0"));
                }
                if a.len() != x_star.len() || a.len() != x0.len() {
                    return Err(HarnessError::config("quadratic vectors differ in length"));
                }
                (Target::Quadratic { a, x_star }, vec![x0])
            }
            _ => {
                let spec = mlp_spec(cfg.mlp.as_ref().expect("resolved mlp section"))?;
                let mlp = Mlp::new(spec).map_err(HarnessError::from_validation)?;
                let center = match &l.snapshot {
                    Some(path) => load_snapshot(path, &mlp)?,
                    None => mlp.init_params(cfg.seed),
                };
                (Target::Mlp(mlp), center)
            }
        };
        Ok(LandscapePlan {
            target,
            center,
            half_width: l.half_width,
            resolution: l.resolution,
            seed: cfg.seed,
        })
    }

    pub fn execute(&self) -> Result<RunOutput> {
        let mut rng = Rng::new(self.seed, LANDSCAPE_STREAM);
        let grid = match &self.target {
            Target::Mlp(mlp) => {
                let data = mlp.spec().dataset();
                landscape_scan(
                    |p| mlp.loss(p, &data),
                    &self.center,
                    &mut rng,
                    self.half_width,
                    self.resolution,
                )?
            }
            Target::Quadratic { a, x_star } => landscape_scan(
                |p| quadratic_value_grad(&p[0], a, x_star).map(|(f, _)| f),
                &self.center,
                &mut rng,
                self.half_width,
                self.resolution,
            )?,
        };

        let mut table = CsvTable::new(&["a", "b", "loss"]);
        for (a, b, loss) in grid.rows() {
            if !loss.is_finite() {
                return Err(HarnessError::NonFiniteCell { a, b, value: loss });
            }
            table.row(&[fmt_f64(a), fmt_f64(b), fmt_f64(loss)]);
        }
        let mut out = RunOutput::default();
        out.artifacts.push(table.into_artifact("landscape.csv"));
        let (i, j) = grid.argmin().expect("grid values are finite");
        out.put("resolution", self.resolution);
        out.put("min_loss", grid.at(i, j));
        out.put("argmin_a", grid.coords[i]);
        out.put("argmin_b", grid.coords[j]);
        if self.resolution % 2 == 1 {
            let c = self.resolution / 2;
            out.put("center_loss", grid.at(c, c));
        }
        Ok(out)
    }
}
