//! One planner and executor per experiment.
//!
//! Planning validates everything a run will read; execution builds the
//! outputs in memory. Nothing is written here.

mod expdecay;
mod landscape;
mod mlp;
mod ngos;
mod saddle;

pub use expdecay::ExpdecayPlan;
pub use landscape::LandscapePlan;
pub use mlp::MlpPlan;
pub use ngos::NgosPlan;
pub use saddle::SaddlePlan;

use v0init_core::{OptimizerState, Tensor};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, CsvTable, RunOutput};

// Rng streams, so each consumer of a run's seed draws independent numbers.
pub(crate) const V0_STREAM: u64 = 1;
pub(crate) const BATCH_STREAM: u64 = 2;
pub(crate) const LANDSCAPE_STREAM: u64 = 3;
pub(crate) const NGOS_INIT_STREAM: u64 = 4;
pub(crate) const NGOS_SHARD_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone)]
pub enum Plan {
    Saddle(SaddlePlan),
    Ngos(NgosPlan),
    Expdecay(ExpdecayPlan),
    Mlp(MlpPlan),
    Landscape(LandscapePlan),
}

impl Plan {
    /// Validates a resolved config.
    pub fn new(cfg: &ExperimentConfig) -> Result<Plan> {
        Ok(match cfg.experiment {
            Experiment::Saddle => Plan::Saddle(SaddlePlan::new(cfg)?),
            Experiment::Ngos => Plan::Ngos(NgosPlan::new(cfg)?),
            Experiment::ExpdecayImportance => Plan::Expdecay(ExpdecayPlan::new(cfg)?),
            Experiment::Mlp => Plan::Mlp(MlpPlan::new(cfg)?),
            Experiment::Landscape | Experiment::Quadratic => {
                Plan::Landscape(LandscapePlan::new(cfg)?)
            }
        })
    }

    pub fn execute(&self) -> Result<RunOutput> {
        match self {
            Plan::Saddle(p) => p.execute(),
            Plan::Ngos(p) => p.execute(),
            Plan::Expdecay(p) => p.execute(),
            Plan::Mlp(p) => p.execute(),
            Plan::Landscape(p) => p.execute(),
        }
    }
}

/// Aborts on any non-finite parameter or moment.
pub(crate) fn check_state(step: u64, params: &[Tensor], opt: &OptimizerState) -> Result<()> {
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(HarnessError::Numeric {
            step,
            detail: format!("parameter `{}` is not finite", p.name()),
        });
    }
    if !opt.is_finite() {
        return Err(HarnessError::Numeric {
            step,
            detail: "optimizer moments are not finite".into(),
        });
    }
    Ok(())
}

pub(crate) fn check_loss(step: u64, loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(HarnessError::Numeric {
            step,
            detail: format!("loss is {loss}"),
        })
    }
}

/// `t,loss,param_summary,step_norm,lr`, one row per step after it is applied.
pub(crate) struct TrajectoryTable(CsvTable);

impl TrajectoryTable {
    pub(crate) fn new() -> Self {
        TrajectoryTable(CsvTable::new(&[
            "t",
            "loss",
            "param_summary",
            "step_norm",
            "lr",
        ]))
    }

    pub(crate) fn push(&mut self, t: u64, loss: f64, summary: f64, step_norm: f64, lr: f64) {
        self.0.row(&[
            t.to_string(),
            fmt_f64(loss),
            fmt_f64(summary),
            fmt_f64(step_norm),
            fmt_f64(lr),
        ]);
    }

    pub(crate) fn finish(self, out: &mut RunOutput) {
        out.artifacts.push(self.0.into_artifact("trajectory.csv"));
    }
}

pub(crate) fn finite_all(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}
