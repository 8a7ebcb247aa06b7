use v0init_core::objectives::{SaddleOracle, SaddleParams};
use v0init_core::optim::{build_optimizer, InitSources};
use v0init_core::{GradientOracle, InitStrategy, OptimizerConfig, Rng, Tensor, WarmupSchedule};

use super::{check_loss, check_state, TrajectoryTable, V0_STREAM};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::RunOutput;

#[derive(Debug, Clone)]
pub struct SaddlePlan {
    objective: SaddleParams,
    x0: f64,
    optimizer: OptimizerConfig,
    init: InitStrategy,
    schedule: WarmupSchedule,
    steps: u64,
    seed: u64,
}

impl SaddlePlan {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let s = cfg.saddle.expect("resolved saddle section");
        let objective = SaddleParams::with_rule(s.n, s.b, s.s, s.switch)
            .map_err(HarnessError::from_validation)?;
        if !s.x0.is_finite() {
            return Err(HarnessError::config("saddle x0 must be finite"));
        }
        let optimizer = cfg.optimizer_resolved();
        Ok(SaddlePlan {
            objective,
            x0: s.x0,
            optimizer,
            init: cfg.strategy_resolved()?,
            schedule: WarmupSchedule::new(cfg.warmup_steps, optimizer.lr),
            steps: cfg.steps_resolved(),
            seed: cfg.seed,
        })
    }

    pub fn execute(&self) -> Result<RunOutput> {
        let mut oracle = SaddleOracle {
            params: self.objective,
        };
        let mut theta = vec![Tensor::scalar(self.x0).named("x")];
        // A deterministic oracle has no gradient variance: data-driven v0 is sigma * g(x0)^2.
        let samples = self.init.needs_samples().then(|| {
            let g = Tensor::scalar(self.objective.grad(self.x0)).named("x");
            vec![vec![g.clone()], vec![g]]
        });
        let mut rng = Rng::new(self.seed, V0_STREAM);
        let mut opt = build_optimizer(
            &self.optimizer,
            &self.init,
            &theta,
            InitSources {
                rng: Some(&mut rng),
                sample_grads: samples.as_deref(),
                fan_sums: None,
            },
        )?;

        let mut table = TrajectoryTable::new();
        for t in 1..=self.steps {
            let lr_t = self.schedule.lr(t);
            let eval = oracle.evaluate(&theta, t)?;
            let delta = opt
                .step(&mut theta, &eval.grads, lr_t)
                .map_err(|e| HarnessError::at_step(t, e))?;
            check_state(t, &theta, &opt)?;
            let x = theta[0].data()[0];
            let loss = check_loss(t, self.objective.value(x))?;
            table.push(t, loss, x, delta[0].l2_norm(), lr_t);
        }

        let mut out = RunOutput::default();
        table.finish(&mut out);
        let x_final = theta[0].data()[0];
        out.put("initial_param", self.x0);
        out.put("final_param", x_final);
        out.put("initial_loss", self.objective.value(self.x0));
        out.put("final_loss", self.objective.value(x_final));
        out.put("switch_point", self.objective.switch_point());
        out.put("steps", self.steps);
        Ok(out)
    }
}
