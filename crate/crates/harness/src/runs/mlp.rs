use v0init_core::analysis::step_stats;
use v0init_core::objectives::{Mlp, MlpOracle, MlpSpec};
use v0init_core::optim::{build_optimizer, InitSources};
use v0init_core::tensor::global_norm;
use v0init_core::{GradientOracle, InitStrategy, OptimizerConfig, Rng, WarmupSchedule};

use super::{check_loss, check_state, TrajectoryTable, BATCH_STREAM, V0_STREAM};
use crate::config::{ExperimentConfig, MlpSection};
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, Artifact, CsvTable, RunOutput};

pub(crate) fn mlp_spec(m: &MlpSection) -> Result<MlpSpec> {
    let spec = MlpSpec {
        input_dim: m.input_dim,
        hidden: m.hidden,
        classes: 2,
        n_train: m.n_train,
        separation: m.separation,
        seed: m.data_seed,
    };
    spec.validate().map_err(HarnessError::from_validation)?;
    Ok(spec)
}

#[derive(Debug, Clone)]
pub struct MlpPlan {
    mlp: Mlp,
    section: MlpSection,
    optimizer: OptimizerConfig,
    init: InitStrategy,
    schedule: WarmupSchedule,
    seed: u64,
}

impl MlpPlan {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let m = cfg.mlp.clone().expect("resolved mlp section");
        let spec = mlp_spec(&m)?;
        if m.batch_size == 0 || m.batch_size > m.n_train {
            return Err(HarnessError::config(format!(
                "batch_size must be in 1..={}, got {}",
                m.n_train, m.batch_size
            )));
        }
        if m.epochs == 0 {
            return Err(HarnessError::config("epochs must be >= 1"));
        }
        if m.hist_steps.contains(&0) {
            return Err(HarnessError::config("histogram steps are 1-based"));
        }
        let init = cfg.strategy_resolved()?;
        if init.needs_samples() && !(2..=m.n_train).contains(&m.data_samples) {
            return Err(HarnessError::config(format!(
                "data_samples must be in 2..={}, got {}",
                m.n_train, m.data_samples
            )));
        }
        let optimizer = cfg.optimizer_resolved();
        Ok(MlpPlan {
            mlp: Mlp::new(spec).map_err(HarnessError::from_validation)?,
            section: m,
            optimizer,
            init,
            schedule: WarmupSchedule::new(cfg.warmup_steps, optimizer.lr),
            seed: cfg.seed,
        })
    }

    pub fn steps(&self) -> u64 {
        (self.section.epochs * self.section.n_train.div_ceil(self.section.batch_size)) as u64
    }

    pub fn execute(&self) -> Result<RunOutput> {
        let data = self.mlp.spec().dataset();
        let mut params = self.mlp.init_params(self.seed);
        let fan_sums = self.mlp.fan_sums();
        let samples = if self.init.needs_samples() {
            let idx: Vec<usize> = (0..self.section.data_samples).collect();
            Some(self.mlp.per_sample_grads(&params, &data, &idx)?)
        } else {
            None
        };
        let mut rng = Rng::new(self.seed, V0_STREAM);
        let mut opt = build_optimizer(
            &self.optimizer,
            &self.init,
            &params,
            InitSources {
                rng: Some(&mut rng),
                sample_grads: samples.as_deref(),
                fan_sums: Some(&fan_sums),
            },
        )?;
        let mut oracle = MlpOracle::new(
            self.mlp.clone(),
            data,
            self.section.batch_size,
            Rng::new(self.seed, BATCH_STREAM),
        )?;

        let initial_loss = check_loss(0, self.mlp.loss(&params, oracle.dataset())?)?;
        let steps = self.steps();
        let mut table = TrajectoryTable::new();
        let mut deltas = Vec::with_capacity(steps as usize);
        let mut lrs = Vec::with_capacity(steps as usize);
        let mut loss = initial_loss;
        for t in 1..=steps {
            let lr_t = self.schedule.lr(t);
            let eval = oracle.evaluate(&params, t)?;
            let delta = opt
                .step(&mut params, &eval.grads, lr_t)
                .map_err(|e| HarnessError::at_step(t, e))?;
            check_state(t, &params, &opt)?;
            loss = check_loss(t, self.mlp.loss(&params, oracle.dataset())?)?;
            table.push(t, loss, global_norm(&params), global_norm(&delta), lr_t);
            deltas.push(delta);
            lrs.push(lr_t);
        }

        let stats = step_stats(&deltas, &lrs, &self.section.hist_steps)?;
        let mut step_table = CsvTable::new(&["step", "norm", "sign_frac"]);
        for (i, (norm, frac)) in stats.norms.iter().zip(&stats.sign_fractions).enumerate() {
            step_table.row(&[(i + 1).to_string(), fmt_f64(*norm), fmt_f64(*frac)]);
        }
        let mut hist_table = CsvTable::new(&["step", "bin_lo", "bin_hi", "count"]);
        for h in &stats.histograms {
            for (lo, hi, count) in h.rows() {
                hist_table.row(&[
                    h.step.to_string(),
                    fmt_f64(lo),
                    fmt_f64(hi),
                    count.to_string(),
                ]);
            }
        }

        let mut out = RunOutput::default();
        table.finish(&mut out);
        out.artifacts
            .push(step_table.into_artifact("step_stats.csv"));
        out.artifacts
            .push(hist_table.into_artifact("histogram.csv"));
        out.artifacts.push(Artifact::json("params.json", &params));
        if self.section.dump_dataset {
            let d = oracle.dataset();
            let mut header: Vec<String> = (0..d.input_dim()).map(|j| format!("x{j}")).collect();
            header.push("label".into());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut table = CsvTable::new(&header);
            for i in 0..d.len() {
                let mut row: Vec<String> = d.row(i).iter().map(|&x| fmt_f64(x)).collect();
                row.push(d.label(i).to_string());
                table.row(&row);
            }
            out.artifacts.push(table.into_artifact("dataset.csv"));
        }
        out.put("steps", steps);
        out.put("initial_loss", initial_loss);
        out.put("final_loss", loss);
        out.put("step1_norm", stats.norms[0]);
        out.put("step1_sign_frac", stats.sign_fractions[0]);
        Ok(out)
    }
}
