use v0init_core::analysis::{importance_report, ImportanceReport};
use v0init_core::objectives::{expdecay_grad, ExpDecayParams, SignRule};
use v0init_core::optim::{adam_step, ParamState};
use v0init_core::{OptimizerConfig, Tensor};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, Artifact, CsvTable, RunOutput};

const MAX_T: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ExpdecayPlan {
    grads: ExpDecayParams,
    report: ImportanceReport,
    adam: OptimizerConfig,
}

impl ExpdecayPlan {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let e = cfg.expdecay.expect("resolved expdecay section");
        if e.t_max == 0 || e.t_max > MAX_T {
            return Err(HarnessError::config(format!(
                "t_max must be in 1..={MAX_T}"
            )));
        }
        let grads = ExpDecayParams::new(e.g1, e.r, SignRule::Aligned)
            .map_err(HarnessError::from_validation)?;
        let report = importance_report(e.beta1, e.beta2, e.r, e.t_max)
            .map_err(HarnessError::from_validation)?;
        // The measured ratio does not depend on the learning rate, so the simulation uses 1.
        let adam = OptimizerConfig::adam(1.0)
            .with_betas(e.beta1, e.beta2)
            .with_eps(e.eps);
        adam.validate().map_err(HarnessError::from_validation)?;
        Ok(ExpdecayPlan {
            grads,
            report,
            adam,
        })
    }

    pub fn report(&self) -> &ImportanceReport {
        &self.report
    }

    pub fn execute(&self) -> Result<RunOutput> {
        let rep = &self.report;
        let mut importance =
            CsvTable::new(&["T", "k_t", "exact_ratio", "approx_ratio", "sgd_ratio"]);
        for i in 0..rep.t_max() {
            importance.row(&[
                (i + 1).to_string(),
                fmt_f64(rep.k_t[i]),
                fmt_f64(rep.exact_ratio[i]),
                fmt_f64(rep.approx_ratio[i]),
                fmt_f64(rep.sgd_ratio[i]),
            ]);
        }

        let (b1, b2) = (self.adam.beta1, self.adam.beta2);
        let mut theta = Tensor::scalar(0.0).named("theta");
        let mut state = ParamState::new(&theta, Tensor::scalar(0.0))?;
        let mut sim = CsvTable::new(&[
            "t", "grad", "m_hat", "v_hat", "step_abs", "bound", "rel_gap",
        ]);
        let mut max_gap: f64 = 0.0;
        for (i, &k) in rep.k_t.iter().enumerate() {
            let t = i as u64 + 1;
            let g = Tensor::scalar(expdecay_grad(t, &self.grads));
            let delta = adam_step(&mut state, &mut theta, &g, &self.adam, 1.0)
                .map_err(|e| HarnessError::at_step(t, e))?;
            let m_hat = state.m.data()[0] / (1.0 - b1.powi(t as i32));
            let v_hat = state.v.data()[0] / (1.0 - b2.powi(t as i32));
            let step_abs = delta.data()[0].abs();
            if !step_abs.is_finite() {
                return Err(HarnessError::Numeric {
                    step: t,
                    detail: format!("step is {step_abs}"),
                });
            }
            let bound = rep.c * k;
            let gap = (bound - step_abs) / bound;
            max_gap = max_gap.max(gap.abs());
            sim.row(&[
                t.to_string(),
                fmt_f64(g.data()[0]),
                fmt_f64(m_hat),
                fmt_f64(v_hat),
                fmt_f64(step_abs),
                fmt_f64(bound),
                fmt_f64(gap),
            ]);
        }

        let mut out = RunOutput::default();
        out.artifacts
            .push(importance.into_artifact("importance.csv"));
        out.artifacts.push(Artifact::json("importance.json", rep));
        out.artifacts.push(sim.into_artifact("expdecay_sim.csv"));
        out.put("k_inf", rep.k_inf);
        out.put("C", rep.c);
        out.put("sigma_first", rep.sigma_first);
        out.put("s_inf", rep.s_inf);
        out.put("exact_ratio_1", rep.exact_ratio[0]);
        if rep.t_max() >= 5 {
            out.put("exact_ratio_5", rep.exact_ratio[4]);
        }
        out.put("max_abs_rel_gap", max_gap);
        Ok(out)
    }
}
