//! Monte Carlo moment traces on the noisy linear loss.
//!
//! Trials are cut into fixed-size shards, each with its own Rng stream, and
//! the shard statistics are merged in shard order. The output therefore does
//! not depend on how many threads rayon uses.

use rayon::prelude::*;

use v0init_core::analysis::{expected_moments, rmsprop_expected_step};
use v0init_core::init::{data_driven_v0, SCALAR_FAN_SUM};
use v0init_core::objectives::{ngos_sample, NgosParams};
use v0init_core::optim::{adam_step, rmsprop_step, ParamState};
use v0init_core::{InitStrategy, OptimizerConfig, Rng, Tensor, Variant, WarmupSchedule};

use super::{finite_all, NGOS_INIT_STREAM, NGOS_SHARD_STREAM_BASE};
use crate::config::{ExperimentConfig, V0Kind};
use crate::error::{HarnessError, Result};
use crate::output::{fmt_f64, CsvTable, RunOutput};

const SHARD_UNITS: u64 = 256;
const FEW_TRIALS: u64 = 100;

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    fn var(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    fn se(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.var() / self.n as f64).sqrt()
        }
    }
}

/// Per `(t, coord)` accumulators, indexed `(t - 1) * dim + coord`.
#[derive(Debug, Clone)]
struct Traces {
    m: Vec<Welford>,
    v: Vec<Welford>,
    step: Vec<Welford>,
    /// Over sampling units (antithetic pair means), for standard errors.
    v_unit: Vec<Welford>,
    step_unit: Vec<Welford>,
}

impl Traces {
    fn new(len: usize) -> Self {
        let z = vec![Welford::default(); len];
        Traces {
            m: z.clone(),
            v: z.clone(),
            step: z.clone(),
            v_unit: z.clone(),
            step_unit: z,
        }
    }

    fn merge(&mut self, other: &Traces) {
        for (a, b) in [
            (&mut self.m, &other.m),
            (&mut self.v, &other.v),
            (&mut self.step, &other.step),
            (&mut self.v_unit, &other.v_unit),
            (&mut self.step_unit, &other.step_unit),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
    }
}

type StepFn =
    fn(&mut ParamState, &mut Tensor, &Tensor, &OptimizerConfig, f64) -> v0init_core::Result<Tensor>;

#[derive(Debug, Clone)]
pub struct NgosPlan {
    oracle: NgosParams,
    optimizer: OptimizerConfig,
    init: InitStrategy,
    schedule: WarmupSchedule,
    steps: u64,
    trials: u64,
    antithetic: bool,
    data_samples: usize,
    seed: u64,
}

impl NgosPlan {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let n = cfg.ngos.clone().expect("resolved ngos section");
        if n.gbar.is_empty() || !finite_all(&n.gbar) {
            return Err(HarnessError::config(
                "gbar must be a nonempty list of finite numbers",
            ));
        }
        let gbar = Tensor::from_vec(&[n.gbar.len()], n.gbar.clone())
            .expect("nonempty")
            .named("theta");
        let oracle = NgosParams::new(gbar, n.sigma_n).map_err(HarnessError::from_validation)?;
        if n.gbar.iter().any(|g| g * g + n.sigma_n * n.sigma_n == 0.0) {
            return Err(HarnessError::config(
                "every coordinate needs gbar^2 + sigma_n^2 > 0",
            ));
        }
        if n.trials < 2 {
            return Err(HarnessError::config("trials must be >= 2"));
        }
        if n.antithetic && !n.trials.is_multiple_of(2) {
            return Err(HarnessError::config(
                "antithetic sampling needs an even trial count",
            ));
        }
        let optimizer = cfg.optimizer_resolved();
        if !matches!(optimizer.variant, Variant::Adam | Variant::RmsProp) {
            return Err(HarnessError::config(format!(
                "the ngos experiment simulates adam or rmsprop, not {}",
                optimizer.variant.name()
            )));
        }
        let init = cfg.strategy_resolved()?;
        if cfg.v0.map(|v| v.kind) == Some(V0Kind::Data) && n.data_samples < 2 {
            return Err(HarnessError::config("data_samples must be >= 2"));
        }
        Ok(NgosPlan {
            oracle,
            optimizer,
            init,
            schedule: WarmupSchedule::new(cfg.warmup_steps, optimizer.lr),
            steps: cfg.steps_resolved(),
            trials: n.trials,
            antithetic: n.antithetic,
            data_samples: n.data_samples,
            seed: cfg.seed,
        })
    }

    fn dim(&self) -> usize {
        self.oracle.gbar.len()
    }

    fn step_fn(&self) -> StepFn {
        match self.optimizer.variant {
            Variant::RmsProp => rmsprop_step,
            _ => adam_step,
        }
    }

    /// Data-driven `v0` is estimated once per run from its own oracle draws.
    fn shared_v0(&self) -> Result<Option<Tensor>> {
        match self.init {
            InitStrategy::DataDriven { sigma } => {
                let mut rng = Rng::new(self.seed, NGOS_INIT_STREAM);
                let samples: Vec<Tensor> = (0..self.data_samples)
                    .map(|_| ngos_sample(&self.oracle, &mut rng))
                    .collect();
                Ok(Some(data_driven_v0(&samples, sigma)?))
            }
            InitStrategy::Random { .. } => Ok(None),
            _ => Ok(Some(self.init.initial_v(
                &self.oracle.gbar,
                SCALAR_FAN_SUM,
                None,
                None,
            )?)),
        }
    }

    /// Expected `v0` per coordinate, for the closed-form columns.
    fn expected_v0(&self, shared: Option<&Tensor>) -> Vec<f64> {
        match (self.init, shared) {
            (InitStrategy::Random { sigma }, _) => vec![sigma / SCALAR_FAN_SUM as f64; self.dim()],
            (_, Some(v0)) => v0.data().to_vec(),
            (_, None) => vec![0.0; self.dim()],
        }
    }

    fn run_shard(&self, shard: u64, units: u64, shared: Option<&Tensor>) -> Result<Traces> {
        let d = self.dim();
        let copies = if self.antithetic { 2 } else { 1 };
        let sigma = self.oracle.sigma;
        let gbar = self.oracle.gbar.data();
        let step_fn = self.step_fn();
        let mut rng = Rng::new(self.seed, NGOS_SHARD_STREAM_BASE + shard);
        let mut traces = Traces::new(self.steps as usize * d);
        let zero = Tensor::zeros_like(&self.oracle.gbar);
        let mut z = vec![0.0; d];
        let mut unit_v = vec![0.0; d];
        let mut unit_step = vec![0.0; d];

        for _ in 0..units {
            let v0 = match shared {
                Some(v0) => v0.clone(),
                None => self
                    .init
                    .initial_v(&zero, SCALAR_FAN_SUM, Some(&mut rng), None)?,
            };
            let mut states = vec![ParamState::new(&zero, v0)?; copies];
            let mut thetas = vec![zero.clone(); copies];
            for t in 1..=self.steps {
                let lr_t = self.schedule.lr(t);
                z.iter_mut().for_each(|x| *x = rng.standard_normal());
                unit_v.fill(0.0);
                unit_step.fill(0.0);
                for (k, (state, theta)) in states.iter_mut().zip(thetas.iter_mut()).enumerate() {
                    let sign = if k == 0 { 1.0 } else { -1.0 };
                    let g = Tensor::with_shape(
                        zero.shape(),
                        gbar.iter()
                            .zip(&z)
                            .map(|(&m, &n)| m + sign * sigma * n)
                            .collect(),
                    )?;
                    let delta = step_fn(state, theta, &g, &self.optimizer, lr_t)
                        .map_err(|e| HarnessError::at_step(t, e))?;
                    if !(delta.is_finite() && state.is_finite()) {
                        return Err(HarnessError::Numeric {
                            step: t,
                            detail: "simulated trajectory is not finite".into(),
                        });
                    }
                    let base = (t as usize - 1) * d;
                    for c in 0..d {
                        let (m, v, s) = (state.m.data()[c], state.v.data()[c], delta.data()[c]);
                        traces.m[base + c].push(m);
                        traces.v[base + c].push(v);
                        traces.step[base + c].push(s);
                        unit_v[c] += v / copies as f64;
                        unit_step[c] += s / copies as f64;
                    }
                }
                let base = (t as usize - 1) * d;
                for c in 0..d {
                    traces.v_unit[base + c].push(unit_v[c]);
                    traces.step_unit[base + c].push(unit_step[c]);
                }
            }
        }
        Ok(traces)
    }

    pub fn execute(&self) -> Result<RunOutput> {
        let d = self.dim();
        let shared = self.shared_v0()?;
        let units = if self.antithetic {
            self.trials / 2
        } else {
            self.trials
        };
        let shards = units.div_ceil(SHARD_UNITS);
        let results: Vec<Result<Traces>> = (0..shards)
            .into_par_iter()
            .map(|k| {
                let n = SHARD_UNITS.min(units - k * SHARD_UNITS);
                self.run_shard(k, n, shared.as_ref())
            })
            .collect();
        let mut traces = Traces::new(self.steps as usize * d);
        for r in results {
            traces.merge(&r?);
        }

        let v0e = self.expected_v0(shared.as_ref());
        let cfg = &self.optimizer;
        let sigma = self.oracle.sigma;
        let mut table = CsvTable::new(&[
            "t",
            "coord",
            "m_mean",
            "m_expected",
            "v_mean",
            "v_var",
            "v_se",
            "v_expected",
            "step_mean",
            "step_var",
            "step_se",
            "step_expected",
        ]);
        for t in 1..=self.steps {
            let lr_t = self.schedule.lr(t);
            for (c, &v0c) in v0e.iter().enumerate() {
                let i = (t as usize - 1) * d + c;
                let g = self.oracle.gbar.data()[c];
                let (em, ev) = expected_moments(g, sigma, 0.0, v0c, cfg.beta1, cfg.beta2, t);
                let (m_expected, step_expected) = match cfg.variant {
                    // RMSprop keeps no first moment.
                    Variant::RmsProp => (
                        0.0,
                        rmsprop_expected_step(g, sigma, v0c, cfg.beta2, t, lr_t)?,
                    ),
                    _ => {
                        let m_hat = em / (1.0 - cfg.beta1.powi(t as i32));
                        let v_hat = ev / (1.0 - cfg.beta2.powi(t as i32));
                        (em, -lr_t * m_hat / (v_hat.sqrt() + cfg.eps))
                    }
                };
                table.row(&[
                    t.to_string(),
                    c.to_string(),
                    fmt_f64(traces.m[i].mean),
                    fmt_f64(m_expected),
                    fmt_f64(traces.v[i].mean),
                    fmt_f64(traces.v[i].var()),
                    fmt_f64(traces.v_unit[i].se()),
                    fmt_f64(ev),
                    fmt_f64(traces.step[i].mean),
                    fmt_f64(traces.step[i].var()),
                    fmt_f64(traces.step_unit[i].se()),
                    fmt_f64(step_expected),
                ]);
            }
        }

        let mut out = RunOutput::default();
        out.artifacts.push(table.into_artifact("moments.csv"));
        out.put("trials", self.trials);
        out.put("sampling_units", units);
        out.put("shards", shards);
        out.put("steps", self.steps);
        if self.trials < FEW_TRIALS {
            out.warnings.push(format!(
                "only {} trials; standard errors are unreliable below {FEW_TRIALS}",
                self.trials
            ));
        }
        Ok(out)
    }
}
