//! Seeded experiment runner for the `v0init-core` optimizers.
//!
//! A run is planned first (config resolution plus full validation), then
//! executed into memory, and only then written out together with a
//! `manifest.json`. A config error therefore never leaves files behind.

pub mod config;
pub mod error;
pub mod output;
pub mod runs;
pub mod sweep;

use std::time::Instant;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use output::RunOutput;

use output::{write_run, Manifest, MANIFEST_FORMAT};
use runs::Plan;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const LIBRARY: &str = "v0init";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    RunSaddle,
    RunNgos,
    RunExpdecayImportance,
    RunMlp,
    RunLandscape,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RunSaddle => "run_saddle",
            Command::RunNgos => "run_ngos",
            Command::RunExpdecayImportance => "run_expdecay_importance",
            Command::RunMlp => "run_mlp",
            Command::RunLandscape => "run_landscape",
        }
    }

    /// The subcommand that runs a given experiment; landscapes cover the quadratic too.
    pub fn for_experiment(experiment: Experiment) -> Command {
        match experiment {
            Experiment::Saddle => Command::RunSaddle,
            Experiment::Ngos => Command::RunNgos,
            Experiment::ExpdecayImportance => Command::RunExpdecayImportance,
            Experiment::Mlp => Command::RunMlp,
            Experiment::Landscape | Experiment::Quadratic => Command::RunLandscape,
        }
    }
}

/// A validated run, ready to execute.
#[derive(Debug, Clone)]
pub struct Prepared {
    command: Command,
    config: ExperimentConfig,
    plan: Plan,
}

/// Resolves defaults and validates every field the run will read.
pub fn prepare(command: Command, cfg: &ExperimentConfig) -> Result<Prepared> {
    let config = cfg.resolve()?;
    let expected = Command::for_experiment(config.experiment);
    if expected != command {
        return Err(HarnessError::config(format!(
            "{} cannot run a `{}` config; use {}",
            command.name(),
            config.experiment.name(),
            expected.name()
        )));
    }
    let plan = Plan::new(&config)?;
    Ok(Prepared {
        command,
        config,
        plan,
    })
}

impl Prepared {
    pub fn command(&self) -> Command {
        self.command
    }

    /// The fully resolved config, as echoed into the manifest.
    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    /// Runs without touching the filesystem.
    pub fn execute(&self) -> Result<RunOutput> {
        self.plan.execute()
    }

    /// Runs and writes the outputs plus `manifest.json` into the configured output directory.
    pub fn run(&self) -> Result<RunOutput> {
        let start = Instant::now();
        let out = self.execute()?;
        let wall_time_secs = start.elapsed().as_secs_f64();
        let manifest = Manifest {
            format: MANIFEST_FORMAT,
            subcommand: self.command.name(),
            library: LIBRARY,
            version: VERSION,
            seed: self.config.seed,
            config: &self.config,
            outputs: out.artifacts.iter().map(|a| a.name.as_str()).collect(),
            wall_time_secs,
            summary: &out.summary,
            warnings: &out.warnings,
        };
        write_run(&self.config.output_dir(), &out, &manifest)?;
        Ok(out)
    }
}
