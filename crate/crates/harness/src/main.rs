use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use v0init_harness::sweep::{plan_sweep, run_sweep, SweepAxis};
use v0init_harness::{prepare, Command, ExperimentConfig, Result, RunOutput, VERSION};

/// Seeded optimizer experiments with CSV and JSON output.
#[derive(Parser)]
#[command(name = "v0init")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimizer trajectory on the toy saddle objective
    #[command(name = "run_saddle")]
    RunSaddle(RunArgs),
    /// Monte Carlo moment traces under the noisy gradient oracle
    #[command(name = "run_ngos")]
    RunNgos(RunArgs),
    /// Importance of early steps under exponentially decaying gradients
    #[command(name = "run_expdecay_importance")]
    RunExpdecayImportance(RunArgs),
    /// Train the small MLP and record step statistics
    #[command(name = "run_mlp")]
    RunMlp(RunArgs),
    /// Loss on a 2-D slice through the MLP or a quadratic
    #[command(name = "run_landscape")]
    RunLandscape(RunArgs),
    /// Check a config without running anything
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the library version
    Version,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel sweep: `sigma=1,10,100`, `seed=0..10` or `seed=1,5,9`
    #[arg(long)]
    sweep: Option<SweepAxis>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn report(dir: &Path, out: &RunOutput) {
    println!(
        "wrote {} files to {}",
        out.artifacts.len() + 1,
        dir.display()
    );
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(command: Command, args: &RunArgs) -> Result<()> {
    let cfg = load(args)?;
    match &args.sweep {
        Some(axis) => {
            let runs = plan_sweep(command, &cfg, axis)?;
            let root = cfg.output_dir();
            let outputs = run_sweep(&runs, &root)?;
            for (r, out) in runs.iter().zip(&outputs) {
                report(&r.prepared.config().output_dir(), out);
            }
        }
        None => {
            let prepared = prepare(command, &cfg)?;
            let out = prepared.run()?;
            report(&prepared.config().output_dir(), &out);
        }
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::RunSaddle(a) => run(Command::RunSaddle, &a),
        Cmd::RunNgos(a) => run(Command::RunNgos, &a),
        Cmd::RunExpdecayImportance(a) => run(Command::RunExpdecayImportance, &a),
        Cmd::RunMlp(a) => run(Command::RunMlp, &a),
        Cmd::RunLandscape(a) => run(Command::RunLandscape, &a),
        Cmd::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let command = Command::for_experiment(cfg.experiment);
            prepare(command, &cfg)?;
            println!(
                "ok: valid {} config for {}",
                cfg.experiment.name(),
                command.name()
            );
            Ok(())
        }
        Cmd::Version => {
            println!("v0init {VERSION}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 and usage text on bad arguments or unknown subcommands.
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
