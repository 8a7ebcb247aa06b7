//! Parallel sweeps over the v0 scale or over seeds.
//!
//! Every run gets its own subdirectory and seed; all runs are validated
//! before any of them starts.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::V0Kind;
use crate::error::{HarnessError, Result};
use crate::output::{Artifact, RunOutput};
use crate::{prepare, Command, ExperimentConfig, Prepared};

pub const SWEEP_FILE: &str = "sweep.json";

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Sigma(Vec<f64>),
    Seed(Vec<u64>),
}

impl FromStr for SweepAxis {
    type Err = String;

    /// `sigma=1,10,100`, `seed=3,5,8` or `seed=0..10`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (axis, values) = s
            .split_once('=')
            .ok_or_else(|| format!("expected `sigma=...` or `seed=...`, got `{s}`"))?;
        let values = values.trim();
        match axis.trim() {
            "sigma" => {
                let sigmas = values
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| format!("bad sigma `{v}`: {e}"))
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Ok(SweepAxis::Sigma(sigmas))
            }
            "seed" | "seeds" => {
                if let Some((lo, hi)) = values.split_once("..") {
                    let lo: u64 = lo
                        .trim()
                        .parse()
                        .map_err(|e| format!("bad seed range: {e}"))?;
                    let hi: u64 = hi
                        .trim()
                        .parse()
                        .map_err(|e| format!("bad seed range: {e}"))?;
                    if lo >= hi {
                        return Err(format!("empty seed range {lo}..{hi}"));
                    }
                    Ok(SweepAxis::Seed((lo..hi).collect()))
                } else {
                    let seeds = values
                        .split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<u64>()
                                .map_err(|e| format!("bad seed `{v}`: {e}"))
                        })
                        .collect::<std::result::Result<Vec<_>, _>>()?;
                    Ok(SweepAxis::Seed(seeds))
                }
            }
            other => Err(format!("unknown sweep axis `{other}`; use sigma or seed")),
        }
    }
}

/// SplitMix64 of `base` advanced `index + 1` times: well-spread seeds for sigma sweeps.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub label: String,
    pub seed: u64,
    pub sigma: Option<f64>,
    pub prepared: Prepared,
}

/// Expands a base config into one validated run per sweep value.
pub fn plan_sweep(
    command: Command,
    base: &ExperimentConfig,
    axis: &SweepAxis,
) -> Result<Vec<SweepRun>> {
    let root = base.output_dir();
    let mut runs = Vec::new();
    match axis {
        SweepAxis::Sigma(sigmas) => {
            if sigmas.is_empty() {
                return Err(HarnessError::config("empty sigma sweep"));
            }
            let kind = base.resolve()?.v0.map(|v| v.kind);
            if !matches!(kind, Some(V0Kind::Random | V0Kind::Data)) {
                return Err(HarnessError::config(
                    "a sigma sweep needs a `random` or `data` v0 strategy",
                ));
            }
            for (i, &sigma) in sigmas.iter().enumerate() {
                let mut cfg = base.clone();
                let seed = derive_seed(base.seed, i as u64);
                let label = format!("sigma_{sigma}");
                cfg.seed = seed;
                cfg.v0.as_mut().expect("checked above").sigma = Some(sigma);
                cfg.output_dir = Some(root.join(&label));
                runs.push(SweepRun {
                    label,
                    seed,
                    sigma: Some(sigma),
                    prepared: prepare(command, &cfg)?,
                });
            }
        }
        SweepAxis::Seed(seeds) => {
            if seeds.is_empty() {
                return Err(HarnessError::config("empty seed sweep"));
            }
            for &seed in seeds {
                let mut cfg = base.clone();
                let label = format!("seed_{seed}");
                cfg.seed = seed;
                cfg.output_dir = Some(root.join(&label));
                runs.push(SweepRun {
                    label,
                    seed,
                    sigma: None,
                    prepared: prepare(command, &cfg)?,
                });
            }
        }
    }
    let mut labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(HarnessError::config("sweep values must be distinct"));
    }
    Ok(runs)
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    dir: &'a str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    status: String,
}

/// Executes the runs in parallel and writes `sweep.json` into `root`.
///
/// Runs that succeed are written even if others fail; the first failure (in
/// sweep order) is returned.
pub fn run_sweep(runs: &[SweepRun], root: &Path) -> Result<Vec<RunOutput>> {
    let results: Vec<Result<RunOutput>> = runs.par_iter().map(|r| r.prepared.run()).collect();
    let entries: Vec<SweepEntry> = runs
        .iter()
        .zip(&results)
        .map(|(r, res)| SweepEntry {
            dir: &r.label,
            seed: r.seed,
            sigma: r.sigma,
            status: match res {
                Ok(_) => "ok".into(),
                Err(e) => format!("error: {e}"),
            },
        })
        .collect();
    let index = Artifact::json(SWEEP_FILE, &serde_json::json!({ "runs": entries }));
    let path = root.join(SWEEP_FILE);
    std::fs::create_dir_all(root).map_err(|e| HarnessError::io(root, e))?;
    std::fs::write(&path, &index.bytes).map_err(|e| HarnessError::io(&path, e))?;
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_axes() {
        assert_eq!(
            "sigma=1,10,100".parse::<SweepAxis>().unwrap(),
            SweepAxis::Sigma(vec![1.0, 10.0, 100.0])
        );
        assert_eq!(
            "seed=0..3".parse::<SweepAxis>().unwrap(),
            SweepAxis::Seed(vec![0, 1, 2])
        );
        assert_eq!(
            "seed=4,2".parse::<SweepAxis>().unwrap(),
            SweepAxis::Seed(vec![4, 2])
        );
        assert!("lr=1".parse::<SweepAxis>().is_err());
        assert!("seed=3..3".parse::<SweepAxis>().is_err());
        assert!("sigma".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn sigma_sweep_needs_a_scaled_strategy() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment": "saddle"}"#).unwrap();
        let err = plan_sweep(Command::RunSaddle, &cfg, &SweepAxis::Sigma(vec![1.0])).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
    }
}
