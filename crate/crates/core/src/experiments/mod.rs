//! Experiment drivers: scaling sweeps, exact verification sweeps and demos.
//!
//! Every driver takes a master seed and derives per-cell and per-replicate
//! streams from it, so results are identical for any thread count.

pub mod demo;
pub mod parallel;
pub mod stats;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use demo::{DominationSpec, PotentialSpec};
pub use parallel::ParallelSpec;
pub use sweep::{BudgetRule, LowerSpec, MuRule, NlognSpec, UpperSpec, Variant};
pub use verify::VerifySpec;

use crate::error::{Error, Result};

/// What to run, tagged by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    UpperScaling(UpperSpec),
    LowerExponential(LowerSpec),
    NlognFloor(NlognSpec),
    DominationDemo(DominationSpec),
    PotentialDemo(PotentialSpec),
    VerifySuite(VerifySpec),
    ParallelDemo(ParallelSpec),
}

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

fn default_seed() -> u64 {
    DEFAULT_MASTER_SEED
}

/// A config file: one experiment plus where and how to run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub spec: ExperimentSpec,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(spec: ExperimentSpec) -> Self {
        ExperimentConfig {
            spec,
            master_seed: DEFAULT_MASTER_SEED,
            out_dir: None,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        Ok(cfg)
    }

    /// Structural checks that do not need to run anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match &self.spec {
            ExperimentSpec::UpperScaling(s) => {
                if s.n_grid.is_empty() || s.replicates == 0 {
                    return bad("upper_scaling needs a non-empty n_grid and replicates >= 1".into());
                }
                for &n in &s.n_grid {
                    s.mu_rule.mu(n)?;
                }
            }
            ExperimentSpec::LowerExponential(s) => {
                if s.k_grid.len() < 2 || s.mu_grid.is_empty() || s.replicates == 0 {
                    return bad("lower_exponential needs two k values, one mu and replicates >= 1".into());
                }
                for &mu in &s.mu_grid {
                    crate::params::round_up_mu(s.n, mu)?;
                }
            }
            ExperimentSpec::NlognFloor(s) => {
                if s.n_grid.is_empty() || s.replicates == 0 {
                    return bad("nlogn_floor needs a non-empty n_grid and replicates >= 1".into());
                }
            }
            ExperimentSpec::DominationDemo(s) => {
                if s.n % 2 != 0 || s.replicates < 2 {
                    return bad("domination_demo needs an even n and replicates >= 2".into());
                }
            }
            ExperimentSpec::PotentialDemo(s) => {
                if !(s.c > 0.0 && s.c <= 1.0) || s.replicates == 0 {
                    return bad("potential_demo needs c in (0, 1] and replicates >= 1".into());
                }
            }
            ExperimentSpec::VerifySuite(_) => {}
            ExperimentSpec::ParallelDemo(s) => {
                if !s.mu_tilde.is_power_of_two() || s.runs == 0 {
                    return bad("parallel_demo needs a power-of-two mu_tilde and runs >= 1".into());
                }
            }
        }
        Ok(())
    }
}
