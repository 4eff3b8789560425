//! Budget identities of the parallel-run strategy on real cGA processes, and
//! its round-count tail on synthetic processes.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats;
use super::sweep::Variant;
use crate::error::{Error, Result};
use crate::meta::{first_adequate_round, parallel_run, parallel_run_synthetic, LogRow, MuSubstitution};
use crate::rng::derive_replicate_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParallelSpec {
    pub variant: Variant,
    pub n: usize,
    pub k: usize,
    pub runs: u64,
    pub global_cap: u64,
    /// Power of two.
    pub mu_tilde: u64,
    /// `mu_tilde * t` must not be a power of two, so that the process with
    /// `2^j mu_tilde` first reaches its budget exactly `j` rounds after the first adequate one.
    pub t: u64,
    pub success_prob: f64,
    pub trials: u64,
    pub tail_depth: u32,
}

impl Default for ParallelSpec {
    fn default() -> Self {
        ParallelSpec {
            variant: Variant::Jump,
            n: 20,
            k: 3,
            runs: 100,
            global_cap: 1 << 26,
            mu_tilde: 16,
            t: 3,
            success_prob: 0.75,
            trials: 10_000,
            tail_depth: 3,
        }
    }
}

impl ParallelSpec {
    pub fn quick() -> Self {
        ParallelSpec {
            runs: 10,
            trials: 2_000,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLogRow {
    pub run: u64,
    pub round: u32,
    pub process: u32,
    pub mu: u64,
    pub spent_this_round: u64,
    pub cumulative: u64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: u64,
    pub success: bool,
    pub winner: Option<u32>,
    pub winner_mu: Option<u64>,
    pub rounds: u32,
    pub total_budget: u64,
    pub rounds_checked: u32,
    pub identity_violations: Vec<String>,
    pub substitutions: Vec<MuSubstitution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub j: u32,
    pub empirical: f64,
    pub expected: f64,
    pub sigma: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelReport {
    pub runs: Vec<RunSummary>,
    pub log: Vec<RunLogRow>,
    pub first_adequate_round: u32,
    pub tail: Vec<TailRow>,
    pub synthetic_failures: u64,
    pub median_total: f64,
    /// `median_total / (2^i0 i0)`.
    pub median_ratio: f64,
}

impl ParallelReport {
    pub fn identities_hold(&self) -> bool {
        self.runs.iter().all(|r| r.identity_violations.is_empty())
    }

    pub fn tail_holds(&self) -> bool {
        self.synthetic_failures == 0 && self.tail.iter().all(|t| t.holds)
    }

    pub fn holds(&self) -> bool {
        self.identities_hold() && self.tail_holds()
    }
}

pub fn run_parallel_demo(spec: &ParallelSpec, seed: u64) -> Result<ParallelReport> {
    if !spec.mu_tilde.is_power_of_two() {
        return Err(Error::Config(format!("mu_tilde = {} is not a power of two", spec.mu_tilde)));
    }
    if spec.runs == 0 || spec.trials == 0 {
        return Err(Error::Config("runs and trials must be at least 1".into()));
    }
    let problem = spec.variant.build(spec.n, spec.k)?;
    let cga_seed = derive_replicate_seed(seed, 1);
    let results: Vec<(RunSummary, Vec<LogRow>)> = (0..spec.runs)
        .into_par_iter()
        .map(|run| {
            let out = parallel_run(&problem, spec.global_cap, derive_replicate_seed(cga_seed, run))?;
            Ok((
                RunSummary {
                    run,
                    success: out.outcome.success,
                    winner: out.outcome.winner,
                    winner_mu: out.outcome.winner_mu,
                    rounds: out.outcome.rounds,
                    total_budget: out.outcome.total_budget,
                    // Identities are checked after every completed round; the last round ends early.
                    rounds_checked: out.outcome.rounds.saturating_sub(1),
                    identity_violations: out.identity_violations,
                    substitutions: out.substitutions,
                },
                out.outcome.log,
            ))
        })
        .collect::<Result<_>>()?;
    let mut runs = Vec::new();
    let mut log = Vec::new();
    for (summary, rows) in results {
        log.extend(rows.into_iter().map(|r| RunLogRow {
            run: summary.run,
            round: r.round,
            process: r.process,
            mu: r.mu,
            spent_this_round: r.spent_this_round,
            cumulative: r.cumulative,
            status: r.status,
        }));
        runs.push(summary);
    }

    let i0 = first_adequate_round(spec.mu_tilde, spec.t);
    let syn_seed = derive_replicate_seed(seed, 2);
    let synthetic: Vec<(bool, u32, u64, bool)> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let mut ok = true;
            let out = parallel_run_synthetic(
                spec.mu_tilde,
                spec.t,
                spec.success_prob,
                u64::MAX,
                derive_replicate_seed(syn_seed, trial),
                |s| ok &= s.check_round_identities().is_ok(),
            );
            (out.success, out.rounds, out.total_budget, ok)
        })
        .collect();
    let synthetic_failures = synthetic.iter().filter(|s| !s.0 || !s.3).count() as u64;
    let trials = spec.trials as f64;
    let q = 1.0 - spec.success_prob;
    let tail = (0..=spec.tail_depth)
        .map(|j| {
            let hits = synthetic.iter().filter(|s| s.1 >= i0 + j).count() as f64;
            let empirical = hits / trials;
            let expected = q.powi(j as i32);
            let sigma = (expected * (1.0 - expected) / trials).sqrt();
            TailRow {
                j,
                empirical,
                expected,
                sigma,
                holds: (empirical - expected).abs() <= 3.0 * sigma,
            }
        })
        .collect();
    let totals: Vec<f64> = synthetic.iter().map(|s| s.2 as f64).collect();
    let median_total = stats::median(&totals);
    Ok(ParallelReport {
        runs,
        log,
        first_adequate_round: i0,
        tail,
        synthetic_failures,
        median_total,
        median_ratio: median_total / ((1u64 << i0) as f64 * i0 as f64),
    })
}

pub fn write_run_log_csv<W: Write>(rows: &[RunLogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tail_csv<W: Write>(rows: &[TailRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
