//! Parameter-less population sizing: the round-based parallel-run strategy
//! and a doubling restart baseline, with exact budget accounting.
//!
//! In round `i` every process started earlier receives `2^(i-1)` further
//! generations, then process `i` starts with `mu = 2^(i-1)` and a budget of
//! `2^i - 1`. Within a round processes are advanced in index order and the
//! whole run stops at the first success, so spending after the successful
//! generation is never counted.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{Cga, StopRule};
use crate::error::Result;
use crate::fitness::FitnessSpec;
use crate::params::{make_params, MuPolicy};
use crate::rng::{derive_replicate_seed, rng_from_seed, CgaRng};

/// Something that can be run for a number of generations.
pub trait Process {
    /// Runs up to `generations` more generations; returns how many were used
    /// when the optimum was found within them.
    fn advance(&mut self, generations: u64) -> Option<u64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessStatus {
    Running,
    Succeeded,
    /// Halted by the global budget cap.
    Stopped,
}

impl ProcessStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProcessStatus::Running => "running",
            ProcessStatus::Succeeded => "succeeded",
            ProcessStatus::Stopped => "stopped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessRecord {
    /// 1-based.
    pub index: u32,
    pub mu: u64,
    pub spent: u64,
    pub status: ProcessStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRow {
    pub round: u32,
    pub process: u32,
    pub mu: u64,
    pub spent_this_round: u64,
    pub cumulative: u64,
    pub status: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParallelState {
    pub round: u32,
    pub processes: Vec<ProcessRecord>,
    pub total_budget_spent: u64,
}

impl ParallelState {
    /// The end-of-round identities: every live process has spent `2^i - 1`
    /// and the total is below `i * 2^i`.
    pub fn check_round_identities(&self) -> std::result::Result<(), String> {
        let i = self.round;
        let expected = (1u64 << i) - 1;
        if self.processes.len() != i as usize {
            return Err(format!("round {i}: {} processes", self.processes.len()));
        }
        for p in &self.processes {
            if p.status == ProcessStatus::Running && p.spent != expected {
                return Err(format!("round {i}: process {} spent {}, expected {expected}", p.index, p.spent));
            }
        }
        let sum: u64 = self.processes.iter().map(|p| p.spent).sum();
        if sum != self.total_budget_spent {
            return Err(format!("round {i}: total {} differs from the per-process sum {sum}", self.total_budget_spent));
        }
        if self.total_budget_spent >= i as u64 * (1u64 << i) {
            return Err(format!("round {i}: total {} is not below i * 2^i", self.total_budget_spent));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelOutcome {
    pub success: bool,
    pub winner: Option<u32>,
    pub winner_mu: Option<u64>,
    pub rounds: u32,
    pub total_budget: u64,
    pub state: ParallelState,
    pub log: Vec<LogRow>,
}

/// Largest number of rounds; process `i` would need `mu = 2^(i-1)`.
pub const MAX_ROUNDS: u32 = 40;

/// Runs the strategy with processes built by `make(index, mu)` until one
/// succeeds or `global_cap` generations have been spent in total.
/// `on_round_end` sees the state after every completed round.
pub fn parallel_run_with<P, M, R>(mut make: M, global_cap: u64, mut on_round_end: R) -> ParallelOutcome
where
    P: Process,
    M: FnMut(u32, u64) -> P,
    R: FnMut(&ParallelState),
{
    let mut state = ParallelState::default();
    let mut procs: Vec<P> = Vec::new();
    let mut log = Vec::new();

    for i in 1..=MAX_ROUNDS {
        state.round = i;
        let half = 1u64 << (i - 1);
        let mut plan: Vec<(usize, u64)> = (0..procs.len()).map(|j| (j, half)).collect();
        procs.push(make(i, half));
        state.processes.push(ProcessRecord {
            index: i,
            mu: half,
            spent: 0,
            status: ProcessStatus::Running,
        });
        plan.push((procs.len() - 1, (1u64 << i) - 1));

        for (j, alloc) in plan {
            let remaining = global_cap - state.total_budget_spent;
            let grant = alloc.min(remaining);
            let result = if grant > 0 { procs[j].advance(grant) } else { None };
            let used = result.unwrap_or(grant);
            let rec = &mut state.processes[j];
            rec.spent += used;
            state.total_budget_spent += used;
            rec.status = if result.is_some() {
                ProcessStatus::Succeeded
            } else if grant < alloc {
                ProcessStatus::Stopped
            } else {
                ProcessStatus::Running
            };
            log.push(LogRow {
                round: i,
                process: rec.index,
                mu: rec.mu,
                spent_this_round: used,
                cumulative: rec.spent,
                status: rec.status.as_str().to_string(),
            });
            if result.is_some() || grant < alloc {
                let success = result.is_some();
                return ParallelOutcome {
                    success,
                    winner: success.then_some(rec.index),
                    winner_mu: success.then_some(rec.mu),
                    rounds: i,
                    total_budget: state.total_budget_spent,
                    state,
                    log,
                };
            }
        }
        on_round_end(&state);
    }
    ParallelOutcome {
        success: false,
        winner: None,
        winner_mu: None,
        rounds: MAX_ROUNDS,
        total_budget: state.total_budget_spent,
        state,
        log,
    }
}

/// A cGA process on a fixed problem.
pub struct CgaProcess<'a> {
    cga: Cga,
    fitness: &'a FitnessSpec,
}

impl<'a> CgaProcess<'a> {
    /// `mu` is rounded up to the next well-behaved value.
    pub fn new(fitness: &'a FitnessSpec, requested_mu: u64, seed: u64) -> Result<Self> {
        let params = make_params(fitness.n(), requested_mu, MuPolicy::RoundUp)?.with_seed(seed);
        Ok(CgaProcess {
            cga: Cga::new(&params),
            fitness,
        })
    }

    pub fn mu(&self) -> u64 {
        self.cga.params().mu()
    }
}

impl Process for CgaProcess<'_> {
    fn advance(&mut self, generations: u64) -> Option<u64> {
        let r = self.cga.run(self.fitness, &StopRule::optimum(generations), &mut ());
        r.hit_optimum.then_some(r.iterations_used)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuSubstitution {
    pub process: u32,
    pub requested: u64,
    pub used: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgaParallelOutcome {
    pub outcome: ParallelOutcome,
    /// Processes whose `mu = 2^(i-1)` was not well-behaved for `n`.
    pub substitutions: Vec<MuSubstitution>,
    pub identity_violations: Vec<String>,
}

/// The parallel-run cGA on `problem`; process `i` is seeded with
/// `derive_replicate_seed(master_seed, i)`. In the log, `mu` is the value actually used.
pub fn parallel_run(problem: &FitnessSpec, global_cap: u64, master_seed: u64) -> Result<CgaParallelOutcome> {
    // Validate once so that the constructor below cannot fail.
    make_params(problem.n(), 1, MuPolicy::RoundUp)?;
    let mut substitutions = Vec::new();
    let mut violations = Vec::new();
    let mut used_mu = Vec::new();
    let mut outcome = parallel_run_with(
        |i, mu| {
            let p = CgaProcess::new(problem, mu, derive_replicate_seed(master_seed, i as u64))
                .expect("dimension validated above");
            if p.mu() != mu {
                substitutions.push(MuSubstitution {
                    process: i,
                    requested: mu,
                    used: p.mu(),
                });
            }
            used_mu.push(p.mu());
            p
        },
        global_cap,
        |s| {
            if let Err(e) = s.check_round_identities() {
                violations.push(e);
            }
        },
    );
    for row in &mut outcome.log {
        row.mu = used_mu[row.process as usize - 1];
    }
    for rec in &mut outcome.state.processes {
        rec.mu = used_mu[rec.index as usize - 1];
    }
    if let Some(w) = outcome.winner {
        outcome.winner_mu = Some(used_mu[w as usize - 1]);
    }
    Ok(CgaParallelOutcome {
        outcome,
        substitutions,
        identity_violations: violations,
    })
}

/// A mock process: when `mu >= mu_tilde` it succeeds, with probability
/// `success_prob` drawn once at creation, at exactly the generation where
/// its cumulative budget reaches `max(1, mu * t)`; otherwise it never succeeds.
#[derive(Debug, Clone)]
pub struct SyntheticProcess {
    threshold: u64,
    lucky: bool,
    spent: u64,
}

impl SyntheticProcess {
    pub fn new(mu: u64, mu_tilde: u64, t: u64, success_prob: f64, rng: &mut CgaRng) -> Self {
        let adequate = mu >= mu_tilde;
        // Draw unconditionally so the stream position does not depend on mu.
        let lucky = rng.gen_bool(success_prob) && adequate;
        SyntheticProcess {
            threshold: (mu * t).max(1),
            lucky,
            spent: 0,
        }
    }
}

impl Process for SyntheticProcess {
    fn advance(&mut self, generations: u64) -> Option<u64> {
        let before = self.spent;
        self.spent += generations;
        (self.lucky && before < self.threshold && self.threshold <= self.spent).then(|| self.threshold - before)
    }
}

/// The parallel-run strategy on synthetic processes; process `i` draws from
/// the stream `derive_replicate_seed(seed, i)`.
pub fn parallel_run_synthetic(
    mu_tilde: u64,
    t: u64,
    success_prob: f64,
    global_cap: u64,
    seed: u64,
    on_round_end: impl FnMut(&ParallelState),
) -> ParallelOutcome {
    parallel_run_with(
        |i, mu| {
            let mut rng = rng_from_seed(derive_replicate_seed(seed, i as u64));
            SyntheticProcess::new(mu, mu_tilde, t, success_prob, &mut rng)
        },
        global_cap,
        on_round_end,
    )
}

/// First round in which a process with `mu >= mu_tilde` reaches budget `mu * t`
/// (both powers of two).
pub fn first_adequate_round(mu_tilde: u64, t: u64) -> u32 {
    // Process j = log2(mu_tilde) + 1 has spent 2^i - 1 >= mu_tilde * t after round i.
    let need = (mu_tilde * t).max(1);
    (1..=MAX_ROUNDS).find(|&i| (1u64 << i) > need).unwrap_or(MAX_ROUNDS)
}

pub fn write_parallel_log<W: Write>(rows: &[LogRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartAttempt {
    pub mu: u64,
    pub budget: u64,
    pub spent: u64,
    pub succeeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingOutcome {
    pub success: bool,
    pub attempts: Vec<RestartAttempt>,
    pub total_budget: u64,
}

/// Attempts `mu = start_mu, 2 start_mu, 4 start_mu, ...`, each a fresh process
/// with budget `budget(mu)`, until one succeeds or `global_cap` is spent.
pub fn doubling_restart_with<P: Process>(
    mut make: impl FnMut(u32, u64) -> P,
    budget: impl Fn(u64) -> u64,
    start_mu: u64,
    global_cap: u64,
) -> DoublingOutcome {
    let mut attempts = Vec::new();
    let mut total = 0u64;
    let mut mu = start_mu.max(1);
    for j in 1..=MAX_ROUNDS {
        let b = budget(mu);
        let grant = b.min(global_cap - total);
        let mut p = make(j, mu);
        let result = if grant > 0 { p.advance(grant) } else { None };
        let spent = result.unwrap_or(grant);
        total += spent;
        attempts.push(RestartAttempt {
            mu,
            budget: b,
            spent,
            succeeded: result.is_some(),
        });
        if result.is_some() || grant < b {
            return DoublingOutcome {
                success: result.is_some(),
                attempts,
                total_budget: total,
            };
        }
        mu = mu.saturating_mul(2);
    }
    DoublingOutcome {
        success: false,
        attempts,
        total_budget: total,
    }
}

/// Expected total budget of doubling restarts from `mu = 1` on processes that
/// succeed with probability `p` exactly at budget `mu * t` once `mu >= mu_tilde`
/// (a power of two): `(mu_tilde - 1) t + mu_tilde t / (2p - 1)`. Infinite for `p <= 1/2`.
pub fn doubling_expected_total(mu_tilde: u64, t: u64, p: f64) -> f64 {
    if p <= 0.5 {
        return f64::INFINITY;
    }
    let (m, t) = (mu_tilde as f64, t as f64);
    (m - 1.0) * t + m * t / (1.0 - 2.0 * (1.0 - p))
}

/// Doubling restarts of the cGA with `mu` rounded up per attempt; `budget` gets the rounded value.
pub fn doubling_restart(
    problem: &FitnessSpec,
    budget: impl Fn(u64) -> u64,
    global_cap: u64,
    master_seed: u64,
) -> Result<DoublingOutcome> {
    make_params(problem.n(), 1, MuPolicy::RoundUp)?;
    let n = problem.n();
    let rounded = |mu: u64| crate::params::round_up_mu(n, mu).expect("dimension validated above");
    let mut out = doubling_restart_with(
        |j, mu| {
            CgaProcess::new(problem, mu, derive_replicate_seed(master_seed, j as u64)).expect("dimension validated above")
        },
        |mu| budget(rounded(mu)),
        1,
        global_cap,
    );
    for a in &mut out.attempts {
        a.mu = rounded(a.mu);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Never;
    impl Process for Never {
        fn advance(&mut self, _: u64) -> Option<u64> {
            None
        }
    }

    #[test]
    fn round_three_accounting() {
        let mut states = Vec::new();
        let out = parallel_run_with(|_, _| Never, 21, |s| states.push(s.clone()));
        assert!(!out.success);
        let s3 = &states[2];
        assert_eq!(s3.round, 3);
        assert!(s3.processes.iter().all(|p| p.spent == 7));
        assert_eq!(s3.total_budget_spent, 21);
        assert!(s3.total_budget_spent < 3 * 8);
        assert_eq!(s3.processes.iter().map(|p| p.mu).collect::<Vec<_>>(), vec![1, 2, 4]);
        for s in &states {
            s.check_round_identities().unwrap();
        }
        assert_eq!(out.total_budget, 21);
    }

    #[test]
    fn instant_success_is_process_one() {
        let out = parallel_run_synthetic(1, 1, 1.0, 1 << 20, 0, |_| {});
        assert!(out.success);
        assert_eq!(out.winner, Some(1));
        assert_eq!(out.total_budget, 1);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn partial_round_spending_counted() {
        // mu_tilde = 4, t = 1: process 3 reaches its threshold 4 in round 3 after 4 generations.
        let out = parallel_run_synthetic(4, 1, 1.0, 1 << 20, 0, |_| {});
        assert_eq!(out.winner, Some(3));
        assert_eq!(out.rounds, 3);
        // Rounds 1-2: 1 + (2 + 3) = 6; round 3: processes 1, 2 get 4 each, process 3 uses 4.
        assert_eq!(out.total_budget, 6 + 8 + 4);
        assert_eq!(first_adequate_round(4, 1), 3);
    }

    #[test]
    fn cap_stops_with_accounting() {
        let out = parallel_run_with(|_, _| Never, 10, |_| {});
        assert!(!out.success);
        assert_eq!(out.total_budget, 10);
        assert_eq!(out.log.last().unwrap().status, "stopped");
    }

    #[test]
    fn doubling_threshold_mock() {
        let out = doubling_restart_with(
            |_, mu| SyntheticProcess::new(mu, 8, 1, 1.0, &mut rng_from_seed(0)),
            |mu| mu,
            1,
            u64::MAX,
        );
        assert!(out.success);
        assert_eq!(out.attempts.len(), 4);
        assert_eq!(out.total_budget, 1 + 2 + 4 + 8);
        let sum: u64 = out.attempts.iter().map(|a| a.spent).sum();
        assert_eq!(sum, out.total_budget);
    }

    #[test]
    fn cga_parallel_run_rounds_mu_up() {
        let om = FitnessSpec::onemax(10).unwrap();
        let r = parallel_run(&om, 1 << 22, 3).unwrap();
        assert!(r.outcome.success);
        assert!(r.identity_violations.is_empty());
        // For n = 10 the valid mu are multiples of 5.
        assert!(r.substitutions.iter().any(|s| s.requested == 1 && s.used == 5));
        assert!(r.outcome.log.iter().all(|row| row.mu % 5 == 0));
        let mut buf = Vec::new();
        write_parallel_log(&r.outcome.log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,process,mu,spent_this_round,cumulative,status\n"));
    }
}
