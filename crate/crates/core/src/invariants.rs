//! Per-step checks of the engine's structural invariants, recomputed from
//! scratch out of `f_t`, the offspring and `f_{t+1}`.

use std::fmt;

use crate::engine::{StepObserver, StepOutcome};
use crate::frequency::FrequencyVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvariantKind {
    FrequencySetClosure,
    BoundaryContainment,
    NoTouch,
    ClampAccounting,
    RangeGrowth,
    WinnerRule,
}

impl fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InvariantKind::FrequencySetClosure => "frequency_set_closure",
            InvariantKind::BoundaryContainment => "boundary_containment",
            InvariantKind::NoTouch => "no_touch",
            InvariantKind::ClampAccounting => "clamp_accounting",
            InvariantKind::RangeGrowth => "range_growth",
            InvariantKind::WinnerRule => "winner_rule",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub t: u64,
    pub kind: InvariantKind,
    pub detail: String,
}

const MAX_STORED: usize = 64;

#[derive(Debug, Clone, Default)]
pub struct InvariantChecker {
    before: Vec<u32>,
    start: Vec<u32>,
    steps_checked: u64,
    violation_count: u64,
    violations: Vec<Violation>,
}

impl InvariantChecker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps_checked(&self) -> u64 {
        self.steps_checked
    }

    pub fn violation_count(&self) -> u64 {
        self.violation_count
    }

    /// The first violations found (at most 64 are kept).
    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    fn report(&mut self, t: u64, kind: InvariantKind, detail: String) {
        self.violation_count += 1;
        if self.violations.len() < MAX_STORED {
            self.violations.push(Violation { t, kind, detail });
        }
    }

    fn check(&mut self, t: u64, out: &StepOutcome, f: &FrequencyVector) {
        let n = f.n();
        let n_mu = f.n_mu();
        let (mu, nn) = (f.mu() as u128, n as u128);
        let winner = out.winner();
        let loser = out.loser();

        if out.winner_first != (out.fitness1 >= out.fitness2) {
            self.report(t, InvariantKind::WinnerRule, "tie or order not resolved as F(x1) >= F(x2)".into());
        }

        let mut pre_delta = 0i64;
        let (mut low_caps, mut high_caps) = (0u32, 0u32);
        let (mut low_dis, mut high_dis) = (0u32, 0u32);
        for i in 0..n {
            let old = self.before[i];
            let new = f.index(i);
            if new > n_mu {
                self.report(t, InvariantKind::FrequencySetClosure, format!("index {new} > {n_mu} at {i}"));
            }
            // 1/n <= 1/n + new/mu <= 1 - 1/n, in integers scaled by n*mu.
            let num = mu + new as u128 * nn;
            if num < mu || num > (nn - 1) * mu {
                self.report(t, InvariantKind::BoundaryContainment, format!("coordinate {i} outside [1/n, 1-1/n]"));
            }
            // From the uniform start this is f_t in [1/2 - t/mu, 1/2 + t/mu].
            let moved = new.abs_diff(self.start[i]) as u64;
            if moved > self.steps_checked {
                self.report(
                    t,
                    InvariantKind::RangeGrowth,
                    format!("coordinate {i} moved {moved} steps in {} iterations", self.steps_checked),
                );
            }
            let (w, l) = (winner.get(i), loser.get(i));
            if w == l {
                if old != new {
                    self.report(t, InvariantKind::NoTouch, format!("coordinate {i} moved {old} -> {new}"));
                }
                continue;
            }
            if old == 0 {
                low_dis += 1;
            }
            if old == n_mu {
                high_dis += 1;
            }
            let expected = if w {
                pre_delta += 1;
                if old == n_mu {
                    high_caps += 1;
                    old
                } else {
                    old + 1
                }
            } else {
                pre_delta -= 1;
                if old == 0 {
                    low_caps += 1;
                    old
                } else {
                    old - 1
                }
            };
            if new != expected {
                self.report(t, InvariantKind::ClampAccounting, format!("coordinate {i}: {old} -> {new}, expected {expected}"));
            }
        }

        let actual_delta = f.index_sum() as i64 - self.before.iter().map(|&i| i as i64).sum::<i64>();
        let accounted = out.pre_clamp_delta_ticks + out.capped_low as i64 - out.capped_high as i64;
        let consistent = out.pre_clamp_delta_ticks == pre_delta
            && out.capped_low == low_caps
            && out.capped_high == high_caps
            && actual_delta == accounted
            && out.capped_low <= low_dis
            && out.capped_high <= high_dis
            && out.low_boundary_disagreements == low_dis
            && out.high_boundary_disagreements == high_dis;
        if !consistent {
            self.report(
                t,
                InvariantKind::ClampAccounting,
                format!(
                    "reported (delta {}, low {}, high {}) vs recomputed (delta {pre_delta}, low {low_caps}, high {high_caps}, disagreements {low_dis}/{high_dis}, sum change {actual_delta})",
                    out.pre_clamp_delta_ticks, out.capped_low, out.capped_high
                ),
            );
        }
    }
}

impl StepObserver for InvariantChecker {
    fn on_start(&mut self, f: &FrequencyVector) {
        self.start = f.indices().to_vec();
        self.before = self.start.clone();
    }

    fn before_step(&mut self, _t: u64, f: &FrequencyVector) {
        self.before.clear();
        self.before.extend_from_slice(f.indices());
    }

    fn after_step(&mut self, t: u64, outcome: &StepOutcome, f: &FrequencyVector) {
        self.steps_checked += 1;
        self.check(t, outcome, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Cga, StopRule};
    use crate::fitness::FitnessSpec;
    use crate::params::{make_params, MuPolicy};

    #[test]
    fn clean_run_has_no_violations() {
        let p = make_params(40, 40, MuPolicy::Reject).unwrap().with_seed(8);
        let j = FitnessSpec::jump(40, 3).unwrap();
        let mut cga = Cga::new(&p);
        let mut checker = InvariantChecker::new();
        cga.run(&j, &StopRule::budget_only(20_000), &mut checker);
        assert_eq!(checker.steps_checked(), 20_000);
        assert_eq!(checker.violation_count(), 0, "{:?}", checker.violations());
    }

    #[test]
    fn detects_tampered_outcome() {
        let p = make_params(10, 10, MuPolicy::Reject).unwrap();
        let f0 = FrequencyVector::uniform(&p);
        let om = FitnessSpec::onemax(10).unwrap();
        let mut f1 = f0.clone();
        let x1: crate::BitString = "1100000000".parse().unwrap();
        let x2: crate::BitString = "0000000000".parse().unwrap();
        let mut out = crate::engine::update_with_offspring(&mut f1, &x1, &x2, &om);
        let mut checker = InvariantChecker::new();
        checker.on_start(&f0);
        checker.after_step(1, &out, &f1);
        assert_eq!(checker.violation_count(), 0);
        out.capped_high = 1;
        checker.after_step(1, &out, &f1);
        assert_eq!(checker.violation_count(), 1);
        assert_eq!(checker.violations()[0].kind, InvariantKind::ClampAccounting);
    }
}
