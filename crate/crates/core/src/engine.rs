//! The cGA iteration: sample two offspring, rank them, shift every
//! disagreeing frequency by `1/mu` toward the winner, clamp to the boundaries.
//!
//! Randomness contract: each offspring consumes exactly `n` draws of
//! `next_u64`, `x1` before `x2`, bit `0` first. Ties `F(x1) = F(x2)` keep
//! `x1` as the winner. Both offspring are sampled before either is checked
//! against the optimum.

use rand::RngCore;

use crate::bits::BitString;
use crate::fitness::FitnessSpec;
use crate::frequency::FrequencyVector;
use crate::params::CgaParams;
use crate::rng::{rng_from_seed, CgaRng};
use crate::trace::{RunTrace, TraceRecorder};

/// Bookkeeping of one update. Sum deltas are in ticks of `1/mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub x1: BitString,
    pub x2: BitString,
    pub fitness1: f64,
    pub fitness2: f64,
    /// `F(x1) >= F(x2)`.
    pub winner_first: bool,
    pub mu: u64,
    /// `mu * (‖f'‖₁ - ‖f_t‖₁)`.
    pub pre_clamp_delta_ticks: i64,
    pub capped_low: u32,
    pub capped_high: u32,
    /// Coordinates at `1/n` where the offspring disagree.
    pub low_boundary_disagreements: u32,
    /// Coordinates at `1 - 1/n` where the offspring disagree.
    pub high_boundary_disagreements: u32,
    /// Offspring (0, 1 or 2) lying in the gap of the fitness function.
    pub gap_samples: u32,
}

impl StepOutcome {
    fn empty(n: usize, mu: u64) -> Self {
        StepOutcome {
            x1: BitString::zeros(n),
            x2: BitString::zeros(n),
            fitness1: 0.0,
            fitness2: 0.0,
            winner_first: true,
            mu,
            pre_clamp_delta_ticks: 0,
            capped_low: 0,
            capped_high: 0,
            low_boundary_disagreements: 0,
            high_boundary_disagreements: 0,
            gap_samples: 0,
        }
    }

    pub fn pre_clamp_sum_delta(&self) -> f64 {
        self.pre_clamp_delta_ticks as f64 / self.mu as f64
    }

    /// `‖f_{t+1}‖₁ - ‖f'‖₁` restricted to lower-boundary caps.
    pub fn low_clamp_correction(&self) -> f64 {
        self.capped_low as f64 / self.mu as f64
    }

    /// `‖f'‖₁ - ‖f_{t+1}‖₁` restricted to upper-boundary caps.
    pub fn high_clamp_correction(&self) -> f64 {
        self.capped_high as f64 / self.mu as f64
    }

    /// `mu * (‖f_{t+1}‖₁ - ‖f_t‖₁)`.
    pub fn post_clamp_delta_ticks(&self) -> i64 {
        self.pre_clamp_delta_ticks + self.capped_low as i64 - self.capped_high as i64
    }

    pub fn winner(&self) -> &BitString {
        if self.winner_first {
            &self.x1
        } else {
            &self.x2
        }
    }

    pub fn loser(&self) -> &BitString {
        if self.winner_first {
            &self.x2
        } else {
            &self.x1
        }
    }
}

/// Draws `x ~ Sample(f)` into `out` using `n` draws.
#[inline]
fn sample_into(f: &FrequencyVector, thresholds: &[u64], rng: &mut CgaRng, out: &mut BitString) {
    let n = f.n();
    let indices = f.indices();
    out.fill_words(|w| {
        let start = w * 64;
        let end = (start + 64).min(n);
        let mut word = 0u64;
        for (b, &idx) in indices[start..end].iter().enumerate() {
            word |= ((rng.next_u64() < thresholds[idx as usize]) as u64) << b;
        }
        word
    });
}

/// Samples one search point with `Pr[x_i = 1] = f_i` independently.
pub fn sample(f: &FrequencyVector, rng: &mut CgaRng) -> BitString {
    let thresholds = f.thresholds();
    let mut x = BitString::zeros(f.n());
    sample_into(f, &thresholds, rng, &mut x);
    x
}

/// Applies the frequency update for given offspring, writing bookkeeping into `out`.
fn update_in_place(f: &mut FrequencyVector, fitness: &FitnessSpec, out: &mut StepOutcome) {
    out.fitness1 = fitness.value(&out.x1);
    out.fitness2 = fitness.value(&out.x2);
    out.winner_first = out.fitness1 >= out.fitness2;
    out.gap_samples = fitness.in_gap(&out.x1) as u32 + fitness.in_gap(&out.x2) as u32;

    let (winner, loser) = if out.winner_first {
        (&out.x1, &out.x2)
    } else {
        (&out.x2, &out.x1)
    };
    let n_mu = f.n_mu();
    let mut delta = 0i64;
    let (mut capped_low, mut capped_high) = (0u32, 0u32);
    let (mut low_dis, mut high_dis) = (0u32, 0u32);
    for (w, (&a, &b)) in winner.words().iter().zip(loser.words()).enumerate() {
        let diff = a ^ b;
        if diff == 0 {
            continue;
        }
        let mut up = a & diff;
        let mut down = b & diff;
        delta += up.count_ones() as i64 - down.count_ones() as i64;
        while up != 0 {
            let i = w * 64 + up.trailing_zeros() as usize;
            up &= up - 1;
            let idx = f.index(i);
            if idx == 0 {
                low_dis += 1;
            }
            if idx == n_mu {
                high_dis += 1;
            }
            if !f.step_up(i) {
                capped_high += 1;
            }
        }
        while down != 0 {
            let i = w * 64 + down.trailing_zeros() as usize;
            down &= down - 1;
            let idx = f.index(i);
            if idx == 0 {
                low_dis += 1;
            }
            if idx == n_mu {
                high_dis += 1;
            }
            if !f.step_down(i) {
                capped_low += 1;
            }
        }
    }
    out.mu = f.mu();
    out.pre_clamp_delta_ticks = delta;
    out.capped_low = capped_low;
    out.capped_high = capped_high;
    out.low_boundary_disagreements = low_dis;
    out.high_boundary_disagreements = high_dis;
}

/// Applies one update to `f` with the given offspring.
pub fn update_with_offspring(
    f: &mut FrequencyVector,
    x1: &BitString,
    x2: &BitString,
    fitness: &FitnessSpec,
) -> StepOutcome {
    let mut out = StepOutcome::empty(f.n(), f.mu());
    out.x1 = x1.clone();
    out.x2 = x2.clone();
    update_in_place(f, fitness, &mut out);
    out
}

/// One full iteration from `f_t`, returning `f_{t+1}` and the bookkeeping.
pub fn cga_step(
    f: &FrequencyVector,
    fitness: &FitnessSpec,
    params: &CgaParams,
    rng: &mut CgaRng,
) -> (FrequencyVector, StepOutcome) {
    debug_assert_eq!(f.n(), params.n());
    debug_assert_eq!(fitness.n(), params.n());
    let thresholds = f.thresholds();
    let mut next = f.clone();
    let mut out = StepOutcome::empty(f.n(), f.mu());
    sample_into(&next, &thresholds, rng, &mut out.x1);
    sample_into(&next, &thresholds, rng, &mut out.x2);
    update_in_place(&mut next, fitness, &mut out);
    (next, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Optimum,
    TargetDistance,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    pub budget: u64,
    pub stop_at_optimum: bool,
    /// Stop once `D_t <= target`.
    pub target_distance: Option<f64>,
}

impl StopRule {
    pub fn optimum(budget: u64) -> Self {
        StopRule {
            budget,
            stop_at_optimum: true,
            target_distance: None,
        }
    }

    pub fn from_params(params: &CgaParams) -> Self {
        Self::optimum(params.max_iterations())
    }

    pub fn budget_only(budget: u64) -> Self {
        StopRule {
            budget,
            stop_at_optimum: false,
            target_distance: None,
        }
    }

    pub fn with_target_distance(mut self, target: f64) -> Self {
        self.target_distance = Some(target);
        self
    }

    fn target_reached(&self, f: &FrequencyVector) -> bool {
        self.target_distance
            .is_some_and(|d| f.distance_ticks() as f64 <= d * f.mu() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub hit_optimum: bool,
    pub stop_reason: StopReason,
    /// Index of the last iteration performed (the hitting iteration on success).
    pub iterations_used: u64,
    pub samples_used: u64,
    pub final_distance: f64,
    pub final_distance_ticks: u64,
    pub gap_samples: u64,
    pub trace: Option<RunTrace>,
}

/// Hooks called around every iteration of [`Cga::run`].
pub trait StepObserver {
    fn on_start(&mut self, _f: &FrequencyVector) {}
    /// Called with `f_{t-1}` before iteration `t` samples.
    fn before_step(&mut self, _t: u64, _f: &FrequencyVector) {}
    /// Called with `f_t` after iteration `t` updated (not called on the hitting iteration).
    fn after_step(&mut self, _t: u64, _outcome: &StepOutcome, _f: &FrequencyVector) {}
}

impl StepObserver for () {}

impl<A: StepObserver, B: StepObserver> StepObserver for (A, B) {
    fn on_start(&mut self, f: &FrequencyVector) {
        self.0.on_start(f);
        self.1.on_start(f);
    }
    fn before_step(&mut self, t: u64, f: &FrequencyVector) {
        self.0.before_step(t, f);
        self.1.before_step(t, f);
    }
    fn after_step(&mut self, t: u64, outcome: &StepOutcome, f: &FrequencyVector) {
        self.0.after_step(t, outcome, f);
        self.1.after_step(t, outcome, f);
    }
}

impl<O: StepObserver + ?Sized> StepObserver for &mut O {
    fn on_start(&mut self, f: &FrequencyVector) {
        (**self).on_start(f);
    }
    fn before_step(&mut self, t: u64, f: &FrequencyVector) {
        (**self).before_step(t, f);
    }
    fn after_step(&mut self, t: u64, outcome: &StepOutcome, f: &FrequencyVector) {
        (**self).after_step(t, outcome, f);
    }
}

/// A running cGA instance owning its model and random stream.
pub struct Cga {
    params: CgaParams,
    f: FrequencyVector,
    thresholds: Vec<u64>,
    rng: CgaRng,
    t: u64,
    outcome: StepOutcome,
}

impl Cga {
    pub fn new(params: &CgaParams) -> Self {
        Self::with_frequencies(params, FrequencyVector::uniform(params))
            .expect("uniform vector matches params")
    }

    pub fn with_frequencies(params: &CgaParams, f: FrequencyVector) -> crate::Result<Self> {
        if f.n() != params.n() || f.mu() != params.mu() {
            return Err(crate::Error::DimensionMismatch {
                expected: params.n(),
                actual: f.n(),
            });
        }
        Ok(Cga {
            thresholds: f.thresholds(),
            outcome: StepOutcome::empty(params.n(), params.mu()),
            rng: rng_from_seed(params.seed()),
            params: params.clone(),
            f,
            t: 0,
        })
    }

    pub fn params(&self) -> &CgaParams {
        &self.params
    }

    pub fn frequencies(&self) -> &FrequencyVector {
        &self.f
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn last_outcome(&self) -> &StepOutcome {
        &self.outcome
    }

    fn sample_offspring(&mut self) {
        sample_into(&self.f, &self.thresholds, &mut self.rng, &mut self.outcome.x1);
        sample_into(&self.f, &self.thresholds, &mut self.rng, &mut self.outcome.x2);
    }

    /// Performs one iteration unconditionally.
    pub fn step(&mut self, fitness: &FitnessSpec) -> &StepOutcome {
        self.sample_offspring();
        update_in_place(&mut self.f, fitness, &mut self.outcome);
        self.t += 1;
        &self.outcome
    }

    /// Iterates until the stop rule fires. The optimum is checked on both offspring.
    pub fn run<O: StepObserver>(
        &mut self,
        fitness: &FitnessSpec,
        stop: &StopRule,
        observer: &mut O,
    ) -> RunResult {
        debug_assert_eq!(fitness.n(), self.params.n());
        observer.on_start(&self.f);
        let start = self.t;
        let mut gap_samples = 0u64;
        let finish = |cga: &Cga, reason: StopReason, samples: u64, gap: u64| RunResult {
            hit_optimum: reason == StopReason::Optimum,
            stop_reason: reason,
            iterations_used: cga.t - start,
            samples_used: samples,
            final_distance: cga.f.distance(),
            final_distance_ticks: cga.f.distance_ticks(),
            gap_samples: gap,
            trace: None,
        };
        if stop.target_reached(&self.f) {
            return finish(self, StopReason::TargetDistance, 0, 0);
        }
        while self.t - start < stop.budget {
            let t = self.t + 1;
            observer.before_step(t, &self.f);
            self.sample_offspring();
            if stop.stop_at_optimum {
                let first = fitness.is_optimum(&self.outcome.x1);
                if first || fitness.is_optimum(&self.outcome.x2) {
                    self.t = t;
                    let used = self.t - start;
                    let samples = 2 * used - first as u64;
                    return finish(self, StopReason::Optimum, samples, gap_samples);
                }
            }
            update_in_place(&mut self.f, fitness, &mut self.outcome);
            self.t = t;
            gap_samples += self.outcome.gap_samples as u64;
            observer.after_step(t, &self.outcome, &self.f);
            if stop.target_reached(&self.f) {
                let samples = 2 * (self.t - start);
                return finish(self, StopReason::TargetDistance, samples, gap_samples);
            }
        }
        let samples = 2 * (self.t - start);
        finish(self, StopReason::Budget, samples, gap_samples)
    }
}

/// Runs from the uniform model, recording a trace when `params` asks for one.
pub fn run_cga(params: &CgaParams, fitness: &FitnessSpec, stop: &StopRule) -> RunResult {
    run_cga_from(params, FrequencyVector::uniform(params), fitness, stop)
        .expect("uniform vector matches params")
}

pub fn run_cga_from(
    params: &CgaParams,
    init: FrequencyVector,
    fitness: &FitnessSpec,
    stop: &StopRule,
) -> crate::Result<RunResult> {
    let mut cga = Cga::with_frequencies(params, init)?;
    if params.record_trace() {
        let mut recorder = TraceRecorder::new(params.trace_stride(), None);
        let mut result = cga.run(fitness, stop, &mut recorder);
        result.trace = Some(recorder.finish());
        Ok(result)
    } else {
        Ok(cga.run(fitness, stop, &mut ()))
    }
}
