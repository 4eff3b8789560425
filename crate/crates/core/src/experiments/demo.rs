//! One-step domination counterexamples and the empirical drift of the exponential potential.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats;
use crate::engine::{cga_step, Cga, StepObserver, StepOutcome, StopRule};
use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;
use crate::frequency::FrequencyVector;
use crate::oracle::exact_step_expectation;
use crate::params::{make_params, MuPolicy};
use crate::rng::{derive_replicate_seed, rng_from_seed};
use crate::trace::{Potential, RunTrace, TraceRecorder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DominationSpec {
    /// Even; the population size is `mu = n`.
    pub n: usize,
    /// Jump size of the function stepped from `1/2`.
    pub k: usize,
    pub replicates: u64,
    pub z: f64,
    /// Dimension of the exact comparison, at most 12.
    pub exact_n: usize,
    pub exact_k: usize,
}

impl Default for DominationSpec {
    fn default() -> Self {
        DominationSpec {
            n: 200,
            k: 10,
            replicates: 100_000,
            z: stats::Z_99,
            exact_n: 10,
            exact_k: 2,
        }
    }
}

impl DominationSpec {
    pub fn quick() -> Self {
        DominationSpec {
            replicates: 10_000,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    fn of(data: &[f64], z: f64) -> Self {
        let (ci_low, ci_high) = stats::mean_ci(data, z);
        Estimate {
            mean: stats::mean(data),
            ci_low,
            ci_high,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub n: usize,
    pub mu: u64,
    pub replicates: u64,
    /// `d(f~, x*)` after one jump step from `1/2 * 1_n`; starts at `n/2`.
    pub f_distance: Estimate,
    /// `d(g~, y*)` after one OneMax step from the vector with half its entries at
    /// `1/n + 1/mu` and half at `1 - 1/n - 1/mu`; also starts at `n/2`.
    pub g_distance: Estimate,
    /// `f_distance.ci_high < g_distance.ci_low`.
    pub separated: bool,
    pub g_l1_change: Estimate,
    /// `Σ_i 2 g_i (1 - g_i) / mu`.
    pub g_l1_change_exact: f64,
    /// `4 / mu`.
    pub g_l1_change_bound: f64,
    pub exact: ExactComparison,
}

/// `Pr[f~_1 = 1/2 + 1/mu]` from `f = (1/2, 1/n, ..., 1/n)` on a jump function
/// against the same probability from `g = 1/2 * 1_n` on OneMax, both exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    pub n: usize,
    pub mu: u64,
    pub k: usize,
    pub prob_f: f64,
    pub prob_g: f64,
    /// `1/4 + 1/(4 e^2)`.
    pub lower_bound: f64,
    pub f_above_bound: bool,
    pub f_above_g: bool,
    /// `E[‖g~ - g‖₁]` for the boundary-adjacent `g` of the Monte Carlo demo, at this `n`.
    pub boundary_l1_change: f64,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.separated && self.exact.f_above_g && self.exact.f_above_bound && self.g_l1_change_exact <= self.g_l1_change_bound
    }
}

pub fn exact_comparison(n: usize, k: usize) -> Result<ExactComparison> {
    let p = make_params(n, n as u64, MuPolicy::Reject)?;
    let half = p.n_mu() / 2;
    let mut idx = vec![0u32; n];
    idx[0] = half;
    let f = FrequencyVector::from_indices(&p, idx)?;
    let g = FrequencyVector::uniform(&p);
    let ef = exact_step_expectation(&f, &FitnessSpec::jump(n, k)?)?;
    let eg = exact_step_expectation(&g, &FitnessSpec::onemax(n)?)?;
    let b = FrequencyVector::from_indices(&p, (0..n).map(|i| if i < n / 2 { 1 } else { p.n_mu() - 1 }).collect())?;
    let eb = exact_step_expectation(&b, &FitnessSpec::onemax(n)?)?;
    let e2 = std::f64::consts::E.powi(2);
    let lower_bound = 0.25 + 0.25 / e2;
    Ok(ExactComparison {
        n,
        mu: p.mu(),
        k,
        prob_f: ef.prob_up[0],
        prob_g: eg.prob_up[0],
        lower_bound,
        f_above_bound: ef.prob_up[0] >= lower_bound,
        f_above_g: ef.prob_up[0] > eg.prob_up[0],
        boundary_l1_change: eb.expected_l1_change,
    })
}

pub fn run_domination_demo(spec: &DominationSpec, seed: u64) -> Result<DominationReport> {
    let n = spec.n;
    if !n.is_multiple_of(2) || n < 4 {
        return Err(Error::Config(format!("the domination demo needs an even n >= 4, got {n}")));
    }
    if spec.replicates < 2 {
        return Err(Error::Config("replicates must be at least 2".into()));
    }
    let params = make_params(n, n as u64, MuPolicy::Reject)?;
    let mu = params.mu();
    let top = params.n_mu();
    let f0 = FrequencyVector::uniform(&params);
    let g0 = FrequencyVector::from_indices(&params, (0..n).map(|i| if i < n / 2 { 1 } else { top - 1 }).collect())?;
    let jump = FitnessSpec::jump(n, spec.k)?;
    let onemax = FitnessSpec::onemax(n)?;
    let (fseed, gseed) = (derive_replicate_seed(seed, 1), derive_replicate_seed(seed, 2));
    let l1 = |a: &FrequencyVector, b: &FrequencyVector| -> f64 {
        let ticks: u64 = a.indices().iter().zip(b.indices()).map(|(&x, &y)| x.abs_diff(y) as u64).sum();
        ticks as f64 / mu as f64
    };
    let samples: Vec<(f64, f64, f64)> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let (f1, _) = cga_step(&f0, &jump, &params, &mut rng_from_seed(derive_replicate_seed(fseed, r)));
            let (g1, _) = cga_step(&g0, &onemax, &params, &mut rng_from_seed(derive_replicate_seed(gseed, r)));
            (f1.distance(), g1.distance(), l1(&g1, &g0))
        })
        .collect();
    let fd: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let gd: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let gl: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let f_distance = Estimate::of(&fd, spec.z);
    let g_distance = Estimate::of(&gd, spec.z);
    let g_exact: f64 = g0.values().iter().map(|p| 2.0 * p * (1.0 - p)).sum::<f64>() / mu as f64;
    Ok(DominationReport {
        n,
        mu,
        replicates: spec.replicates,
        separated: f_distance.ci_high < g_distance.ci_low,
        f_distance,
        g_distance,
        g_l1_change: Estimate::of(&gl, spec.z),
        g_l1_change_exact: g_exact,
        g_l1_change_bound: 4.0 / mu as f64,
        exact: exact_comparison(spec.exact_n, spec.exact_k)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QuantityRow<'a> {
    quantity: &'a str,
    estimate: f64,
    ci_low: f64,
    ci_high: f64,
}

/// One row per reported quantity; exact values repeat the estimate in both CI columns.
pub fn write_domination_csv<W: Write>(r: &DominationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let est = |quantity, e: &Estimate| QuantityRow {
        quantity,
        estimate: e.mean,
        ci_low: e.ci_low,
        ci_high: e.ci_high,
    };
    let exact = |quantity, v: f64| QuantityRow {
        quantity,
        estimate: v,
        ci_low: v,
        ci_high: v,
    };
    for row in [
        est("f_distance", &r.f_distance),
        est("g_distance", &r.g_distance),
        est("g_l1_change", &r.g_l1_change),
        exact("g_l1_change_exact", r.g_l1_change_exact),
        exact("g_l1_change_bound", r.g_l1_change_bound),
        exact("small_prob_f", r.exact.prob_f),
        exact("small_prob_g", r.exact.prob_g),
        exact("small_lower_bound", r.exact.lower_bound),
    ] {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialSpec {
    pub n: usize,
    pub k: usize,
    pub mu: u64,
    pub c: f64,
    pub replicates: u64,
    pub budget: u64,
    pub bin_width: f64,
    /// Bins with fewer observations are reported but not judged.
    pub min_observations: u64,
    /// Stride of the trace kept for replicate 0.
    pub trace_stride: u64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec {
            n: 50,
            k: 8,
            mu: 100,
            c: 0.05,
            replicates: 20,
            budget: 100_000,
            bin_width: 1.0,
            min_observations: 500,
            trace_stride: 100,
        }
    }
}

impl PotentialSpec {
    pub fn quick() -> Self {
        PotentialSpec {
            replicates: 4,
            budget: 20_000,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftBin {
    pub d_low: f64,
    pub d_high: f64,
    pub count: u64,
    pub mean: f64,
    pub std_error: f64,
    pub judged: bool,
    /// `mean <= 2 + 3 std_error`; vacuous for unjudged bins.
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialReport {
    pub y_max: f64,
    pub bins: Vec<DriftBin>,
    pub trace: RunTrace,
}

impl PotentialReport {
    pub fn holds(&self) -> bool {
        self.bins.iter().all(|b| b.holds)
    }

    pub fn judged_bins(&self) -> usize {
        self.bins.iter().filter(|b| b.judged).count()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    sum: f64,
    sum_sq: f64,
}

/// Accumulates `Y_{t+1} - Y_t` over steps with `Y_t < Y_max`, keyed by the bin of `D_t`.
struct DriftObserver {
    potential: Potential,
    width: f64,
    before: f64,
    bins: BTreeMap<i64, Moments>,
}

impl StepObserver for DriftObserver {
    fn before_step(&mut self, _t: u64, f: &FrequencyVector) {
        self.before = f.distance();
    }

    fn after_step(&mut self, _t: u64, _outcome: &StepOutcome, f: &FrequencyVector) {
        let y0 = self.potential.value(self.before);
        if y0 >= self.potential.max() {
            return;
        }
        let dy = self.potential.value(f.distance()) - y0;
        let m = self.bins.entry((self.before / self.width).floor() as i64).or_default();
        m.count += 1;
        m.sum += dy;
        m.sum_sq += dy * dy;
    }
}

pub fn run_potential_trace(spec: &PotentialSpec, seed: u64) -> Result<PotentialReport> {
    let potential = Potential::new(spec.c, spec.k)?;
    if !(spec.bin_width > 0.0) {
        return Err(Error::Config("bin_width must be positive".into()));
    }
    let params = make_params(spec.n, spec.mu, MuPolicy::Reject)?;
    let fitness = FitnessSpec::jump(spec.n, spec.k)?;
    let stop = StopRule::budget_only(spec.budget);
    let per_run: Vec<(BTreeMap<i64, Moments>, Option<RunTrace>)> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let p = params.clone().with_seed(derive_replicate_seed(seed, r));
            let mut obs = DriftObserver {
                potential,
                width: spec.bin_width,
                before: 0.0,
                bins: BTreeMap::new(),
            };
            let mut cga = Cga::new(&p);
            if r == 0 {
                let mut rec = TraceRecorder::new(spec.trace_stride, Some(potential));
                cga.run(&fitness, &stop, &mut (&mut obs, &mut rec));
                (obs.bins, Some(rec.finish()))
            } else {
                cga.run(&fitness, &stop, &mut obs);
                (obs.bins, None)
            }
        })
        .collect();
    let mut merged: BTreeMap<i64, Moments> = BTreeMap::new();
    let mut trace = RunTrace::default();
    for (bins, t) in per_run {
        for (k, m) in bins {
            let e = merged.entry(k).or_default();
            e.count += m.count;
            e.sum += m.sum;
            e.sum_sq += m.sum_sq;
        }
        if let Some(t) = t {
            trace = t;
        }
    }
    let bins = merged
        .into_iter()
        .map(|(key, m)| {
            let c = m.count as f64;
            let mean = m.sum / c;
            let var = if m.count > 1 { ((m.sum_sq - c * mean * mean) / (c - 1.0)).max(0.0) } else { 0.0 };
            let std_error = (var / c).sqrt();
            let judged = m.count >= spec.min_observations;
            DriftBin {
                d_low: key as f64 * spec.bin_width,
                d_high: (key + 1) as f64 * spec.bin_width,
                count: m.count,
                mean,
                std_error,
                judged,
                holds: !judged || mean <= 2.0 + 3.0 * std_error,
            }
        })
        .collect();
    Ok(PotentialReport {
        y_max: potential.max(),
        bins,
        trace,
    })
}

pub fn write_drift_csv<W: Write>(bins: &[DriftBin], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for b in bins {
        w.serialize(b)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_comparison_direction() {
        let e = exact_comparison(10, 2).unwrap();
        assert!(e.f_above_bound && e.f_above_g, "{e:?}");
        assert!((e.prob_g - 0.25).abs() < 0.1);
        // n * (1/mu) * 2 * (2/n) * (1 - 2/n) with mu = n = 10.
        assert!((e.boundary_l1_change - 0.32).abs() < 1e-12);
    }

    #[test]
    fn small_domination_demo() {
        let spec = DominationSpec {
            n: 40,
            k: 4,
            replicates: 4_000,
            exact_n: 6,
            exact_k: 2,
            ..DominationSpec::default()
        };
        let r = run_domination_demo(&spec, 11).unwrap();
        assert_eq!(r.mu, 40);
        assert!(r.f_distance.mean < 20.0 && r.g_distance.mean <= 20.0 + 1e-9);
        assert!(r.separated, "{r:?}");
        let tol = 5.0 * (r.g_l1_change.ci_high - r.g_l1_change.mean);
        assert!((r.g_l1_change.mean - r.g_l1_change_exact).abs() <= tol);
        let again = run_domination_demo(&spec, 11).unwrap();
        assert_eq!(r, again);
        assert!(run_domination_demo(&DominationSpec { n: 41, ..spec }, 1).is_err());
    }

    #[test]
    fn potential_bins() {
        let spec = PotentialSpec {
            replicates: 2,
            budget: 3_000,
            min_observations: 50,
            ..PotentialSpec::default()
        };
        let r = run_potential_trace(&spec, 5).unwrap();
        assert!(r.holds());
        assert!(r.judged_bins() > 0);
        assert!(r.bins.iter().all(|b| b.d_low > 2.0 - 1.0));
        assert_eq!(r.trace.records[0].t, 0);
        assert!(r.trace.records.iter().all(|t| t.y.is_some()));
    }
}
