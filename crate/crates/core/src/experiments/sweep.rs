//! Runtime sweeps over grids of `(n, k, mu)` with seeded replicates.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats;
use crate::engine::{run_cga, StopRule};
use crate::error::{Error, Result};
use crate::fitness::{plateau, FitnessSpec};
use crate::params::{make_params, round_up_mu, MuPolicy};
use crate::rng::derive_replicate_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Onemax,
    Jump,
    /// Subjump with every gap level at the value of level `n - k`.
    Plateau,
}

impl Variant {
    pub fn build(self, n: usize, k: usize) -> Result<FitnessSpec> {
        match self {
            Variant::Onemax => FitnessSpec::onemax(n),
            Variant::Jump => FitnessSpec::jump(n, k),
            Variant::Plateau => plateau(n, k, k as i64),
        }
    }

    fn tag(self) -> u64 {
        match self {
            Variant::Onemax => 1,
            Variant::Jump => 2,
            Variant::Plateau => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Onemax => "onemax",
            Variant::Jump => "jump",
            Variant::Plateau => "plateau",
        }
    }
}

/// Iteration budget as a function of the cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    Fixed(u64),
    /// `factor * mu * sqrt(n)`.
    MuSqrtN(f64),
    /// `factor * n * ln(n)`.
    NLnN(f64),
}

impl BudgetRule {
    pub fn budget(&self, n: usize, mu: u64) -> u64 {
        let b = match *self {
            BudgetRule::Fixed(b) => return b.max(1),
            BudgetRule::MuSqrtN(c) => c * mu as f64 * (n as f64).sqrt(),
            BudgetRule::NLnN(c) => c * n as f64 * (n as f64).ln(),
        };
        (b.ceil() as u64).max(1)
    }
}

/// Population-size rules, each rounded up to a well-behaved value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuRule {
    Value(u64),
    /// `c * sqrt(n) * ln(n)`.
    SqrtNLnN(f64),
    /// `c * ln(n)`.
    LnN(f64),
}

impl MuRule {
    pub fn mu(&self, n: usize) -> Result<u64> {
        let requested = match *self {
            MuRule::Value(m) => m,
            MuRule::SqrtNLnN(c) => (c * (n as f64).sqrt() * (n as f64).ln()).ceil() as u64,
            MuRule::LnN(c) => (c * (n as f64).ln()).ceil() as u64,
        };
        round_up_mu(n, requested.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub mu: u64,
    pub success_rate: f64,
    pub median_iterations: f64,
    pub iqr: f64,
    #[serde(rename = "mean_final_D")]
    pub mean_final_d: f64,
    pub censored_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub row: SweepRow,
    pub budget: u64,
    /// Per replicate, in replicate order; censored runs enter at the budget.
    pub runtimes: Vec<u64>,
    pub successes: u64,
}

impl CellResult {
    pub fn runtimes_f64(&self) -> Vec<f64> {
        self.runtimes.iter().map(|&t| t as f64).collect()
    }
}

/// Seed of a cell, independent of its position in a grid.
pub fn cell_seed(master: u64, variant: Variant, n: usize, k: usize, mu: u64) -> u64 {
    let s = derive_replicate_seed(master, variant.tag());
    let s = derive_replicate_seed(s, n as u64);
    let s = derive_replicate_seed(s, k as u64);
    derive_replicate_seed(s, mu)
}

/// Runs `replicates` independent runs (in parallel, aggregated in replicate order).
pub fn run_cell(variant: Variant, n: usize, k: usize, mu: u64, budget: u64, replicates: u64, master: u64) -> Result<CellResult> {
    if replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    let fitness = variant.build(n, k)?;
    let base = make_params(n, mu, MuPolicy::Reject)?;
    let seed = cell_seed(master, variant, n, fitness.k(), mu);
    let stop = StopRule::optimum(budget);
    let results: Vec<(bool, u64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let p = base.clone().with_seed(derive_replicate_seed(seed, r));
            let res = run_cga(&p, &fitness, &stop);
            let t = if res.hit_optimum { res.iterations_used } else { budget };
            (res.hit_optimum, t, res.final_distance)
        })
        .collect();
    let runtimes: Vec<u64> = results.iter().map(|r| r.1).collect();
    let successes = results.iter().filter(|r| r.0).count() as u64;
    let t: Vec<f64> = runtimes.iter().map(|&x| x as f64).collect();
    let finals: Vec<f64> = results.iter().map(|r| r.2).collect();
    Ok(CellResult {
        row: SweepRow {
            n,
            k: fitness.k(),
            mu,
            success_rate: successes as f64 / replicates as f64,
            median_iterations: stats::median(&t),
            iqr: stats::iqr(&t),
            mean_final_d: stats::mean(&finals),
            censored_count: replicates - successes,
        },
        budget,
        runtimes,
        successes,
    })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn default_upper_grid() -> Vec<usize> {
    vec![100, 200, 400]
}

/// Desk-scale check of the `O(mu sqrt(n))` upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UpperSpec {
    pub n_grid: Vec<usize>,
    pub k: usize,
    /// One sweep per variant; OneMax always uses `k = 1`.
    pub variants: Vec<Variant>,
    pub mu_rule: MuRule,
    pub budget_rule: BudgetRule,
    pub replicates: u64,
    /// Run even when `k > ln(n)/20 - 1`, which every desk-scale `n` violates for `k >= 1`.
    pub override_k_hypothesis: bool,
}

impl Default for UpperSpec {
    fn default() -> Self {
        UpperSpec {
            n_grid: default_upper_grid(),
            k: 3,
            variants: vec![Variant::Jump, Variant::Onemax, Variant::Plateau],
            mu_rule: MuRule::SqrtNLnN(12.0),
            budget_rule: BudgetRule::MuSqrtN(20.0),
            replicates: 50,
            override_k_hypothesis: true,
        }
    }
}

impl UpperSpec {
    pub fn quick() -> Self {
        UpperSpec {
            n_grid: vec![50, 100],
            replicates: 10,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperResult {
    pub variant: Variant,
    pub cells: Vec<CellResult>,
    /// `median / (mu sqrt(n))` per cell.
    pub normalized_medians: Vec<f64>,
    pub warnings: Vec<String>,
}

impl UpperResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }

    pub fn min_success_rate(&self) -> f64 {
        self.cells.iter().map(|c| c.row.success_rate).fold(1.0, f64::min)
    }

    /// Largest over smallest normalized median.
    pub fn median_spread(&self) -> f64 {
        let max = self.normalized_medians.iter().copied().fold(f64::MIN, f64::max);
        let min = self.normalized_medians.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }
}

/// Largest `k` the upper-bound theorem covers: `floor(ln(n)/20) - 1`.
pub fn k_hypothesis_limit(n: usize) -> i64 {
    ((n as f64).ln() / 20.0).floor() as i64 - 1
}

pub fn run_upper_scaling(spec: &UpperSpec, master: u64) -> Result<Vec<UpperResult>> {
    if spec.variants.is_empty() {
        return Err(Error::Config("no variants to sweep".into()));
    }
    spec.variants.iter().map(|&v| run_upper_variant(spec, v, master)).collect()
}

fn run_upper_variant(spec: &UpperSpec, variant: Variant, master: u64) -> Result<UpperResult> {
    let k = if variant == Variant::Onemax { 1 } else { spec.k };
    let mut warnings = Vec::new();
    for &n in &spec.n_grid {
        let limit = k_hypothesis_limit(n);
        if k as i64 > limit {
            let msg = format!("k = {k} exceeds floor(ln({n})/20) - 1 = {limit}");
            if !spec.override_k_hypothesis {
                return Err(Error::Config(format!("{msg}; set override_k_hypothesis to run anyway")));
            }
            warnings.push(msg);
        }
    }
    let mut cells = Vec::new();
    let mut normalized = Vec::new();
    for &n in &spec.n_grid {
        let mu = spec.mu_rule.mu(n)?;
        let budget = spec.budget_rule.budget(n, mu);
        let cell = run_cell(variant, n, k, mu, budget, spec.replicates, master)?;
        normalized.push(cell.row.median_iterations / (mu as f64 * (n as f64).sqrt()));
        cells.push(cell);
    }
    Ok(UpperResult {
        variant,
        cells,
        normalized_medians: normalized,
        warnings,
    })
}

/// Desk-scale direction check of the `exp(Ω(k))` lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LowerSpec {
    pub n: usize,
    pub k_grid: Vec<usize>,
    pub mu_grid: Vec<u64>,
    pub budget: u64,
    pub replicates: u64,
    pub permutations: usize,
    pub variant: Variant,
}

impl Default for LowerSpec {
    fn default() -> Self {
        LowerSpec {
            n: 50,
            k_grid: vec![2, 4, 6, 8],
            mu_grid: vec![25, 50, 75, 125, 225, 350, 600, 1000],
            budget: 1_000_000,
            replicates: 20,
            permutations: 9_999,
            variant: Variant::Jump,
        }
    }
}

impl LowerSpec {
    pub fn quick() -> Self {
        LowerSpec {
            k_grid: vec![1, 2, 4],
            mu_grid: vec![25, 50, 100, 200],
            budget: 100_000,
            replicates: 10,
            permutations: 999,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCell {
    pub k: usize,
    pub mu: u64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerResult {
    pub cells: Vec<CellResult>,
    pub best: Vec<BestCell>,
    pub strictly_increasing: bool,
    /// Least-squares slope of `ln(best median)` on `k`.
    pub log_median_slope: f64,
    /// Slope of replicate-level `ln(runtime)` at each `k`'s best `mu`.
    pub replicate_slope: f64,
    pub p_value: f64,
}

impl LowerResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }
}

pub fn run_lower_exponential(spec: &LowerSpec, master: u64) -> Result<LowerResult> {
    if spec.k_grid.len() < 2 || spec.mu_grid.is_empty() {
        return Err(Error::Config("need at least two k values and one mu".into()));
    }
    let mut cells = Vec::new();
    let mut best = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &k in &spec.k_grid {
        let mut best_cell: Option<CellResult> = None;
        for &m in &spec.mu_grid {
            let mu = round_up_mu(spec.n, m)?;
            let cell = run_cell(spec.variant, spec.n, k, mu, spec.budget, spec.replicates, master)?;
            // Ties keep the smaller mu.
            if best_cell.as_ref().is_none_or(|b| cell.row.median_iterations < b.row.median_iterations) {
                best_cell = Some(cell.clone());
            }
            cells.push(cell);
        }
        let b = best_cell.expect("mu grid is non-empty");
        for &t in &b.runtimes {
            xs.push(k as f64);
            ys.push((t as f64).ln());
        }
        best.push(BestCell {
            k,
            mu: b.row.mu,
            median: b.row.median_iterations,
        });
    }
    let strictly_increasing = best.windows(2).all(|w| w[0].median < w[1].median);
    let kx: Vec<f64> = best.iter().map(|b| b.k as f64).collect();
    let ly: Vec<f64> = best.iter().map(|b| b.median.ln()).collect();
    let perm_seed = derive_replicate_seed(master, 0x9e37);
    Ok(LowerResult {
        cells,
        strictly_increasing,
        log_median_slope: stats::ls_slope(&kx, &ly),
        replicate_slope: stats::ls_slope(&xs, &ys),
        p_value: stats::permutation_p_value(&xs, &ys, spec.permutations, perm_seed),
        best,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MuArm {
    pub n: usize,
    pub mu_grid: Vec<u64>,
    pub budget_rule: BudgetRule,
    /// Asserted floor for `median / (mu sqrt(n))`.
    pub floor_constant: f64,
}

impl Default for MuArm {
    fn default() -> Self {
        MuArm {
            n: 256,
            mu_grid: vec![256, 512, 1024, 2048, 4096],
            budget_rule: BudgetRule::MuSqrtN(20.0),
            floor_constant: 0.5,
        }
    }
}

/// Floor check of the `Ω(n log n)` lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NlognSpec {
    pub n_grid: Vec<usize>,
    pub k: usize,
    pub mu_rule: MuRule,
    pub budget_rule: BudgetRule,
    pub replicates: u64,
    /// Asserted floor for `median / (n ln n)`.
    pub floor_constant: f64,
    pub mu_arm: Option<MuArm>,
}

impl Default for NlognSpec {
    fn default() -> Self {
        NlognSpec {
            n_grid: vec![128, 256, 512],
            k: 2,
            mu_rule: MuRule::LnN(4.0),
            budget_rule: BudgetRule::NLnN(100.0),
            replicates: 20,
            floor_constant: 1.0,
            mu_arm: Some(MuArm::default()),
        }
    }
}

impl NlognSpec {
    pub fn quick() -> Self {
        NlognSpec {
            n_grid: vec![32, 64, 128],
            replicates: 10,
            mu_arm: Some(MuArm {
                n: 64,
                mu_grid: vec![64, 256],
                ..MuArm::default()
            }),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlognResult {
    pub cells: Vec<CellResult>,
    /// `median / (n ln n)` per cell.
    pub ratios: Vec<f64>,
    pub nondecreasing: bool,
    pub mu_arm_cells: Vec<CellResult>,
    /// `median / (mu sqrt(n))` per mu-arm cell.
    pub mu_arm_ratios: Vec<f64>,
}

impl NlognResult {
    pub fn rows(&self) -> Vec<SweepRow> {
        self.cells.iter().chain(&self.mu_arm_cells).map(|c| c.row.clone()).collect()
    }
}

pub fn run_nlogn_floor(spec: &NlognSpec, master: u64) -> Result<NlognResult> {
    let mut cells = Vec::new();
    let mut ratios = Vec::new();
    for &n in &spec.n_grid {
        let mu = spec.mu_rule.mu(n)?;
        let cell = run_cell(Variant::Jump, n, spec.k, mu, spec.budget_rule.budget(n, mu), spec.replicates, master)?;
        ratios.push(cell.row.median_iterations / (n as f64 * (n as f64).ln()));
        cells.push(cell);
    }
    let nondecreasing = cells.windows(2).all(|w| w[0].row.median_iterations <= w[1].row.median_iterations);
    let (mut mu_arm_cells, mut mu_arm_ratios) = (Vec::new(), Vec::new());
    if let Some(arm) = &spec.mu_arm {
        for &m in &arm.mu_grid {
            let mu = round_up_mu(arm.n, m)?;
            let cell = run_cell(Variant::Jump, arm.n, spec.k, mu, arm.budget_rule.budget(arm.n, mu), spec.replicates, master)?;
            mu_arm_ratios.push(cell.row.median_iterations / (mu as f64 * (arm.n as f64).sqrt()));
            mu_arm_cells.push(cell);
        }
    }
    Ok(NlognResult {
        cells,
        ratios,
        nondecreasing,
        mu_arm_cells,
        mu_arm_ratios,
    })
}
