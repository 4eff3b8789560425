//! Exact one-iteration expectations by enumerating all `4^n` ordered offspring pairs.

use serde::{Deserialize, Serialize};

use super::bounds::BoundCheck;
use super::pmf::{point_probabilities, poisson_binomial_pmf};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;
use crate::frequency::FrequencyVector;

pub const PAIR_ENUMERATION_MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepExpectation {
    pub n: usize,
    pub mu: u64,
    /// `Pr[y¹_i = 1, y²_i = 0]`.
    pub prob_up: Vec<f64>,
    /// `Pr[y¹_i = 0, y²_i = 1]`.
    pub prob_down: Vec<f64>,
    /// `E[f_{i,t+1} - f_{it}]`, after clamping.
    pub per_bit_drift: Vec<f64>,
    /// `E[mu D_t - mu D_{t+1}]`.
    pub sum_drift: f64,
    /// `E[mu D_t - mu D'_{t+1}]`, before clamping.
    pub pre_clamp_drift: f64,
    /// `E[mu D_{t+1} - mu D'_{t+1}] = E[capped_high - capped_low]`.
    pub clamp_term: f64,
    /// `capped_low_pmf[j] = Pr[j coordinates capped at 1/n]`.
    pub capped_low_pmf: Vec<f64>,
    pub capped_high_pmf: Vec<f64>,
    /// `Pr[{x¹, x²} ∩ G ≠ ∅]`.
    pub gap_pair_prob: f64,
    /// `Pr[‖x¹‖₁ ≠ ‖x²‖₁]`.
    pub distinct_norm_prob: f64,
    /// `E[|‖x¹‖₁ - ‖x²‖₁|]`.
    pub expected_abs_norm_diff: f64,
    /// `E[‖f_{t+1} - f_t‖₁]`.
    pub expected_l1_change: f64,
}

impl StepExpectation {
    pub fn expected_capped_low(&self) -> f64 {
        mean(&self.capped_low_pmf)
    }

    pub fn expected_capped_high(&self) -> f64 {
        mean(&self.capped_high_pmf)
    }
}

fn mean(pmf: &[f64]) -> f64 {
    pmf.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
}

/// Exact expectation of one cGA iteration from `f`, including clamping.
pub fn exact_step_expectation(f: &FrequencyVector, fitness: &FitnessSpec) -> Result<StepExpectation> {
    let n = f.n();
    if n > PAIR_ENUMERATION_MAX_N {
        return Err(Error::TooLargeForEnumeration {
            n,
            limit: PAIR_ENUMERATION_MAX_N,
        });
    }
    if fitness.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: fitness.n(),
        });
    }
    let size = 1usize << n;
    let probs = point_probabilities(&f.values())?;
    let mut values = Vec::with_capacity(size);
    let mut gap = Vec::with_capacity(size);
    for m in 0..size {
        let x = BitString::from_u64(m as u64, n);
        values.push(fitness.value(&x));
        gap.push(fitness.in_gap(&x));
    }
    let ones: Vec<i32> = (0..size).map(|m| m.count_ones() as i32).collect();

    let mut up_weight = vec![0.0; size];
    let mut down_weight = vec![0.0; size];
    let (mut gap_pair, mut distinct, mut abs_diff) = (0.0, 0.0, 0.0);
    for a in 0..size {
        let pa = probs[a];
        if pa == 0.0 {
            continue;
        }
        for b in 0..size {
            let w = pa * probs[b];
            if w == 0.0 {
                continue;
            }
            let (win, lose) = if values[a] >= values[b] { (a, b) } else { (b, a) };
            up_weight[win & !lose] += w;
            down_weight[lose & !win] += w;
            if gap[a] || gap[b] {
                gap_pair += w;
            }
            let diff = (ones[a] - ones[b]).abs();
            if diff != 0 {
                distinct += w;
                abs_diff += w * diff as f64;
            }
        }
    }

    let n_mu = f.n_mu();
    let mut low_mask = 0usize;
    let mut high_mask = 0usize;
    for i in 0..n {
        if f.index(i) == 0 {
            low_mask |= 1 << i;
        }
        if f.index(i) == n_mu {
            high_mask |= 1 << i;
        }
    }
    let mut prob_up = vec![0.0; n];
    let mut prob_down = vec![0.0; n];
    let mut capped_low_pmf = vec![0.0; n + 1];
    let mut capped_high_pmf = vec![0.0; n + 1];
    for m in 0..size {
        let (u, d) = (up_weight[m], down_weight[m]);
        for i in 0..n {
            if m >> i & 1 == 1 {
                prob_up[i] += u;
                prob_down[i] += d;
            }
        }
        capped_high_pmf[(m & high_mask).count_ones() as usize] += u;
        capped_low_pmf[(m & low_mask).count_ones() as usize] += d;
    }

    let mu = f.mu() as f64;
    let mut per_bit_drift = vec![0.0; n];
    let (mut sum_drift, mut pre_clamp, mut l1) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let idx = f.index(i);
        let up = if idx < n_mu { prob_up[i] } else { 0.0 };
        let down = if idx > 0 { prob_down[i] } else { 0.0 };
        per_bit_drift[i] = (up - down) / mu;
        sum_drift += up - down;
        pre_clamp += prob_up[i] - prob_down[i];
        l1 += (up + down) / mu;
    }
    let clamp_term = mean(&capped_high_pmf) - mean(&capped_low_pmf);

    Ok(StepExpectation {
        n,
        mu: f.mu(),
        prob_up,
        prob_down,
        per_bit_drift,
        sum_drift,
        pre_clamp_drift: pre_clamp,
        clamp_term,
        capped_low_pmf,
        capped_high_pmf,
        gap_pair_prob: gap_pair,
        distinct_norm_prob: distinct,
        expected_abs_norm_diff: abs_diff,
        expected_l1_change: l1,
    })
}

/// Right-hand side of the per-bit OneMax drift bound
/// `2/11 * f_i (1 - f_i) / mu * (Σ_{j≠i} f_j (1 - f_j))^(-1/2)`.
pub fn lonemax2_bound(values: &[f64], i: usize, mu: u64) -> f64 {
    let var: f64 = values
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &p)| p * (1.0 - p))
        .sum();
    2.0 / 11.0 * values[i] * (1.0 - values[i]) / mu as f64 / var.sqrt()
}

/// Per-bit OneMax drift bound for every coordinate at least one step away from both boundaries.
pub fn check_lonemax2(f: &FrequencyVector) -> Result<Vec<(usize, BoundCheck)>> {
    let om = FitnessSpec::onemax(f.n())?;
    let e = exact_step_expectation(f, &om)?;
    let values = f.values();
    Ok((0..f.n())
        .filter(|&i| f.index(i) >= 1 && f.index(i) < f.n_mu())
        .map(|i| (i, BoundCheck::lower(e.per_bit_drift[i], lonemax2_bound(&values, i, f.mu()))))
        .collect())
}

/// Worst-case tail comparison `Pr[X >= j] <= Pr[Y >= j]` over all `j`.
/// Returns the pair of tails at the `j` with the smallest margin.
pub fn check_domination(x_pmf: &[f64], y_pmf: &[f64]) -> BoundCheck {
    let len = x_pmf.len().max(y_pmf.len());
    let tail = |pmf: &[f64], j: usize| -> f64 { pmf.get(j..).map_or(0.0, |s| s.iter().sum()) };
    let mut worst = BoundCheck::upper(0.0, 0.0);
    let mut worst_margin = f64::INFINITY;
    for j in 1..len {
        let (a, b) = (tail(x_pmf, j), tail(y_pmf, j));
        if b - a < worst_margin {
            worst_margin = b - a;
            worst = BoundCheck::upper(a, b);
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub low_vs_bin_ell: BoundCheck,
    pub low_vs_bin_n: BoundCheck,
    pub high_vs_bin_ell: BoundCheck,
    pub high_vs_bin_n: BoundCheck,
}

impl BoundaryReport {
    pub fn holds(&self) -> bool {
        self.low_vs_bin_ell.holds && self.low_vs_bin_n.holds && self.high_vs_bin_ell.holds && self.high_vs_bin_n.holds
    }
}

/// The number of capped coordinates at each boundary is dominated by
/// `Bin(ℓ, 2/n (1 - 1/n))` and by `Bin(n, 2/n)`.
pub fn check_lboundary(f: &FrequencyVector, fitness: &FitnessSpec) -> Result<BoundaryReport> {
    let e = exact_step_expectation(f, fitness)?;
    let n = f.n();
    let p = 2.0 / n as f64 * (1.0 - 1.0 / n as f64);
    let ell_low = f.indices().iter().filter(|&&i| i == 0).count();
    let ell_high = f.indices().iter().filter(|&&i| i == f.n_mu()).count();
    let bin = |m: usize, q: f64| poisson_binomial_pmf(&vec![q; m]).map(|pmf| pmf.probs().to_vec());
    let bin_n = bin(n, 2.0 / n as f64)?;
    Ok(BoundaryReport {
        low_vs_bin_ell: check_domination(&e.capped_low_pmf, &bin(ell_low, p)?),
        low_vs_bin_n: check_domination(&e.capped_low_pmf, &bin_n),
        high_vs_bin_ell: check_domination(&e.capped_high_pmf, &bin(ell_high, p)?),
        high_vs_bin_n: check_domination(&e.capped_high_pmf, &bin_n),
    })
}
