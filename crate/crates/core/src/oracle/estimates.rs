//! Exact reports for quantities the analysis only bounds by unspecified constants.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pmf::poisson_binomial_pmf;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// `Pr[|‖x¹‖₁ - ‖x²‖₁| >= sqrt(D)/5]` for independent `x¹, x² ~ Sample(f)`.
pub fn norm_gap_probability(f: &[f64], d: f64) -> Result<f64> {
    let pmf = poisson_binomial_pmf(f)?;
    let probs = pmf.probs();
    let threshold = (d.sqrt() / 5.0).ceil().max(1.0) as usize;
    // suffix[j] = Pr[‖x‖₁ >= j]
    let mut suffix = vec![0.0; probs.len() + 1];
    for j in (0..probs.len()).rev() {
        suffix[j] = suffix[j + 1] + probs[j];
    }
    // |a - b| >= t  <=>  b >= a + t or a >= b + t; the two cases are disjoint.
    let one_sided: f64 = probs
        .iter()
        .enumerate()
        .map(|(a, &p)| p * suffix.get(a + threshold).copied().unwrap_or(0.0))
        .sum();
    Ok(2.0 * one_sided)
}

/// Deficits in `[0, 2/3]` summing to `d`, proportional to random weights.
fn random_deficits(n: usize, d: f64, rng: &mut impl Rng) -> Vec<f64> {
    let cap = 2.0 / 3.0;
    let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let mut deficits = vec![0.0; n];
    let mut fixed = vec![false; n];
    let mut remaining = d;
    loop {
        let total: f64 = weights.iter().zip(&fixed).filter(|(_, &f)| !f).map(|(w, _)| w).sum();
        let mut clipped = false;
        for i in 0..n {
            if !fixed[i] {
                deficits[i] = remaining * weights[i] / total;
                if deficits[i] > cap {
                    clipped = true;
                }
            }
        }
        if !clipped {
            return deficits;
        }
        for i in 0..n {
            if !fixed[i] && deficits[i] > cap {
                deficits[i] = cap;
                fixed[i] = true;
                weights[i] = 0.0;
                remaining -= cap;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormGapRow {
    pub d: u64,
    /// `"even"` or `"random-<trial>"`.
    pub family: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormGapEstimate {
    pub rows: Vec<NormGapRow>,
    /// The smallest probability seen: an empirical floor for the constant.
    pub minimum: f64,
}

/// Evaluates the probability on `f = (1 - D/n) 1_n` and on `trials` random
/// vectors in `[1/3, 1]^n` with `‖f‖₁ = n - D`, for every `D` on the grid.
pub fn estimate_norm_gap_constant(d_grid: &[u64], n: usize, trials: usize, seed: u64) -> Result<NormGapEstimate> {
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::new();
    for &d in d_grid {
        if d == 0 {
            return Err(Error::Precondition("D = 0 is excluded".into()));
        }
        if 3 * d > 2 * n as u64 {
            return Err(Error::Precondition(format!(
                "D = {d} exceeds 2n/3 = {}, no f in [1/3, 1]^n reaches it",
                2 * n / 3
            )));
        }
        let df = d as f64;
        let even = vec![1.0 - df / n as f64; n];
        rows.push(NormGapRow {
            d,
            family: "even".into(),
            probability: norm_gap_probability(&even, df)?,
        });
        for trial in 0..trials {
            let f: Vec<f64> = random_deficits(n, df, &mut rng).iter().map(|e| 1.0 - e).collect();
            rows.push(NormGapRow {
                d,
                family: format!("random-{trial}"),
                probability: norm_gap_probability(&f, df)?,
            });
        }
    }
    let minimum = rows.iter().map(|r| r.probability).fold(f64::INFINITY, f64::min);
    Ok(NormGapEstimate { rows, minimum })
}

/// The gap-probability constant `1 - 1/sqrt(2)` claimed in earlier work for `D >= k + c`.
pub const CLAIMED_GAP_BOUND: f64 = 0.293;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapClaimRow {
    pub n: usize,
    pub k: usize,
    pub c: usize,
    pub gap_probability: f64,
    pub exceeds_claim: bool,
}

/// Exact gap probability at `f = (n - k - c)/n * 1_n`, where `D = k + c`.
pub fn gap_claim_counter_check(n: usize, k: usize, c: usize) -> Result<GapClaimRow> {
    if k + c >= n {
        return Err(Error::InvalidParameter(format!("need k + c < n, got {k} + {c} >= {n}")));
    }
    let p = (n - k - c) as f64 / n as f64;
    let g = super::bounds::gap_probability(&vec![p; n], k, false)?;
    Ok(GapClaimRow {
        n,
        k,
        c,
        gap_probability: g,
        exceeds_claim: g > CLAIMED_GAP_BOUND,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::bounds::prob_distinct_norms;

    #[test]
    fn d_one_reduces_to_distinct_norms() {
        let f = vec![0.9; 10];
        let a = norm_gap_probability(&f, 1.0).unwrap();
        let b = prob_distinct_norms(&f).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a >= 1.0 / 16.0);
    }

    #[test]
    fn random_family_is_admissible() {
        let mut rng = rng_from_seed(1);
        for d in [1.0, 10.0, 60.0] {
            let e = random_deficits(100, d, &mut rng);
            assert!((e.iter().sum::<f64>() - d).abs() < 1e-9);
            assert!(e.iter().all(|&x| (0.0..=2.0 / 3.0 + 1e-12).contains(&x)));
        }
    }

    #[test]
    fn grid_report() {
        let r = estimate_norm_gap_constant(&[1, 4, 16, 64], 256, 3, 5).unwrap();
        assert_eq!(r.rows.len(), 16);
        assert!(r.minimum >= 0.05, "minimum {}", r.minimum);
        assert!(estimate_norm_gap_constant(&[0], 10, 0, 1).is_err());
    }

    #[test]
    fn gap_claim_fails_for_large_k() {
        // Pr[Bin(n, (k+c)/n) < k] is close to 1/2 when k dominates c.
        let row = gap_claim_counter_check(2000, 100, 5).unwrap();
        assert!(row.exceeds_claim, "{row:?}");
    }
}
