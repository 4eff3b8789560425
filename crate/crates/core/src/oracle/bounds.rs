//! Exact evaluation of the probability bounds used in the runtime analysis.
//! Every check returns both sides and whether the inequality holds.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::pmf::{poisson_binomial_pmf, prob_sample_point, PmfVector};
use crate::bits::BitString;
use crate::error::{Error, Result};

/// Relative slack for floating-point comparisons of sides that can be equal.
pub const REL_SLACK: f64 = 1e-12;
/// Absolute slack covering the DP's normalization budget.
pub const ABS_SLACK: f64 = 1e-14;

pub fn le_with_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REL_SLACK * rhs.abs() + ABS_SLACK
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    /// `lhs <= rhs`.
    pub fn upper(lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            lhs,
            rhs,
            holds: le_with_slack(lhs, rhs),
        }
    }

    /// `lhs >= rhs`.
    pub fn lower(lhs: f64, rhs: f64) -> Self {
        BoundCheck {
            lhs,
            rhs,
            holds: le_with_slack(rhs, lhs),
        }
    }
}

/// `Pr[x = x*] <= exp(-‖x* - f‖₁)`.
pub fn check_lopt_ub(f: &[f64], optimum: &BitString) -> Result<BoundCheck> {
    let lhs = prob_sample_point(f, optimum)?;
    let d: f64 = f
        .iter()
        .zip(optimum.iter())
        .map(|(&p, b)| if b { 1.0 - p } else { p })
        .sum();
    Ok(BoundCheck::upper(lhs, (-d).exp()))
}

/// `Pr[x = 1...1] >= c^(D / (1 - c))` for `f ∈ [c, 1]^n`.
pub fn check_lopt(f: &[f64], c: f64) -> Result<BoundCheck> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("c must lie in (0, 1), got {c}")));
    }
    if let Some((i, p)) = f.iter().enumerate().find(|(_, &p)| !(c..=1.0).contains(&p)) {
        return Err(Error::Precondition(format!("f[{i}] = {p} is outside [{c}, 1]")));
    }
    let lhs: f64 = f.iter().product();
    let d = f.len() as f64 - f.iter().sum::<f64>();
    Ok(BoundCheck::lower(lhs, c.powf(d / (1.0 - c))))
}

/// `Pr[‖x¹‖₁ ≠ ‖x²‖₁] = 1 - Σ_j Pr[‖x‖₁ = j]²`.
pub fn prob_distinct_norms(f: &[f64]) -> Result<f64> {
    let pmf = poisson_binomial_pmf(f)?;
    Ok(distinct_norms_from_pmf(&pmf))
}

pub fn distinct_norms_from_pmf(pmf: &PmfVector) -> f64 {
    1.0 - pmf.probs().iter().map(|p| p * p).sum::<f64>()
}

/// Whether `f ∈ [1/n, 1 - 1/n]^m` with `m ∈ [n/2..n]`.
pub fn ldiff_admissible(f: &[f64], n: usize) -> bool {
    let m = f.len();
    let lo = 1.0 / n as f64;
    let hi = 1.0 - lo;
    2 * m >= n && m <= n && f.iter().all(|&p| p >= lo && p <= hi)
}

/// `Pr[‖x¹‖₁ ≠ ‖x²‖₁] >= 1/16` under the admissibility hypotheses.
pub fn check_ldiff(f: &[f64], n: usize) -> Result<BoundCheck> {
    if !ldiff_admissible(f, n) {
        return Err(Error::Precondition(format!(
            "need m = {} in [n/2..n] and entries in [1/n, 1 - 1/n] for n = {n}",
            f.len()
        )));
    }
    Ok(BoundCheck::lower(prob_distinct_norms(f)?, 1.0 / 16.0))
}

/// `Pr[n - k < ‖x‖₁ < n]`, plus `Pr[‖x‖₁ = n]` when `include_optimum`.
pub fn gap_probability(f: &[f64], k: usize, include_optimum: bool) -> Result<f64> {
    let pmf = poisson_binomial_pmf(f)?;
    Ok(gap_probability_from_pmf(&pmf, k, include_optimum))
}

pub fn gap_probability_from_pmf(pmf: &PmfVector, k: usize, include_optimum: bool) -> f64 {
    let n = pmf.n();
    let start = (n + 1).saturating_sub(k.max(1)).max(1);
    let gap: f64 = if k <= 1 { 0.0 } else { pmf.probs()[start..n].iter().sum() };
    if include_optimum {
        gap + pmf.probs()[n]
    } else {
        gap
    }
}

/// `Pr[x ∈ G⁺] <= exp(-D/8)` when `D >= 2k`.
pub fn check_gap_bound(f: &[f64], k: usize) -> Result<BoundCheck> {
    let d = f.len() as f64 - f.iter().sum::<f64>();
    if d < 2.0 * k as f64 {
        return Err(Error::Precondition(format!("D = {d} is below 2k = {}", 2 * k)));
    }
    Ok(BoundCheck::upper(gap_probability(f, k, true)?, (-d / 8.0).exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomialTailCheck {
    pub exact_tail: f64,
    pub bound: f64,
    /// Decided in exact integer arithmetic.
    pub holds: bool,
}

fn binomial(n: u32, k: u32) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    // Scale so both fit comfortably in f64 before dividing.
    let shift = den.bits().saturating_sub(60);
    let n = (num >> shift).to_f64().unwrap_or(f64::INFINITY);
    let d = (den >> shift).to_f64().unwrap_or(f64::INFINITY);
    n / d
}

/// `Pr[Bin(n, p) >= k] <= C(n, k) p^k` for rational `p = p_num / p_den`.
pub fn check_binomial_tail_bound(n: u32, p_num: u64, p_den: u64, k: u32) -> Result<BinomialTailCheck> {
    if p_den == 0 || p_num > p_den {
        return Err(Error::InvalidParameter(format!("p = {p_num}/{p_den} is not a probability")));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    if n > 64 {
        return Err(Error::TooLargeForEnumeration { n: n as usize, limit: 64 });
    }
    let a = BigUint::from(p_num);
    let b = BigUint::from(p_den - p_num);
    let den = BigUint::from(p_den).pow(n);
    // Everything is scaled by p_den^n.
    let mut tail = BigUint::zero();
    for j in k..=n {
        tail += binomial(n, j) * a.pow(j) * b.pow(n - j);
    }
    let bound = binomial(n, k) * a.pow(k) * BigUint::from(p_den).pow(n - k);
    Ok(BinomialTailCheck {
        exact_tail: ratio(&tail, &den),
        bound: ratio(&bound, &den),
        holds: tail <= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTailReport {
    pub d: f64,
    pub d_minus: f64,
    pub d_plus: f64,
    pub delta: f64,
    pub delta_tilde: f64,
    /// `Pr[d(x) >= (1 + δ) D⁺]` vs `exp(-min(δ², δ) D⁺ / 3)`.
    pub upper: BoundCheck,
    /// `Pr[d(x) <= (1 - δ̃) D⁻]` vs `exp(-δ̃² D⁻ / 2)`.
    pub lower: BoundCheck,
}

impl SampleTailReport {
    pub fn holds(&self) -> bool {
        self.upper.holds && self.lower.holds
    }
}

/// Both deviation bounds for `d(x) = n - ‖x‖₁` with `D⁻ = D⁺ = D`.
pub fn check_chernoff_sample_bounds(f: &[f64], delta: f64, delta_tilde: f64) -> Result<SampleTailReport> {
    let d = f.len() as f64 - f.iter().sum::<f64>();
    check_chernoff_sample_bounds_with(f, delta, delta_tilde, d, d)
}

pub fn check_chernoff_sample_bounds_with(
    f: &[f64],
    delta: f64,
    delta_tilde: f64,
    d_minus: f64,
    d_plus: f64,
) -> Result<SampleTailReport> {
    if !(delta >= 0.0) || !(0.0..=1.0).contains(&delta_tilde) {
        return Err(Error::InvalidParameter(format!(
            "need delta >= 0 and delta_tilde in [0, 1], got {delta}, {delta_tilde}"
        )));
    }
    let pmf = poisson_binomial_pmf(f)?;
    let n = f.len();
    let d = n as f64 - f.iter().sum::<f64>();
    if d_minus > d + 1e-12 || d_plus < d - 1e-12 {
        return Err(Error::Precondition(format!("need D⁻ <= D = {d} <= D⁺")));
    }
    let hi = (1.0 + delta) * d_plus;
    let lo = (1.0 - delta_tilde) * d_minus;
    // d(x) = n - j for one-count j.
    let (mut upper_tail, mut lower_tail) = (0.0, 0.0);
    for (j, &p) in pmf.probs().iter().enumerate() {
        let dist = (n - j) as f64;
        if dist >= hi {
            upper_tail += p;
        }
        if dist <= lo {
            lower_tail += p;
        }
    }
    let upper_bound = (-(delta * delta).min(delta) * d_plus / 3.0).exp();
    let lower_bound = (-delta_tilde * delta_tilde * d_minus / 2.0).exp();
    Ok(SampleTailReport {
        d,
        d_minus,
        d_plus,
        delta,
        delta_tilde,
        upper: BoundCheck::upper(upper_tail, upper_bound),
        lower: BoundCheck::upper(lower_tail, lower_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lopt_ub_examples() {
        let r = check_lopt_ub(&[0.5; 4], &"1111".parse().unwrap()).unwrap();
        assert_eq!(r.lhs, 0.0625);
        assert!((r.rhs - 0.1353352832366127).abs() < 1e-15);
        assert!(r.holds);
        let x: BitString = "1001".parse().unwrap();
        let r = check_lopt_ub(&[1.0, 0.0, 0.0, 1.0], &x).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        assert!(r.holds);
    }

    #[test]
    fn lopt_extreme_point_is_tight() {
        let third = 1.0 / 3.0;
        let r = check_lopt(&[third; 3], third).unwrap();
        assert!((r.lhs - 1.0 / 27.0).abs() < 1e-16);
        assert!((r.rhs - 1.0 / 27.0).abs() < 1e-15);
        assert!(r.holds);
        let r = check_lopt(&[1.0; 5], 0.4).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 1.0));
        assert!(check_lopt(&[0.2, 0.9], third).is_err());
    }

    #[test]
    fn distinct_norms_two_fair_coins() {
        assert_eq!(prob_distinct_norms(&[0.5, 0.5]).unwrap(), 0.625);
        assert!(check_ldiff(&[0.99; 100], 100).unwrap().holds);
        assert!(check_ldiff(&[0.5; 10], 30).is_err());
    }

    #[test]
    fn gap_probability_examples() {
        assert!((gap_probability(&[0.5; 4], 2, false).unwrap() - 0.25).abs() < 1e-15);
        assert!((gap_probability(&[0.5; 4], 2, true).unwrap() - 0.3125).abs() < 1e-15);
        assert_eq!(gap_probability(&[0.7; 9], 1, false).unwrap(), 0.0);
        // k = n: the gap is every level in 1..n-1.
        let all_inner = 1.0 - 2.0 * 0.5f64.powi(4);
        assert!((gap_probability(&[0.5; 4], 4, false).unwrap() - all_inner).abs() < 1e-15);
    }

    #[test]
    fn binomial_tail_examples() {
        let r = check_binomial_tail_bound(4, 1, 2, 2).unwrap();
        assert_eq!(r.exact_tail, 11.0 / 16.0);
        assert_eq!(r.bound, 1.5);
        assert!(r.holds);
        let r = check_binomial_tail_bound(7, 3, 10, 0).unwrap();
        assert_eq!((r.exact_tail, r.bound), (1.0, 1.0));
        assert!(r.holds);
        assert!(check_binomial_tail_bound(3, 4, 3, 1).is_err());
    }

    #[test]
    fn chernoff_fair_coins() {
        let r = check_chernoff_sample_bounds(&[0.5; 20], 1.0, 0.5).unwrap();
        assert_eq!(r.d, 10.0);
        assert!((r.upper.lhs - 2f64.powi(-20)).abs() < 1e-20);
        assert!((r.upper.rhs - (-10.0f64 / 3.0).exp()).abs() < 1e-15);
        assert!(r.holds());
        let r = check_chernoff_sample_bounds(&[0.3; 12], 0.0, 0.0).unwrap();
        assert_eq!(r.upper.rhs, 1.0);
        assert_eq!(r.lower.rhs, 1.0);
        assert!(r.holds());
    }
}
