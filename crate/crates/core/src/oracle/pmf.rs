use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::frequency::FrequencyVector;

pub const DP_MAX_N: usize = 10_000;
pub const BRUTE_FORCE_MAX_N: usize = 20;
pub const RATIONAL_MAX_N: usize = 24;

/// Normalization budget for the floating-point DP.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// `probs[j] = Pr[‖x‖₁ = j]` for `x ~ Sample(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfVector {
    probs: Vec<f64>,
}

impl PmfVector {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.probs.iter().all(|&p| p >= 0.0) && (self.total() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// `Pr[‖x‖₁ >= j]`.
    pub fn at_least(&self, j: usize) -> f64 {
        self.probs.get(j..).map_or(0.0, |s| s.iter().sum())
    }

    /// `Pr[‖x‖₁ <= j]`.
    pub fn at_most(&self, j: usize) -> f64 {
        self.probs[..=j.min(self.n())].iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }
}

fn check_probabilities(f: &[f64]) -> Result<()> {
    if let Some((i, p)) = f.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!(
            "probability {p} at position {i} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// Exact O(n²) convolution DP over the bits.
pub fn poisson_binomial_pmf(f: &[f64]) -> Result<PmfVector> {
    if f.len() > DP_MAX_N {
        return Err(Error::TooLargeForEnumeration {
            n: f.len(),
            limit: DP_MAX_N,
        });
    }
    check_probabilities(f)?;
    let mut probs = vec![0.0; f.len() + 1];
    probs[0] = 1.0;
    for (i, &p) in f.iter().enumerate() {
        let q = 1.0 - p;
        for j in (1..=i + 1).rev() {
            probs[j] = probs[j] * q + probs[j - 1] * p;
        }
        probs[0] *= q;
    }
    Ok(PmfVector { probs })
}

/// `Pr[X = x]` for every `x`, indexed by the bit pattern (bit `i` of the index is `x_i`).
pub fn point_probabilities(f: &[f64]) -> Result<Vec<f64>> {
    if f.len() > BRUTE_FORCE_MAX_N {
        return Err(Error::TooLargeForEnumeration {
            n: f.len(),
            limit: BRUTE_FORCE_MAX_N,
        });
    }
    check_probabilities(f)?;
    let mut table = Vec::with_capacity(1 << f.len());
    table.push(1.0);
    for &p in f {
        let len = table.len();
        for m in 0..len {
            table.push(table[m] * p);
            table[m] *= 1.0 - p;
        }
    }
    Ok(table)
}

/// The one-count law by summing all `2^n` point probabilities.
pub fn pmf_brute_force(f: &[f64]) -> Result<PmfVector> {
    let table = point_probabilities(f)?;
    let mut probs = vec![0.0; f.len() + 1];
    for (m, p) in table.iter().enumerate() {
        probs[(m as u64).count_ones() as usize] += p;
    }
    Ok(PmfVector { probs })
}

/// Exact rational DP.
pub fn poisson_binomial_pmf_exact(f: &[BigRational]) -> Result<Vec<BigRational>> {
    if f.len() > RATIONAL_MAX_N {
        return Err(Error::TooLargeForEnumeration {
            n: f.len(),
            limit: RATIONAL_MAX_N,
        });
    }
    let zero = BigRational::zero();
    let one = BigRational::one();
    if f.iter().any(|p| *p < zero || *p > one) {
        return Err(Error::InvalidParameter("probability outside [0, 1]".into()));
    }
    let mut probs = vec![zero; f.len() + 1];
    probs[0] = one.clone();
    for (i, p) in f.iter().enumerate() {
        let q = &one - p;
        for j in (1..=i + 1).rev() {
            probs[j] = &probs[j] * &q + &probs[j - 1] * p;
        }
        probs[0] = &probs[0] * &q;
    }
    Ok(probs)
}

/// The frequencies of `f` as exact rationals.
pub fn exact_frequencies(f: &FrequencyVector) -> Vec<BigRational> {
    (0..f.n())
        .map(|i| {
            let (num, den) = f.frequency(i).as_ratio();
            BigRational::new(num.into(), den.into())
        })
        .collect()
}

/// `∏_{x_i = 1} f_i ∏_{x_i = 0} (1 - f_i)`.
pub fn prob_sample_point(f: &[f64], x: &BitString) -> Result<f64> {
    if f.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            actual: x.len(),
        });
    }
    check_probabilities(f)?;
    Ok(f.iter()
        .zip(x.iter())
        .map(|(&p, b)| if b { p } else { 1.0 - p })
        .product())
}
