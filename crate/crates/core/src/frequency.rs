//! The frequency vector, stored as integer indices into the frequency set
//! `F_mu = { 1/n + i/mu : i in 0..=n_mu }`.
//!
//! Storing indices rather than floats makes membership in `F_mu` and the
//! boundary containment `[1/n, 1 - 1/n]` structural. The distance
//! `D = n - ‖f‖₁` is an integer multiple of `1/mu`, so it is tracked exactly
//! in "ticks" (units of `1/mu`).

use std::fmt;

use crate::error::{Error, Result};
use crate::params::CgaParams;

/// One element `1/n + index/mu` of the frequency set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency {
    pub n: usize,
    pub mu: u64,
    pub index: u32,
}

impl Frequency {
    /// Exact value as `(numerator, denominator)` = `(mu + index * n, n * mu)`.
    pub fn as_ratio(&self) -> (u128, u128) {
        (
            self.mu as u128 + self.index as u128 * self.n as u128,
            self.n as u128 * self.mu as u128,
        )
    }

    pub fn value(&self) -> f64 {
        let (num, den) = self.as_ratio();
        num as f64 / den as f64
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (num, den) = self.as_ratio();
        write!(f, "{num}/{den}")
    }
}

/// `F_mu` in increasing order.
pub fn frequency_set(params: &CgaParams) -> Vec<Frequency> {
    (0..=params.n_mu())
        .map(|index| Frequency {
            n: params.n(),
            mu: params.mu(),
            index,
        })
        .collect()
}

/// `max{lower, min{value, upper}}`.
pub fn minmax_clamp<T: PartialOrd>(lower: T, value: T, upper: T) -> T {
    debug_assert!(lower <= upper);
    if value < lower {
        lower
    } else if value > upper {
        upper
    } else {
        value
    }
}

pub fn minmax_clamp_vec<T: PartialOrd + Copy>(lower: T, values: &[T], upper: T) -> Vec<T> {
    values
        .iter()
        .map(|&v| minmax_clamp(lower, v, upper))
        .collect()
}

#[derive(Clone, PartialEq, Eq)]
pub struct FrequencyVector {
    n: usize,
    mu: u64,
    n_mu: u32,
    indices: Vec<u32>,
    index_sum: u64,
}

impl FrequencyVector {
    /// The initial model `(1/2, ..., 1/2)`.
    pub fn uniform(params: &CgaParams) -> Self {
        Self::constant(params, params.n_mu() / 2).expect("midpoint index is always valid")
    }

    pub fn constant(params: &CgaParams, index: u32) -> Result<Self> {
        Self::from_indices(params, vec![index; params.n()])
    }

    pub fn from_indices(params: &CgaParams, indices: Vec<u32>) -> Result<Self> {
        if indices.len() != params.n() {
            return Err(Error::DimensionMismatch {
                expected: params.n(),
                actual: indices.len(),
            });
        }
        let n_mu = params.n_mu();
        if let Some((position, &index)) = indices.iter().enumerate().find(|(_, &i)| i > n_mu) {
            return Err(Error::IndexOutOfRange {
                position,
                index,
                max: n_mu,
            });
        }
        let index_sum = indices.iter().map(|&i| i as u64).sum();
        Ok(FrequencyVector {
            n: params.n(),
            mu: params.mu(),
            n_mu,
            indices,
            index_sum,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    pub fn n_mu(&self) -> u32 {
        self.n_mu
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> u32 {
        self.indices[i]
    }

    pub fn frequency(&self, i: usize) -> Frequency {
        Frequency {
            n: self.n,
            mu: self.mu,
            index: self.indices[i],
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.frequency(i).value()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    pub fn index_sum(&self) -> u64 {
        self.index_sum
    }

    /// `mu * (n - ‖f‖₁)`, an exact non-negative integer.
    pub fn distance_ticks(&self) -> u64 {
        // ‖f‖₁ = 1 + index_sum / mu, hence mu * D = mu * (n - 1) - index_sum.
        self.mu * (self.n as u64 - 1) - self.index_sum
    }

    /// `D = n - ‖f‖₁`.
    pub fn distance(&self) -> f64 {
        self.distance_ticks() as f64 / self.mu as f64
    }

    pub fn min_index(&self) -> u32 {
        self.indices.iter().copied().min().unwrap_or(0)
    }

    pub fn min_value(&self) -> f64 {
        Frequency {
            n: self.n,
            mu: self.mu,
            index: self.min_index(),
        }
        .value()
    }

    /// Moves coordinate `i` one step up; returns `false` (no change) at the upper boundary.
    #[inline]
    pub(crate) fn step_up(&mut self, i: usize) -> bool {
        let idx = &mut self.indices[i];
        if *idx < self.n_mu {
            *idx += 1;
            self.index_sum += 1;
            true
        } else {
            false
        }
    }

    #[inline]
    pub(crate) fn step_down(&mut self, i: usize) -> bool {
        let idx = &mut self.indices[i];
        if *idx > 0 {
            *idx -= 1;
            self.index_sum -= 1;
            true
        } else {
            false
        }
    }

    /// Per-index sampling thresholds: bit `i` is one iff a uniform `u64`
    /// draw is below `threshold[index_i]`, so `Pr = floor(f * 2^64) / 2^64`.
    pub(crate) fn thresholds(&self) -> Vec<u64> {
        (0..=self.n_mu)
            .map(|index| {
                let (num, den) = Frequency {
                    n: self.n,
                    mu: self.mu,
                    index,
                }
                .as_ratio();
                ((num << 64) / den) as u64
            })
            .collect()
    }
}

impl fmt::Debug for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyVector")
            .field("n", &self.n)
            .field("mu", &self.mu)
            .field("indices", &self.indices)
            .finish()
    }
}
