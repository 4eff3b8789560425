//! Run parameters and the well-behaved population-size condition.
//!
//! With frequency boundaries `1/n` and `1 - 1/n`, every reachable frequency
//! differs from `1/n` by a multiple of `1/mu` exactly when
//! `n_mu = (1 - 2/n) * mu` is an even integer, i.e. when
//! `mu * (n - 2) ≡ 0 (mod 2n)`. The admissible values are therefore exactly
//! the positive multiples of `2n / gcd(n - 2, 2n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What to do with a requested population size that is not well-behaved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MuPolicy {
    Reject,
    #[default]
    RoundUp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CgaParams {
    n: usize,
    mu: u64,
    max_iterations: u64,
    seed: u64,
    record_trace: bool,
    trace_stride: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Smallest well-behaved population size for dimension `n`; every valid `mu`
/// is a multiple of it.
pub fn mu_granularity(n: usize) -> Result<u64> {
    if n < 4 {
        return Err(Error::DimensionTooSmall { n });
    }
    let n = n as u64;
    Ok(2 * n / gcd(n - 2, 2 * n))
}

pub fn is_well_behaved(n: usize, mu: u64) -> bool {
    match mu_granularity(n) {
        Ok(step) => mu >= 1 && mu.is_multiple_of(step),
        Err(_) => false,
    }
}

/// Smallest valid `mu >= requested`.
pub fn round_up_mu(n: usize, requested: u64) -> Result<u64> {
    let step = mu_granularity(n)?;
    let requested = requested.max(1);
    Ok(requested.div_ceil(step) * step)
}

pub fn make_params(n: usize, requested_mu: u64, policy: MuPolicy) -> Result<CgaParams> {
    if n < 4 {
        return Err(Error::DimensionTooSmall { n });
    }
    if requested_mu == 0 {
        return Err(Error::ZeroMu);
    }
    let step = mu_granularity(n)?;
    let mu = if requested_mu.is_multiple_of(step) {
        requested_mu
    } else {
        match policy {
            MuPolicy::RoundUp => round_up_mu(n, requested_mu)?,
            MuPolicy::Reject => {
                let below = (requested_mu / step) * step;
                return Err(Error::InvalidMu {
                    n,
                    requested: requested_mu,
                    below: (below > 0).then_some(below),
                    above: below + step,
                });
            }
        }
    };
    let n_mu = mu as u128 * (n as u128 - 2) / n as u128;
    if n_mu > u32::MAX as u128 {
        return Err(Error::InvalidParameter(format!(
            "mu = {mu} is too large for n = {n}"
        )));
    }
    Ok(CgaParams {
        n,
        mu,
        max_iterations: 1_000_000,
        seed: 0,
        record_trace: false,
        trace_stride: 1,
    })
}

impl CgaParams {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> u64 {
        self.mu
    }

    /// Number of `1/mu` steps between the two boundaries, `(1 - 2/n) * mu`.
    pub fn n_mu(&self) -> u32 {
        (self.mu as u128 * (self.n as u128 - 2) / self.n as u128) as u32
    }

    pub fn max_iterations(&self) -> u64 {
        self.max_iterations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn record_trace(&self) -> bool {
        self.record_trace
    }

    pub fn trace_stride(&self) -> u64 {
        self.trace_stride
    }

    pub fn with_max_iterations(mut self, max_iterations: u64) -> Result<Self> {
        if max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        self.max_iterations = max_iterations;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trace(mut self, stride: u64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter(
                "trace_stride must be at least 1".into(),
            ));
        }
        self.record_trace = true;
        self.trace_stride = stride;
        Ok(self)
    }

    pub fn without_trace(mut self) -> Self {
        self.record_trace = false;
        self
    }
}
