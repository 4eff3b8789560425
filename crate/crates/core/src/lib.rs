//! Compact genetic algorithm on jump-type landscapes: a seeded Monte Carlo
//! engine, fitness families, an exact probability oracle, the parallel-run
//! meta strategy and the experiment drivers built on them.

pub mod bits;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod fitness;
pub mod frequency;
pub mod invariants;
pub mod meta;
pub mod oracle;
pub mod params;
pub mod rng;
pub mod trace;

pub use bits::BitString;
pub use engine::{cga_step, run_cga, run_cga_from, sample, Cga, RunResult, StepOutcome, StopReason, StopRule};
pub use error::{Error, Result};
pub use fitness::{FitnessSpec, Landscape};
pub use frequency::{frequency_set, minmax_clamp, Frequency, FrequencyVector};
pub use params::{make_params, CgaParams, MuPolicy};
pub use rng::{derive_replicate_seed, rng_from_seed, CgaRng};
pub use trace::{Potential, RunTrace, TraceRecord};
