//! Exact probabilities for the sampling distribution and for single cGA
//! iterations, used to check the analysis' inequalities without sampling error.

pub mod bounds;
pub mod estimates;
pub mod pmf;
pub mod step;

pub use bounds::{
    check_binomial_tail_bound, check_chernoff_sample_bounds, check_gap_bound, check_ldiff, check_lopt,
    check_lopt_ub, gap_probability, prob_distinct_norms, BinomialTailCheck, BoundCheck, SampleTailReport,
};
pub use estimates::{estimate_norm_gap_constant, gap_claim_counter_check, NormGapEstimate};
pub use pmf::{pmf_brute_force, poisson_binomial_pmf, prob_sample_point, PmfVector};
pub use step::{check_lboundary, check_lonemax2, exact_step_expectation, StepExpectation};
