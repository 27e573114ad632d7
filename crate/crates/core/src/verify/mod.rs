//! Verification harness: goodness-of-fit tests, the coalescence formula, extinction
//! curves and the limit-theorem conformance suite.

mod coalescence;
mod extinction;
mod stats;
mod suite;

pub use coalescence::{
    block_resolution_bias, coalescence_quadrature, eve_bound_a, eve_bound_b, mc_coalescence,
    CoalescenceBound, CoalescenceEstimate, Resolution,
};
pub use extinction::{extinction_curve, ExtinctionPoint};
pub use stats::{ks_two_sample, poisson_gof, Judgement, TestOutcome};
pub use suite::{
    construction, event_tests, simulate_runs, summarize, theorem12_suite, Construction, RunSummary,
    SuiteConfig,
};
