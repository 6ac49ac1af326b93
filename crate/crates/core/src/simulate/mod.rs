//! Seeded samplers for every space and Monte Carlo experiments checking
//! confidence-region coverage, consistency, stickiness on the open book and
//! the type-I error of the two-sample test.
//!
//! Every replication `r` draws from its own ChaCha stream, so results do
//! not depend on the order in which rayon schedules replications.

mod experiments;
mod sampler;

pub use experiments::{
    boundary_law_test, mc_consistency, mc_coverage, mc_stickiness, mc_type1, ConsistencyRow,
    Experiment, McReport, Outcome, MAX_FAILURE_RATE,
};
pub use sampler::{Distribution, Height, LeafLaw, Sampler};
