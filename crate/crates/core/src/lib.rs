//! Correlated binomial empirical processes: a simulation and bound
//! toolkit for the maximal deviation `Delta_n = E sup_j |p_hat_j - p_j|`
//! of high-dimensional binary data.
//!
//! The crate materializes a catalog of correlated Bernoulli process
//! constructions (shared-coin block mixtures, covariance twins, chain
//! and tree processes), computes their moment/metric structure, covers
//! the index set under the disagreement and subgaussian metrics, and
//! estimates or bounds `Delta_n` with seeded, thread-invariant Monte
//! Carlo. The `verify` module turns the structural identities and
//! inequalities these constructions satisfy into executable checks.

pub mod bounds;
pub mod collapsed;
pub mod covering;
pub mod delta;
pub mod latent;
pub mod metrics;
pub mod parallel;
pub mod process;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod trees;
pub mod verify;

pub use delta::{convergence_curve, estimate_delta, DeltaEstimate, DeltaOptions, EstimatorMode};
pub use metrics::MetricView;
pub use process::{KindParams, MeanRule, ProcessError, ProcessSpec};
pub use rng::SeedLineage;
pub use sampling::{sample_batch, SampleBatch};
pub use trees::{build_skeleton, SkeletonTree};
