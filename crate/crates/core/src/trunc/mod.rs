//! Truncated-Gaussian moments, negative-orthant probabilities and the
//! rejection-sampling oracle used to check both.

mod moments;
pub mod normal;
mod oracle;
mod orthant;

pub use moments::{neg_trunc_mean, positive_bag_expectations, PositiveBagMoments, Z_FLOOR};
pub use oracle::{mc_trunc_oracle, OracleEstimate, Region, MIN_ORACLE_SAMPLES};
pub use orthant::{
    negative_orthant_prob, orthant_registry, GenzQmc, OrthantEstimator, OrthantProb,
    PlainMonteCarlo, QmcBudget, DEFAULT_ORTHANT,
};
