//! Mixture of finite mixtures with diagonal Gaussian components: model
//! quantities, a collapsed split-merge Gibbs sampler, synthetic data generators,
//! exact oracles for small problems, and a config-driven experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod coefficients;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod matrix;
pub mod model;
pub mod numerics;
pub mod prior;
pub mod rng;
pub mod sampler;
pub mod suffstats;

pub use coefficients::{posterior_k_given_partition, CoefficientTable, ComponentPosterior};
pub use error::{MfmError, Result};
pub use matrix::Matrix;
pub use model::{cluster_log_marginal, log_predictive, BetaSpec, ModelConfig};
pub use prior::ComponentCountPrior;
pub use sampler::{run_chain, ChainConfig, ChainOutput, PartitionState};
pub use suffstats::SuffStats;
