//! Exact oracles and sanity instruments: partition enumeration for tiny data
//! sets, Monte Carlo KL divergence between generator densities, and chain
//! statistics.

mod chain_stats;
mod exact;
mod kl;

pub use chain_stats::{chain_stats, integrated_autocorr_time, rao_blackwell_posterior_k, ChainStats};
pub use exact::{exact_posterior_k, ExactPosterior, PartitionCode, RestrictedGrowth, MAX_EXACT_N};
pub use kl::{mc_kl_estimate, KlEstimate, UnivariateDensity};
