//! Collapsed Gibbs sampling with split-merge moves over partitions.

mod beta;
mod components;
mod gibbs;
mod split_merge;
mod state;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientTable;
use crate::error::{MfmError, Result};
use crate::matrix::Matrix;
use crate::model::ModelConfig;
use crate::rng::chain_rng;

pub use beta::{beta_conditional, draw_cluster_precisions, resample_beta};
pub use components::{draw_k_given_t, ComponentSampler};
pub use gibbs::{gibbs_sweep, reassignment_weights, Destination};
pub use split_merge::{
    log_split_ratio, merge_log_acceptance, split_log_acceptance, split_merge_move, LaunchState,
    MoveCounter,
};
pub use state::{canonical_labels, Cluster, PartitionState};

/// Run-length and move settings of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub splitmerge_per_sweep: usize,
    pub restricted_scans: usize,
    pub record_every: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 2_000,
            seed: 0,
            splitmerge_per_sweep: 1,
            restricted_scans: 5,
            record_every: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(MfmError::config("iterations must be >= 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(MfmError::config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.restricted_scans == 0 {
            return Err(MfmError::config("restricted_scans must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(MfmError::config("record_every must be >= 1"));
        }
        Ok(())
    }

    /// Number of sweeps that will be recorded.
    pub fn recorded_len(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.record_every)
    }
}

/// Traces and summaries from one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub trace_t: Vec<usize>,
    pub trace_k: Vec<usize>,
    pub trace_beta: Vec<f64>,
    pub sm_proposed: u64,
    pub sm_accepted: u64,
    /// `posterior_k[k - 1]`: fraction of recorded draws equal to `k`.
    pub posterior_k: Vec<f64>,
    /// Seconds spent in the chain; the only field not determined by the seed.
    pub wallclock: f64,
}

impl ChainOutput {
    /// Equality of everything except wallclock time, bit for bit.
    pub fn same_draws(&self, other: &Self) -> bool {
        self.trace_t == other.trace_t
            && self.trace_k == other.trace_k
            && self.trace_beta.len() == other.trace_beta.len()
            && self
                .trace_beta
                .iter()
                .zip(&other.trace_beta)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.sm_proposed == other.sm_proposed
            && self.sm_accepted == other.sm_accepted
            && self.posterior_k.len() == other.posterior_k.len()
            && self
                .posterior_k
                .iter()
                .zip(&other.posterior_k)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Normalized histogram of `draws`, indexed by `k - 1`.
pub fn histogram_k(draws: &[usize]) -> Vec<f64> {
    let max = draws.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max];
    for &k in draws {
        counts[k - 1] += 1;
    }
    let total = draws.len() as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// Runs one chain. See [`run_chain_with`].
pub fn run_chain(data: &Matrix, cfg: &ModelConfig, chain: &ChainConfig) -> Result<ChainOutput> {
    run_chain_with(data, cfg, chain, |_, _| {})
}

/// Runs one chain, calling `observe(state, k)` at every recorded sweep.
///
/// Each iteration performs a Gibbs sweep, `splitmerge_per_sweep` split-merge
/// proposals, then a `beta` update when `beta` has a hyperprior.
pub fn run_chain_with<F>(
    data: &Matrix,
    cfg: &ModelConfig,
    chain: &ChainConfig,
    mut observe: F,
) -> Result<ChainOutput>
where
    F: FnMut(&PartitionState, usize),
{
    chain.validate()?;
    cfg.validate()?;
    let n = data.rows();
    if n == 0 {
        return Err(MfmError::input("data has no rows"));
    }
    let start = Instant::now();
    let mut rng = chain_rng(chain.seed);
    let mut table = CoefficientTable::with_defaults(cfg.count_prior, cfg.gamma, n)?;
    let mut k_sampler = ComponentSampler::new(cfg.count_prior, cfg.gamma, n);
    let mut state = PartitionState::init(data, cfg, &mut rng)?;
    let mut counter = MoveCounter::default();

    let cap = chain.recorded_len();
    let mut trace_t = Vec::with_capacity(cap);
    let mut trace_k = Vec::with_capacity(cap);
    let mut trace_beta = Vec::with_capacity(cap);

    for iter in 0..chain.iterations {
        gibbs_sweep(&mut state, data, cfg.gamma, &mut table, &mut rng)?;
        if n >= 2 {
            for _ in 0..chain.splitmerge_per_sweep {
                split_merge_move(
                    &mut state,
                    data,
                    cfg.gamma,
                    &mut table,
                    &mut rng,
                    chain.restricted_scans,
                    &mut counter,
                )?;
            }
        }
        if cfg.beta.is_random() {
            resample_beta(&mut state, cfg, &mut rng)?;
        }
        if cfg!(debug_assertions) && iter % 97 == 0 {
            state.audit(data, 1e-8)?;
        }
        state.refresh_stats(data);

        if iter >= chain.burn_in && (iter - chain.burn_in).is_multiple_of(chain.record_every) {
            let t = state.t();
            let k = k_sampler.draw(t, &mut rng)?;
            trace_t.push(t);
            trace_k.push(k);
            trace_beta.push(state.beta());
            observe(&state, k);
        }
    }

    let posterior_k = histogram_k(&trace_k);
    Ok(ChainOutput {
        trace_t,
        trace_k,
        trace_beta,
        sm_proposed: counter.proposed,
        sm_accepted: counter.accepted,
        posterior_k,
        wallclock: start.elapsed().as_secs_f64(),
    })
}
