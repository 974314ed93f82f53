//! Config-driven experiment grid: data generation per replicate seed, nested
//! prefixes, per-cell hyperparameters, chains, and CSV result tables.

mod config;
mod output;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;
use crate::sampler::{ChainConfig, ChainOutput};

pub use config::{DataSource, Estimator, ModelTemplate, PriorMode, PriorSettings, SweepConfig, Transform};
pub use output::{
    errors_csv, exact_rows, format_sig, posterior_csv, posterior_rows, read_json, summary_csv,
    write_json, write_results, ResultRow, ERROR_HEADER, POSTERIOR_HEADER, SUMMARY_HEADER,
};
pub use sweep::{
    build_series, cell_model, moments, prefix_data, run_cell, run_sweep, run_sweep_with, summarize,
    summarize_posterior, CellOutcome, CellResult, Summary,
};

/// Everything needed to re-summarize a single chain later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub seed: u64,
    pub n: usize,
    pub prior_mode: PriorMode,
    pub model: ModelConfig,
    pub chain: ChainConfig,
    pub output: ChainOutput,
}

impl RunRecord {
    /// The record as a one-cell sweep result.
    pub fn to_cell(&self) -> crate::Result<CellResult> {
        let summary = summarize(&self.output)?;
        Ok(CellResult {
            dataset: self.dataset.clone(),
            seed: self.seed,
            n: self.n,
            prior_mode: self.prior_mode,
            outcome: Ok(CellOutcome {
                model: self.model.clone(),
                chain: self.chain.clone(),
                summary,
                output: self.output.clone(),
            }),
        })
    }
}
