use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    contaminate, load_matrix, log2_standardize, nested_series, sample_mixture, standardize_columns,
    ContaminationSpec, DatasetSeries, MixtureSpec,
};
use crate::diagnostics::{chain_stats, rao_blackwell_posterior_k};
use crate::error::{MfmError, Result};
use crate::matrix::Matrix;
use crate::model::ModelConfig;
use crate::rng::{data_rng, stream, SHUFFLE_STREAM};
use crate::sampler::{run_chain, ChainConfig, ChainOutput};

use super::config::{DataSource, Estimator, PriorMode, SweepConfig, Transform};

/// Builds the full data matrix of one replicate and its nested prefixes.
pub fn build_series(cfg: &SweepConfig, seed: u64) -> Result<DatasetSeries> {
    let n = cfg.max_size();
    let mut rng = data_rng(seed);
    let (full, labels) = match &cfg.data {
        DataSource::Mixture {
            components,
            weights,
        } => {
            let spec = MixtureSpec::new(components.clone(), weights.clone())?;
            let (m, labels) = sample_mixture(&spec, n, &mut rng)?;
            (m, Some(labels))
        }
        DataSource::Contaminated {
            base,
            contaminant,
            epsilon,
        } => {
            let spec = ContaminationSpec {
                base: base.clone(),
                contaminant: contaminant.clone(),
                epsilon: *epsilon,
            };
            // Label 1 marks a contaminant draw.
            let (m, flags) = contaminate(&spec, n, &mut rng)?;
            (m, Some(flags.into_iter().map(usize::from).collect()))
        }
        DataSource::File {
            path,
            header,
            transform,
            shuffle,
        } => {
            let raw = load_matrix(path, *header)?;
            let m = match transform {
                Transform::None => raw,
                Transform::Standardize => standardize_columns(&raw)?,
                Transform::Log2Standardize => log2_standardize(&raw)?,
            };
            let m = if *shuffle {
                let mut order: Vec<usize> = (0..m.rows()).collect();
                order.shuffle(&mut stream(seed, SHUFFLE_STREAM));
                m.select_rows(&order)
            } else {
                m
            };
            (m, None)
        }
    };
    let mut series = nested_series(full, &cfg.sizes, seed)?;
    series.labels = labels.map(|mut l| {
        l.truncate(n);
        l
    });
    Ok(series)
}

/// Posterior summary of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// `posterior_k[k - 1]`.
    pub posterior_k: Vec<f64>,
    pub mean_k: f64,
    /// Most probable `k`, ties going to the smaller value.
    pub mode_k: usize,
    pub sm_accept_rate: f64,
    pub autocorr_time_t: Option<f64>,
}

/// Summarizes a chain using the histogram of sampled `k`.
pub fn summarize(out: &ChainOutput) -> Result<Summary> {
    summarize_posterior(out, out.posterior_k.clone())
}

/// Summarizes a chain around a given estimate of the posterior on `k`.
pub fn summarize_posterior(out: &ChainOutput, posterior_k: Vec<f64>) -> Result<Summary> {
    if out.trace_k.is_empty() {
        return Err(MfmError::EmptyTrace);
    }
    let stats = chain_stats(out)?;
    let (mean_k, mode_k) = moments(&posterior_k);
    Ok(Summary {
        posterior_k,
        mean_k,
        mode_k,
        sm_accept_rate: stats.acceptance_rate,
        autocorr_time_t: stats.autocorr_time,
    })
}

/// Mean and mode (smallest among ties) of a distribution indexed by `k - 1`.
pub fn moments(posterior_k: &[f64]) -> (f64, usize) {
    let mean = posterior_k
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 * p)
        .sum();
    let mut mode = 1;
    let mut best = f64::NEG_INFINITY;
    for (i, &p) in posterior_k.iter().enumerate() {
        if p > best {
            best = p;
            mode = i + 1;
        }
    }
    (mean, mode)
}

/// What one `(seed, N)` cell produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub model: ModelConfig,
    pub chain: ChainConfig,
    pub summary: Summary,
    pub output: ChainOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub seed: u64,
    pub n: usize,
    pub prior_mode: PriorMode,
    /// The cell's outcome, or the message of the error that aborted it.
    pub outcome: std::result::Result<CellOutcome, String>,
}

/// Resolves the model of a cell with `n` rows. Fixed and bounded modes use the
/// full replicate dataset, the varying mode only the first `n` rows.
pub fn cell_model(cfg: &SweepConfig, series: &DatasetSeries, n: usize) -> Result<ModelConfig> {
    let prior = cfg.prior.count_prior()?;
    let reference = match cfg.prior.mode {
        PriorMode::Varying => series.prefix(n),
        PriorMode::Fixed | PriorMode::Bounded => series.full.clone(),
    };
    cfg.model.resolve(&reference, prior)
}

/// Runs one chain on the first `n` rows of `series`.
pub fn run_cell(cfg: &SweepConfig, series: &DatasetSeries, n: usize) -> Result<CellOutcome> {
    let model = cell_model(cfg, series, n)?;
    let chain = ChainConfig {
        seed: series.seed,
        ..cfg.chain.clone()
    };
    let data = series.prefix(n);
    let output = run_chain(&data, &model, &chain)?;
    let summary = match cfg.estimator {
        Estimator::Sampled => summarize(&output)?,
        Estimator::RaoBlackwell => {
            let p = rao_blackwell_posterior_k(&output.trace_t, &model.count_prior, model.gamma, n)?;
            summarize_posterior(&output, p)?
        }
    };
    Ok(CellOutcome {
        model,
        chain,
        summary,
        output,
    })
}

/// Runs every `(seed, N)` cell of the grid.
///
/// Cells execute on a pool of `threads` workers (0 picks rayon's default) but
/// results come back ordered by seed (config order) then ascending `N`, and
/// each depends only on its seed. A failing cell yields an error result while
/// the others proceed.
pub fn run_sweep(cfg: &SweepConfig, threads: usize) -> Result<Vec<CellResult>> {
    run_sweep_with(cfg, threads, |_| {})
}

/// As [`run_sweep`], calling `progress` as each cell finishes (in completion order).
pub fn run_sweep_with<P>(cfg: &SweepConfig, threads: usize, progress: P) -> Result<Vec<CellResult>>
where
    P: Fn(&CellResult) + Sync,
{
    cfg.validate()?;
    let series: Vec<std::result::Result<DatasetSeries, String>> = cfg
        .seeds
        .iter()
        .map(|&s| build_series(cfg, s).map_err(|e| e.to_string()))
        .collect();
    let cells: Vec<(usize, usize)> = (0..cfg.seeds.len())
        .flat_map(|i| cfg.sizes.iter().map(move |&n| (i, n)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| MfmError::config(format!("cannot start thread pool: {e}")))?;
    let results = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, n)| {
                let outcome = match &series[i] {
                    Ok(s) => run_cell(cfg, s, n).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                let result = CellResult {
                    dataset: cfg.dataset.clone(),
                    seed: cfg.seeds[i],
                    n,
                    prior_mode: cfg.prior.mode,
                    outcome,
                };
                progress(&result);
                result
            })
            .collect()
    });
    Ok(results)
}

/// Data of size `n` for a single run outside a sweep.
pub fn prefix_data(cfg: &SweepConfig, seed: u64, n: usize) -> Result<(Matrix, ModelConfig)> {
    let series = build_series(cfg, seed)?;
    if n == 0 || n > series.full.rows() {
        return Err(MfmError::input(format!(
            "N must lie in 1..={}, got {n}",
            series.full.rows()
        )));
    }
    let model = cell_model(cfg, &series, n)?;
    Ok((series.prefix(n), model))
}
