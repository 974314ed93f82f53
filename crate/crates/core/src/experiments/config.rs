use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{empirical_hyperparams, Component, ContaminationSpec, MixtureSpec};
use crate::error::{MfmError, Result};
use crate::matrix::Matrix;
use crate::model::{mean_precision_scale, BetaSpec, ModelConfig};
use crate::prior::ComponentCountPrior;
use crate::sampler::ChainConfig;

/// A full experiment grid: one data source, nested sizes, replicate seeds.
///
/// Parsed from TOML with dotted sections, for example
///
/// ```toml
/// dataset = "laplace"
/// sizes = [50, 200, 1000]
/// seeds = [1, 2, 3]
/// data.kind = "mixture"
/// data.components = [{ family = "laplace", loc = -5.0, scale = 1.5 },
///                    { family = "laplace", loc = 5.0, scale = 1.0 }]
/// data.weights = [0.4, 0.6]
/// prior.mode = "fixed"
/// prior.r = 0.1
/// chain.iterations = 20000
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub dataset: String,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub data: DataSource,
    #[serde(default)]
    pub prior: PriorSettings,
    #[serde(default)]
    pub model: ModelTemplate,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub estimator: Estimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Mixture {
        components: Vec<Component>,
        weights: Vec<f64>,
    },
    Contaminated {
        base: MixtureSpec,
        contaminant: MixtureSpec,
        epsilon: f64,
    },
    /// A CSV matrix on disk. Relative paths resolve against the config file.
    File {
        path: PathBuf,
        #[serde(default)]
        header: bool,
        #[serde(default)]
        transform: Transform,
        /// Permute rows with the replicate seed before taking prefixes.
        #[serde(default)]
        shuffle: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    Standardize,
    Log2Standardize,
}

/// How the prior on `k` and the data-dependent hyperparameters are set per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Geometric prior; hyperparameters from the full dataset of the replicate.
    Fixed,
    /// Geometric prior; hyperparameters recomputed from each prefix.
    Varying,
    /// Uniform prior on `1..=max_k`; hyperparameters from the full dataset.
    Bounded,
}

impl PriorMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fixed => "fixed",
            Self::Varying => "varying",
            Self::Bounded => "bounded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorSettings {
    pub mode: PriorMode,
    pub r: f64,
    pub max_k: Option<usize>,
}

impl Default for PriorSettings {
    fn default() -> Self {
        Self {
            mode: PriorMode::Fixed,
            r: 0.1,
            max_k: None,
        }
    }
}

impl PriorSettings {
    pub fn count_prior(&self) -> Result<ComponentCountPrior> {
        match self.mode {
            PriorMode::Fixed | PriorMode::Varying => ComponentCountPrior::geometric(self.r),
            PriorMode::Bounded => {
                let max_k = self
                    .max_k
                    .ok_or_else(|| MfmError::config("prior.mode = \"bounded\" needs prior.max_k"))?;
                ComponentCountPrior::uniform_bounded(max_k)
            }
        }
    }
}

/// Model hyperparameters before they are resolved against data.
///
/// Single-entry `mean`, `kappa` and `c` apply to every dimension.
/// Unset `mean`/`kappa` come from the data (midrange and inverse squared range).
/// An explicit `c` takes precedence over `kappa`. Setting `beta` fixes the
/// precision rate; otherwise it gets a `Gam(beta_shape, rate)` hyperprior with
/// `rate = beta_rate` if given, else `beta_rate_scale` times the mean of `1/kappa`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelTemplate {
    pub alpha: f64,
    pub gamma: f64,
    pub mean: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub c: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub beta_shape: f64,
    pub beta_rate: Option<f64>,
    pub beta_rate_scale: f64,
}

impl Default for ModelTemplate {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            gamma: 1.0,
            mean: None,
            kappa: None,
            c: None,
            beta: None,
            beta_shape: 0.2,
            beta_rate: None,
            beta_rate_scale: 10.0,
        }
    }
}

impl ModelTemplate {
    fn needs_data(&self) -> bool {
        self.mean.is_none() || (self.kappa.is_none() && self.c.is_none())
    }

    /// Resolves the template against `data` (used only for unset fields).
    pub fn resolve(&self, data: &Matrix, count_prior: ComponentCountPrior) -> Result<ModelConfig> {
        let dim = data.cols();
        let empirical = if self.needs_data() {
            Some(empirical_hyperparams(data)?)
        } else {
            None
        };
        let broadcast = |v: &Vec<f64>| if v.len() == 1 { vec![v[0]; dim] } else { v.clone() };
        let mean = match (&self.mean, &empirical) {
            (Some(m), _) => broadcast(m),
            (None, Some(e)) => e.mean.clone(),
            (None, None) => unreachable!("empirical computed when mean is unset"),
        };
        let kappa = match (&self.kappa, &empirical) {
            (Some(k), _) => Some(broadcast(k)),
            (None, Some(e)) => Some(e.kappa.clone()),
            (None, None) => None,
        };
        if mean.len() != dim {
            return Err(MfmError::config(format!(
                "model.mean has {} entries, data has {dim} columns",
                mean.len()
            )));
        }
        let beta = match self.beta {
            Some(beta) => BetaSpec::Fixed { beta },
            None => {
                let rate = match (self.beta_rate, &kappa) {
                    (Some(rate), _) => rate,
                    (None, Some(k)) => {
                        self.beta_rate_scale * k.iter().map(|k| 1.0 / k).sum::<f64>() / k.len() as f64
                    }
                    (None, None) => {
                        return Err(MfmError::config(
                            "a beta hyperprior with explicit c needs model.beta_rate",
                        ))
                    }
                };
                BetaSpec::Hyperprior {
                    shape: self.beta_shape,
                    rate,
                }
            }
        };
        let c = match (&self.c, &kappa) {
            (Some(c), _) => broadcast(c),
            (None, Some(k)) => k
                .iter()
                .map(|&k| mean_precision_scale(k, beta.reference_value(), self.alpha))
                .collect(),
            (None, None) => unreachable!("kappa is set whenever c is unset"),
        };
        if c.len() != dim {
            return Err(MfmError::config(format!(
                "model c/kappa has {} entries, data has {dim} columns",
                c.len()
            )));
        }
        let cfg = ModelConfig {
            mean,
            c,
            alpha: self.alpha,
            beta,
            gamma: self.gamma,
            count_prior,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Which estimate of the posterior on `k` is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Histogram of the sampled `k`.
    #[default]
    Sampled,
    /// Average of `p(k | t, n)` over the recorded cluster counts.
    RaoBlackwell,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative data paths are made relative to its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| MfmError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let DataSource::File { path: data, .. } = &mut cfg.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.is_empty() || self.dataset.contains([',', '\n', '"']) {
            return Err(MfmError::config(format!(
                "dataset id must be nonempty without commas, quotes or newlines, got {:?}",
                self.dataset
            )));
        }
        if self.sizes.is_empty() {
            return Err(MfmError::config("sizes must not be empty"));
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MfmError::config(format!(
                "sizes must be positive and strictly ascending, got {:?}",
                self.sizes
            )));
        }
        if self.seeds.is_empty() {
            return Err(MfmError::config("seeds must not be empty"));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(MfmError::config("seeds must be distinct"));
        }
        match &self.data {
            DataSource::Mixture {
                components,
                weights,
            } => MixtureSpec {
                components: components.clone(),
                weights: weights.clone(),
            }
            .validate()?,
            DataSource::Contaminated {
                base,
                contaminant,
                epsilon,
            } => ContaminationSpec {
                base: base.clone(),
                contaminant: contaminant.clone(),
                epsilon: *epsilon,
            }
            .validate()?,
            DataSource::File { .. } => {}
        }
        self.prior.count_prior()?;
        self.chain.validate()
    }

    pub fn max_size(&self) -> usize {
        *self.sizes.last().expect("validated nonempty")
    }
}
