//! Normal-Gamma conjugate model for diagonal-covariance Gaussian clusters.
//!
//! Per dimension, a cluster's precision is `tau ~ Gam(alpha, beta)` (shape-rate)
//! and its mean `theta | tau ~ N(m, (c tau)^-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};
use crate::numerics::{ln_gamma, LN_2PI};
use crate::prior::ComponentCountPrior;
use crate::suffstats::SuffStats;

/// The Gamma rate `beta` of the cluster precisions: fixed, or itself Gamma distributed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSpec {
    Fixed { beta: f64 },
    /// `beta ~ Gam(shape, rate)`.
    Hyperprior { shape: f64, rate: f64 },
}

impl BetaSpec {
    /// The fixed value, or the hyperprior mean.
    pub fn reference_value(&self) -> f64 {
        match *self {
            Self::Fixed { beta } => beta,
            Self::Hyperprior { shape, rate } => shape / rate,
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Self::Hyperprior { .. })
    }
}

/// All hyperparameters of the mixture model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Prior mean location `m`, per dimension.
    pub mean: Vec<f64>,
    /// Mean-precision scale `c`, per dimension.
    pub c: Vec<f64>,
    /// Gamma shape of the cluster precisions.
    pub alpha: f64,
    pub beta: BetaSpec,
    /// Symmetric Dirichlet concentration of the mixture weights.
    pub gamma: f64,
    pub count_prior: ComponentCountPrior,
}

/// Maps a fixed mean precision `kappa` to the scale `c` of `theta | tau ~ N(m, (c tau)^-1)`
/// by matching the prior variance of `theta`.
///
/// With `E[1/tau] = beta/(alpha-1)` this gives `c = kappa beta / (alpha - 1)`;
/// for `alpha <= 1` the mean of `1/tau` does not exist and `c = kappa beta / alpha` is used.
pub fn mean_precision_scale(kappa: f64, beta_reference: f64, alpha: f64) -> f64 {
    if alpha > 1.0 {
        kappa * beta_reference / (alpha - 1.0)
    } else {
        kappa * beta_reference / alpha
    }
}

impl ModelConfig {
    /// Builds a config from per-dimension mean precisions `kappa`, mapping each to `c`.
    pub fn from_kappa(
        mean: Vec<f64>,
        kappa: &[f64],
        alpha: f64,
        beta: BetaSpec,
        gamma: f64,
        count_prior: ComponentCountPrior,
    ) -> Result<Self> {
        if mean.len() != kappa.len() {
            return Err(MfmError::config("mean and kappa dimensions differ"));
        }
        let b = beta.reference_value();
        let c = kappa
            .iter()
            .map(|&k| mean_precision_scale(k, b, alpha))
            .collect();
        let cfg = Self {
            mean,
            c,
            alpha,
            beta,
            gamma,
            count_prior,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(MfmError::config(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        if self.mean.is_empty() {
            return Err(MfmError::config("model dimension must be >= 1"));
        }
        if self.c.len() != self.mean.len() {
            return Err(MfmError::config("mean and c dimensions differ"));
        }
        if let Some(m) = self.mean.iter().find(|m| !m.is_finite()) {
            return Err(MfmError::config(format!("mean must be finite, got {m}")));
        }
        for &c in &self.c {
            pos("c", c)?;
        }
        pos("alpha", self.alpha)?;
        pos("gamma", self.gamma)?;
        match self.beta {
            BetaSpec::Fixed { beta } => pos("beta", beta)?,
            BetaSpec::Hyperprior { shape, rate } => {
                pos("beta shape", shape)?;
                pos("beta rate", rate)?;
            }
        }
        self.count_prior.validate()
    }
}

/// Posterior Normal-Gamma parameters `(c_n, mu_n, alpha_n, beta_n)` in dimension `d`.
#[inline]
fn posterior_params(s: &SuffStats, d: usize, m: f64, c: f64, alpha: f64, beta: f64) -> (f64, f64, f64, f64) {
    let n = s.n() as f64;
    let c_n = c + n;
    let alpha_n = alpha + 0.5 * n;
    if s.n() == 0 {
        return (c_n, m, alpha_n, beta);
    }
    let xbar = s.sum()[d] / n;
    let mu_n = (c * m + s.sum()[d]) / c_n;
    let dev = xbar - m;
    let beta_n = beta + 0.5 * s.centered_ss(d) + c * n * dev * dev / (2.0 * c_n);
    (c_n, mu_n, alpha_n, beta_n)
}

/// Log marginal likelihood of the points summarized by `s`, with the cluster's
/// mean and precision integrated out. Zero for empty statistics.
pub fn cluster_log_marginal(s: &SuffStats, cfg: &ModelConfig, beta: f64) -> f64 {
    debug_assert_eq!(s.dim(), cfg.dim());
    if s.n() == 0 {
        return 0.0;
    }
    let n = s.n() as f64;
    let lg_ratio = ln_gamma(cfg.alpha + 0.5 * n) - ln_gamma(cfg.alpha);
    let ln_beta = beta.ln();
    (0..cfg.dim())
        .map(|d| {
            let c = cfg.c[d];
            let (c_n, _, alpha_n, beta_n) = posterior_params(s, d, cfg.mean[d], c, cfg.alpha, beta);
            -0.5 * n * LN_2PI + 0.5 * (c / c_n).ln() + lg_ratio + cfg.alpha * ln_beta
                - alpha_n * beta_n.ln()
        })
        .sum()
}

/// Log posterior predictive density of `x` given the cluster summarized by `s`
/// (a product of per-dimension Student-t densities).
pub fn log_predictive(s: &SuffStats, x: &[f64], cfg: &ModelConfig, beta: f64) -> f64 {
    let lg = ln_gamma(cfg.alpha + 0.5 * (s.n() as f64 + 1.0)) - ln_gamma(cfg.alpha + 0.5 * s.n() as f64);
    (0..cfg.dim())
        .map(|d| {
            let (c_n, mu_n, alpha_n, beta_n) =
                posterior_params(s, d, cfg.mean[d], cfg.c[d], cfg.alpha, beta);
            let dev = x[d] - mu_n;
            lg + 0.5 * (c_n / (c_n + 1.0)).ln() - 0.5 * LN_2PI + alpha_n * beta_n.ln()
                - (alpha_n + 0.5) * (beta_n + c_n * dev * dev / (2.0 * (c_n + 1.0))).ln()
        })
        .sum()
}

/// Model evaluation bound to one value of `beta`, with every size-dependent
/// term tabulated for cluster sizes up to `max_n`.
#[derive(Debug, Clone)]
pub struct ClusterKernel {
    mean: Vec<f64>,
    c: Vec<f64>,
    alpha: f64,
    gamma: f64,
    beta: f64,
    ln_beta: f64,
    max_n: usize,
    /// `half_lgamma[j] = ln Γ(alpha + j/2)`.
    half_lgamma: Vec<f64>,
    /// `size_weight[n] = ln(n + gamma)`.
    size_weight: Vec<f64>,
    /// `size_terms[n * dim + d]`: everything in the predictive that depends only on size.
    size_terms: Vec<SizeTerms>,
    /// `c m` and `c m^2` per dimension.
    cm: Vec<f64>,
    cm2: Vec<f64>,
}

impl ClusterKernel {
    pub fn new(cfg: &ModelConfig, beta: f64, max_n: usize) -> Self {
        let dim = cfg.dim();
        let half_lgamma: Vec<f64> = (0..=max_n + 1)
            .map(|j| ln_gamma(cfg.alpha + 0.5 * j as f64))
            .collect();
        let size_weight = (0..=max_n).map(|n| (n as f64 + cfg.gamma).ln()).collect();
        let mut size_terms = Vec::with_capacity((max_n + 1) * dim);
        for n in 0..=max_n {
            for d in 0..dim {
                size_terms.push(SizeTerms::new(cfg.c[d], cfg.alpha, n, &half_lgamma));
            }
        }
        Self {
            mean: cfg.mean.clone(),
            c: cfg.c.clone(),
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            beta,
            ln_beta: beta.ln(),
            max_n,
            half_lgamma,
            size_weight,
            size_terms,
            cm: cfg.c.iter().zip(&cfg.mean).map(|(c, m)| c * m).collect(),
            cm2: cfg.c.iter().zip(&cfg.mean).map(|(c, m)| c * m * m).collect(),
        }
    }

    /// `ln(n + gamma)`: the partition-prior weight of joining a cluster of size `n`.
    #[inline]
    pub fn size_log_weight(&self, n: usize) -> f64 {
        match self.size_weight.get(n) {
            Some(&v) => v,
            None => (n as f64 + self.gamma).ln(),
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
        self.ln_beta = beta.ln();
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    fn half_lgamma(&self, j: usize) -> f64 {
        match self.half_lgamma.get(j) {
            Some(&v) => v,
            None => ln_gamma(self.alpha + 0.5 * j as f64),
        }
    }

    /// Same value as [`cluster_log_marginal`], using the tabulated gamma terms.
    pub fn log_marginal(&self, s: &SuffStats) -> f64 {
        if s.n() == 0 {
            return 0.0;
        }
        let n = s.n() as f64;
        let lg_ratio = self.half_lgamma(s.n()) - self.half_lgamma(0);
        (0..self.dim())
            .map(|d| {
                let c = self.c[d];
                let (c_n, _, alpha_n, beta_n) =
                    posterior_params(s, d, self.mean[d], c, self.alpha, self.beta);
                -0.5 * n * LN_2PI + 0.5 * (c / c_n).ln() + lg_ratio + self.alpha * self.ln_beta
                    - alpha_n * beta_n.ln()
            })
            .sum()
    }

    /// Per-dimension posterior Gamma `(shape, rate)` of the cluster precision.
    pub fn precision_posterior(&self, s: &SuffStats, d: usize) -> (f64, f64) {
        let (_, _, alpha_n, beta_n) =
            posterior_params(s, d, self.mean[d], self.c[d], self.alpha, self.beta);
        (alpha_n, beta_n)
    }

    /// Fills `cache` with the predictive constants for statistics `s`.
    pub fn fill_cache(&self, s: &SuffStats, cache: &mut PredictiveCache) {
        let dim = self.dim();
        if cache.location.len() != dim {
            cache.location.resize(dim, 0.0);
            cache.offset.resize(dim, 0.0);
            cache.scale.resize(dim, 0.0);
        }
        let n = s.n();
        let alpha_n = self.alpha + 0.5 * n as f64;
        let computed;
        let terms: &[SizeTerms] = if n <= self.max_n {
            &self.size_terms[n * dim..(n + 1) * dim]
        } else {
            computed = (0..dim)
                .map(|d| SizeTerms::new(self.c[d], self.alpha, n, &self.half_lgamma))
                .collect::<Vec<_>>();
            &computed
        };
        let mut constant = 0.0;
        for (d, st) in terms.iter().enumerate() {
            // beta_n = beta + (sumsq + c m^2 - c_n mu_n^2) / 2, equal to the
            // centered form and never below beta.
            let mu_n = (self.cm[d] + s.sum()[d]) * st.inv_c_n;
            let (beta_n, ln_beta_n) = if n == 0 {
                (self.beta, self.ln_beta)
            } else {
                let b = (self.beta
                    + 0.5 * (s.sumsq()[d] + self.cm2[d] - st.c_n * mu_n * mu_n))
                    .max(self.beta);
                (b, b.ln())
            };
            constant += st.base + alpha_n * ln_beta_n;
            cache.location[d] = mu_n;
            cache.offset[d] = beta_n;
            cache.scale[d] = st.scale;
        }
        cache.constant = constant;
        cache.power = alpha_n + 0.5;
    }

    pub fn cache_for(&self, s: &SuffStats) -> PredictiveCache {
        let mut c = PredictiveCache::default();
        self.fill_cache(s, &mut c);
        c
    }
}

/// Size-only terms of the predictive in one dimension.
#[derive(Debug, Clone, Copy)]
struct SizeTerms {
    c_n: f64,
    inv_c_n: f64,
    /// `c_n / (2 (c_n + 1))`.
    scale: f64,
    /// `ln Γ(alpha_n + 1/2) - ln Γ(alpha_n) + ln(c_n / (c_n + 1)) / 2 - ln(2 pi) / 2`.
    base: f64,
}

impl SizeTerms {
    fn new(c: f64, alpha: f64, n: usize, half_lgamma: &[f64]) -> Self {
        let c_n = c + n as f64;
        let lg = |j: usize| match half_lgamma.get(j) {
            Some(&v) => v,
            None => ln_gamma(alpha + 0.5 * j as f64),
        };
        Self {
            c_n,
            inv_c_n: 1.0 / c_n,
            scale: c_n / (2.0 * (c_n + 1.0)),
            base: lg(n + 1) - lg(n) + 0.5 * (c_n / (c_n + 1.0)).ln() - 0.5 * LN_2PI,
        }
    }
}

/// Precomputed Student-t predictive of one cluster: evaluating a point costs one
/// logarithm per dimension.
#[derive(Debug, Clone, Default)]
pub struct PredictiveCache {
    constant: f64,
    power: f64,
    location: Vec<f64>,
    offset: Vec<f64>,
    scale: Vec<f64>,
}

impl PredictiveCache {
    #[inline]
    pub fn log_predictive(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (d, &xd) in x.iter().enumerate() {
            let dev = xd - self.location[d];
            acc += (self.offset[d] + self.scale[d] * dev * dev).ln();
        }
        self.constant - self.power * acc
    }
}
