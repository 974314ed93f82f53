//! Partition-prior coefficients `V_n(t)` of the mixture of finite mixtures and
//! the induced posterior over the number of components given the number of
//! occupied clusters.

use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};
use crate::numerics::{ln_falling_factorial, ln_rising_factorial, log_sum_exp};
use crate::prior::ComponentCountPrior;

/// Relative truncation tolerance for the `V_n(t)` series.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Hard cap on the number of series terms for a single coefficient.
pub const MAX_SERIES_TERMS: usize = 10_000_000;
/// Largest `t` tabulated up front for unbounded priors.
pub const DEFAULT_T_MAX: usize = 100;

/// `log( k_(t) / (gamma k)^(n) * p(k) )`.
#[inline]
fn log_series_term(prior: &ComponentCountPrior, gamma: f64, n: usize, t: usize, k: usize) -> f64 {
    let lp = prior.log_prior_k(k);
    if lp == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    ln_falling_factorial(k, t) - ln_rising_factorial(gamma * k as f64, n) + lp
}

/// Log series terms for `k = t, t+1, ...` up to the truncation point.
///
/// Empty when `t` lies beyond a bounded prior's support.
fn series_terms(
    prior: &ComponentCountPrior,
    gamma: f64,
    n: usize,
    t: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if let Some(max_k) = prior.support_max() {
        return Ok((t..=max_k)
            .map(|k| log_series_term(prior, gamma, n, t, k))
            .collect());
    }

    let ln_tol = tol.ln();
    let tail = prior.tail_ratio();
    let mut terms = Vec::new();
    let mut acc = f64::NEG_INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for k in t..t.saturating_add(MAX_SERIES_TERMS) {
        let term = log_series_term(prior, gamma, n, t, k);
        terms.push(term);
        acc = crate::numerics::log_add_exp(acc, term);
        if k > t {
            let log_ratio = term - prev;
            if log_ratio < 0.0 {
                // Geometric remainder bound with the worse of the current
                // and limiting term ratios.
                let rho = log_ratio.exp().max(tail);
                if rho < 1.0 {
                    let remainder = term + (rho / (1.0 - rho)).ln();
                    if remainder - acc < ln_tol {
                        return Ok(terms);
                    }
                }
            }
        }
        prev = term;
    }
    Err(MfmError::SeriesNotConverged {
        t,
        terms: MAX_SERIES_TERMS,
    })
}

fn validate_args(gamma: f64, n: usize, tol: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(MfmError::config(format!("gamma must be > 0, got {gamma}")));
    }
    if n == 0 {
        return Err(MfmError::config("sample size must be >= 1"));
    }
    if !(tol > 0.0) {
        return Err(MfmError::config(format!("tolerance must be > 0, got {tol}")));
    }
    Ok(())
}

/// Precomputed `log V_n(t)` for `t = 1..=t_max` at a fixed sample size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    n: usize,
    gamma: f64,
    prior: ComponentCountPrior,
    tol: f64,
    /// `log_v[t - 1] = log V_n(t)`.
    log_v: Vec<f64>,
}

impl CoefficientTable {
    pub fn build(
        prior: ComponentCountPrior,
        gamma: f64,
        n: usize,
        t_max: usize,
        tol: f64,
    ) -> Result<Self> {
        prior.validate()?;
        validate_args(gamma, n, tol)?;
        if t_max == 0 || t_max > n {
            return Err(MfmError::config(format!(
                "t_max must lie in 1..={n}, got {t_max}"
            )));
        }
        let mut table = Self {
            n,
            gamma,
            prior,
            tol,
            log_v: Vec::with_capacity(t_max),
        };
        table.extend_to(t_max)?;
        Ok(table)
    }

    /// Table with the default extent: `min(n, 100)` for unbounded priors,
    /// `min(n, max_k)` for bounded ones.
    pub fn with_defaults(prior: ComponentCountPrior, gamma: f64, n: usize) -> Result<Self> {
        let t_max = match prior.support_max() {
            Some(max_k) => max_k.min(n),
            None => DEFAULT_T_MAX.min(n),
        };
        Self::build(prior, gamma, n, t_max.max(1), DEFAULT_TOL)
    }

    /// Tabulates coefficients up to `t_max` (no-op if already present).
    pub fn extend_to(&mut self, t_max: usize) -> Result<()> {
        for t in self.log_v.len() + 1..=t_max {
            let v = if self.prior.support_max().is_some_and(|m| t > m) {
                f64::NEG_INFINITY
            } else {
                log_sum_exp(&series_terms(&self.prior, self.gamma, self.n, t, self.tol)?)
            };
            self.log_v.push(v);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn prior(&self) -> &ComponentCountPrior {
        &self.prior
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn t_max(&self) -> usize {
        self.log_v.len()
    }

    pub fn log_v_values(&self) -> &[f64] {
        &self.log_v
    }

    /// `log V_n(t)`, or `None` when `t` is beyond the tabulated range.
    ///
    /// Beyond a bounded prior's support the value is `-inf` regardless of extent.
    pub fn log_v(&self, t: usize) -> Option<f64> {
        if t == 0 {
            return None;
        }
        if self.prior.support_max().is_some_and(|m| t > m) {
            return Some(f64::NEG_INFINITY);
        }
        self.log_v.get(t - 1).copied()
    }

    /// `log V_n(t+1) - log V_n(t)`: the log new-cluster factor with `t` clusters occupied.
    pub fn log_v_ratio(&self, t: usize) -> Result<f64> {
        let lo = self.log_v(t).ok_or_else(|| {
            MfmError::input(format!("t={t} outside table range 1..={}", self.t_max()))
        })?;
        if lo == f64::NEG_INFINITY {
            return Err(MfmError::OutsideSupport(format!(
                "log V_n({t}) = -inf for n={}",
                self.n
            )));
        }
        let hi = self.log_v(t + 1).ok_or_else(|| {
            MfmError::input(format!("t+1={} outside table range 1..={}", t + 1, self.t_max()))
        })?;
        if hi == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(hi - lo)
    }

    /// Like [`Self::log_v_ratio`], extending the table first when needed.
    pub fn log_v_ratio_extending(&mut self, t: usize) -> Result<f64> {
        if self.log_v(t + 1).is_none() {
            self.extend_to(t + 1)?;
        }
        self.log_v_ratio(t)
    }

    /// `log V_n(t)`, extending the table first when needed.
    pub fn log_v_extending(&mut self, t: usize) -> Result<f64> {
        if self.log_v(t).is_none() {
            self.extend_to(t)?;
        }
        self.log_v(t)
            .ok_or_else(|| MfmError::input("t must be >= 1".to_string()))
    }
}

/// Posterior over the number of components given `t` occupied clusters among `n` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPosterior {
    /// `probs[k - 1] = p(k | t, n)`; zero for `k < t`.
    pub probs: Vec<f64>,
}

impl ComponentPosterior {
    pub fn prob(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.probs.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn max_k(&self) -> usize {
        self.probs.len()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }
}

/// `p(k | t, n) ∝ p(k) k_(t) / (gamma k)^(n)`, truncated once the retained mass
/// exceeds `1 - tol` and renormalized over the retained support.
pub fn posterior_k_given_partition(
    prior: &ComponentCountPrior,
    gamma: f64,
    n: usize,
    t: usize,
    tol: f64,
) -> Result<ComponentPosterior> {
    prior.validate()?;
    validate_args(gamma, n, tol)?;
    if t == 0 || t > n {
        return Err(MfmError::input(format!("t must lie in 1..={n}, got {t}")));
    }
    let terms = series_terms(prior, gamma, n, t, tol)?;
    let norm = log_sum_exp(&terms);
    if norm == f64::NEG_INFINITY {
        return Err(MfmError::OutsideSupport(format!(
            "no prior mass on k >= {t}"
        )));
    }
    let mut probs = vec![0.0; t - 1];
    probs.extend(terms.iter().map(|lt| (lt - norm).exp()));
    while probs.len() > t && probs.last() == Some(&0.0) {
        probs.pop();
    }
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(ComponentPosterior { probs })
}
