use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};

/// Prior over the number of mixture components `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentCountPrior {
    /// Mass `r (1-r)^(k-1)` on `k = 1, 2, ...`.
    Geometric { r: f64 },
    /// Mass `1 / max_k` on `k = 1, ..., max_k`.
    UniformBounded { max_k: usize },
}

impl ComponentCountPrior {
    pub fn geometric(r: f64) -> Result<Self> {
        let p = Self::Geometric { r };
        p.validate()?;
        Ok(p)
    }

    pub fn uniform_bounded(max_k: usize) -> Result<Self> {
        let p = Self::UniformBounded { max_k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Geometric { r } if !(r > 0.0 && r < 1.0) => Err(MfmError::config(format!(
                "geometric prior needs r in (0,1), got {r}"
            ))),
            Self::UniformBounded { max_k: 0 } => {
                Err(MfmError::config("uniform prior needs max_k >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Log prior mass of `k`; `-inf` outside the support (including `k = 0`).
    pub fn log_prior_k(&self, k: usize) -> f64 {
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::Geometric { r } => r.ln() + (k - 1) as f64 * (-r).ln_1p(),
            Self::UniformBounded { max_k } => {
                if k <= max_k {
                    -(max_k as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Largest `k` with positive mass, if the support is finite.
    pub fn support_max(&self) -> Option<usize> {
        match *self {
            Self::Geometric { .. } => None,
            Self::UniformBounded { max_k } => Some(max_k),
        }
    }

    /// Limiting ratio `p(k+1) / p(k)` of the prior tail, used to bound series remainders.
    pub(crate) fn tail_ratio(&self) -> f64 {
        match *self {
            Self::Geometric { r } => 1.0 - r,
            Self::UniformBounded { .. } => 0.0,
        }
    }
}
