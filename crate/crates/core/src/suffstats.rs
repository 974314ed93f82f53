use serde::{Deserialize, Serialize};

use crate::error::{MfmError, Result};

/// Per-dimension count, sum and sum of squares of the points in a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffStats {
    n: usize,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl SuffStats {
    pub fn empty(dim: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; dim],
            sumsq: vec![0.0; dim],
        }
    }

    pub fn from_points<'a>(dim: usize, points: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut s = Self::empty(dim);
        for x in points {
            s.add(x);
        }
        s
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    #[inline]
    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    #[inline]
    pub fn sumsq(&self) -> &[f64] {
        &self.sumsq
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Centered sum of squares `Σ (x - mean)^2` in dimension `d`, clamped at zero.
    #[inline]
    pub fn centered_ss(&self, d: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.sumsq[d] - self.sum[d] * self.sum[d] / self.n as f64).max(0.0)
    }

    #[inline]
    pub fn add(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim());
        self.n += 1;
        for ((s, q), &v) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).zip(x) {
            *s += v;
            *q += v * v;
        }
    }

    #[inline]
    pub fn remove(&mut self, x: &[f64]) -> Result<()> {
        debug_assert_eq!(x.len(), self.dim());
        if self.n == 0 {
            return Err(MfmError::EmptyStats);
        }
        self.n -= 1;
        if self.n == 0 {
            self.sum.iter_mut().for_each(|v| *v = 0.0);
            self.sumsq.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        for ((s, q), &v) in self.sum.iter_mut().zip(self.sumsq.iter_mut()).zip(x) {
            *s -= v;
            *q -= v * v;
        }
        Ok(())
    }

    pub fn with(&self, x: &[f64]) -> Self {
        let mut s = self.clone();
        s.add(x);
        s
    }

    /// Fieldwise sum: the statistics of the union of both point sets.
    pub fn merged(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            n: self.n + other.n,
            sum: self.sum.iter().zip(&other.sum).map(|(a, b)| a + b).collect(),
            sumsq: self
                .sumsq
                .iter()
                .zip(&other.sumsq)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Fieldwise comparison with relative tolerance `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        self.n == other.n
            && self.dim() == other.dim()
            && self.sum.iter().zip(&other.sum).all(|(&a, &b)| close(a, b))
            && self.sumsq.iter().zip(&other.sumsq).all(|(&a, &b)| close(a, b))
    }
}
