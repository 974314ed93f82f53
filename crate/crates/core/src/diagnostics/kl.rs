use rand::Rng;

use crate::datagen::{Component, ContaminationSpec, MixtureSpec};
use crate::error::{MfmError, Result};
use crate::rng::{stream, KL_STREAM};

/// A univariate distribution that can be sampled and evaluated.
pub trait UnivariateDensity {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
    fn ln_pdf(&self, x: f64) -> f64;
}

impl UnivariateDensity for Component {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Component::sample(self, rng)
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        Component::ln_pdf(self, x)
    }
}

impl UnivariateDensity for MixtureSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_one(rng).0
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        MixtureSpec::ln_pdf(self, x)
    }
}

impl UnivariateDensity for ContaminationSpec {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.epsilon {
            self.contaminant.sample_one(rng).0
        } else {
            self.base.sample_one(rng).0
        }
    }
    fn ln_pdf(&self, x: f64) -> f64 {
        ContaminationSpec::ln_pdf(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `KL(f0 || f) = E_f0[log f0(X) - log f(X)]`.
///
/// A draw where `log f = -inf` is a support violation (the divergence is
/// infinite) and is reported as an error.
pub fn mc_kl_estimate<P, F>(f0: &P, ln_f: F, n_samples: usize, seed: u64) -> Result<KlEstimate>
where
    P: UnivariateDensity,
    F: Fn(f64) -> f64,
{
    if n_samples < 2 {
        return Err(MfmError::input("KL estimation needs at least two samples"));
    }
    let mut rng = stream(seed, KL_STREAM);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        let x = f0.sample(&mut rng);
        let lf = ln_f(x);
        if lf == f64::NEG_INFINITY {
            return Err(MfmError::SupportViolation { x });
        }
        let v = f0.ln_pdf(x) - lf;
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok(KlEstimate {
        estimate: mean,
        std_error: (var / n_samples as f64).sqrt(),
    })
}
