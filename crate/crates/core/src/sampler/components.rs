use std::collections::HashMap;

use rand::Rng;

use crate::coefficients::{posterior_k_given_partition, ComponentPosterior, DEFAULT_TOL};
use crate::error::{MfmError, Result};
use crate::numerics::sample_categorical;
use crate::prior::ComponentCountPrior;

/// Draws `k ~ p(k | t, n)`.
pub fn draw_k_given_t<R: Rng + ?Sized>(
    prior: &ComponentCountPrior,
    gamma: f64,
    n: usize,
    t: usize,
    rng: &mut R,
) -> Result<usize> {
    let post = posterior_k_given_partition(prior, gamma, n, t, DEFAULT_TOL)?;
    draw_from(&post, rng)
}

fn draw_from<R: Rng + ?Sized>(post: &ComponentPosterior, rng: &mut R) -> Result<usize> {
    sample_categorical(&post.probs, rng)
        .map(|i| i + 1)
        .ok_or(MfmError::DegenerateWeights)
}

/// Memoized `p(k | t, n)` for one `(prior, gamma, n)`.
#[derive(Debug, Clone)]
pub struct ComponentSampler {
    prior: ComponentCountPrior,
    gamma: f64,
    n: usize,
    cache: HashMap<usize, ComponentPosterior>,
}

impl ComponentSampler {
    pub fn new(prior: ComponentCountPrior, gamma: f64, n: usize) -> Self {
        Self {
            prior,
            gamma,
            n,
            cache: HashMap::new(),
        }
    }

    pub fn posterior(&mut self, t: usize) -> Result<&ComponentPosterior> {
        if !self.cache.contains_key(&t) {
            let post = posterior_k_given_partition(&self.prior, self.gamma, self.n, t, DEFAULT_TOL)?;
            self.cache.insert(t, post);
        }
        Ok(&self.cache[&t])
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, t: usize, rng: &mut R) -> Result<usize> {
        let post = self.posterior(t)?;
        draw_from(post, rng)
    }
}
