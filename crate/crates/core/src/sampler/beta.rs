use rand::Rng;

use crate::error::{MfmError, Result};
use crate::model::{BetaSpec, ModelConfig};

use super::state::{gamma_draw, PartitionState};

/// Shape and rate of `beta | tau ~ Gam(u + t D alpha, v + Σ tau)`.
pub fn beta_conditional(
    hyper_shape: f64,
    hyper_rate: f64,
    alpha: f64,
    n_precisions: usize,
    sum_tau: f64,
) -> (f64, f64) {
    (
        hyper_shape + n_precisions as f64 * alpha,
        hyper_rate + sum_tau,
    )
}

/// Draws every occupied cluster's per-dimension precision from its collapsed
/// posterior `Gam(alpha + n/2, beta_n)`, in ascending cluster-id order.
pub fn draw_cluster_precisions<R: Rng + ?Sized>(
    state: &PartitionState,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let kernel = state.kernel();
    let mut taus = Vec::with_capacity(state.t() * state.dim());
    for (_, c) in state.clusters() {
        for d in 0..state.dim() {
            let (shape, rate) = kernel.precision_posterior(c.stats(), d);
            taus.push(gamma_draw(shape, rate, rng)?);
        }
    }
    Ok(taus)
}

/// Gibbs update of the precision rate `beta` under its Gamma hyperprior.
///
/// Cluster precisions are instantiated, `beta` is drawn from its conditional,
/// and the state's cached predictives are refreshed with the new value.
pub fn resample_beta<R: Rng + ?Sized>(
    state: &mut PartitionState,
    cfg: &ModelConfig,
    rng: &mut R,
) -> Result<f64> {
    let BetaSpec::Hyperprior { shape, rate } = cfg.beta else {
        return Err(MfmError::config("resample_beta called with a fixed beta"));
    };
    let taus = draw_cluster_precisions(state, rng)?;
    let (post_shape, post_rate) =
        beta_conditional(shape, rate, cfg.alpha, taus.len(), taus.iter().sum());
    let beta = gamma_draw(post_shape, post_rate, rng)?;
    // A draw can underflow to zero for tiny shapes; keep beta strictly positive.
    let beta = beta.max(f64::MIN_POSITIVE);
    state.set_beta(beta);
    Ok(beta)
}
