use crate::coefficients::{posterior_k_given_partition, DEFAULT_TOL};
use crate::error::{MfmError, Result};
use crate::prior::ComponentCountPrior;
use crate::sampler::ChainOutput;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainStats {
    /// Accepted over proposed split-merge moves; zero when none were proposed.
    pub acceptance_rate: f64,
    /// Integrated autocorrelation time of the cluster-count trace; `None` for a
    /// constant trace.
    pub autocorr_time: Option<f64>,
}

pub fn chain_stats(out: &ChainOutput) -> Result<ChainStats> {
    if out.trace_t.is_empty() {
        return Err(MfmError::EmptyTrace);
    }
    let acceptance_rate = if out.sm_proposed == 0 {
        0.0
    } else {
        out.sm_accepted as f64 / out.sm_proposed as f64
    };
    let trace: Vec<f64> = out.trace_t.iter().map(|&t| t as f64).collect();
    Ok(ChainStats {
        acceptance_rate,
        autocorr_time: integrated_autocorr_time(&trace),
    })
}

/// Integrated autocorrelation time `1 + 2 Σ_k rho_k`, truncated by Geyer's
/// initial positive sequence. `None` when the trace has zero variance.
pub fn integrated_autocorr_time(trace: &[f64]) -> Option<f64> {
    let n = trace.len();
    if n < 2 {
        return None;
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = trace.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return None;
    }
    // Pairs Γ_m = rho_{2m} + rho_{2m+1}; sum while positive.
    let mut sum_pairs = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum_pairs += pair;
        m += 1;
    }
    Some(2.0 * sum_pairs - 1.0)
}

/// Averages `p(k | t, n)` over the recorded cluster counts: the
/// Rao-Blackwellized alternative to the histogram of sampled `k`.
pub fn rao_blackwell_posterior_k(
    trace_t: &[usize],
    prior: &ComponentCountPrior,
    gamma: f64,
    n: usize,
) -> Result<Vec<f64>> {
    if trace_t.is_empty() {
        return Err(MfmError::EmptyTrace);
    }
    let max_t = trace_t.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max_t];
    for &t in trace_t {
        counts[t - 1] += 1;
    }
    let mut out: Vec<f64> = Vec::new();
    for (idx, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let weight = c as f64 / trace_t.len() as f64;
        let post = posterior_k_given_partition(prior, gamma, n, idx + 1, DEFAULT_TOL)?;
        if out.len() < post.probs.len() {
            out.resize(post.probs.len(), 0.0);
        }
        for (o, p) in out.iter_mut().zip(&post.probs) {
            *o += weight * p;
        }
    }
    Ok(out)
}
