//! Log-space arithmetic shared by the model and sampler.

use rand::Rng;

pub use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log(exp(a) + exp(b))` with `-inf` handled as the additive identity.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp. Returns `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// log of the rising factorial `x (x+1) ... (x+n-1)`.
#[inline]
pub fn ln_rising_factorial(x: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    ln_gamma(x + n as f64) - ln_gamma(x)
}

/// log of the falling factorial `k (k-1) ... (k-t+1)`; `-inf` when `t > k`.
#[inline]
pub fn ln_falling_factorial(k: usize, t: usize) -> f64 {
    if t > k {
        return f64::NEG_INFINITY;
    }
    if t == 0 {
        return 0.0;
    }
    ln_gamma((k + 1) as f64) - ln_gamma((k - t + 1) as f64)
}

/// Normalizes log weights in place into probabilities. Returns the log normalizer.
pub fn normalize_log_weights(weights: &mut [f64]) -> f64 {
    let lse = log_sum_exp(weights);
    if lse.is_finite() {
        for w in weights.iter_mut() {
            *w = (*w - lse).exp();
        }
    }
    lse
}

/// Draws an index proportionally to `exp(log_weights)`.
///
/// Returns `None` when every weight is `-inf`.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Option<usize> {
    let mut scratch = Vec::with_capacity(log_weights.len());
    sample_log_categorical_with(log_weights, &mut scratch, rng)
}

/// [`sample_log_categorical`] reusing `scratch` for the exponentiated weights.
pub fn sample_log_categorical_with<R: Rng + ?Sized>(
    log_weights: &[f64],
    scratch: &mut Vec<f64>,
    rng: &mut R,
) -> Option<usize> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return None;
    }
    scratch.clear();
    scratch.extend(log_weights.iter().map(|w| (w - max).exp()));
    sample_categorical(scratch, rng)
}

/// Draws an index from normalized (or unnormalized, nonnegative) probabilities.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = probs.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last = Some(i);
            if u < p {
                return Some(i);
            }
            u -= p;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..30u32 {
            let expected = fact.ln();
            let got = ln_gamma(n as f64);
            assert!(
                (got - expected).abs() <= 1e-13 * expected.abs().max(1.0),
                "n={n}: {got} vs {expected}"
            );
            fact *= n as f64;
        }
    }

    #[test]
    fn log_sum_exp_handles_infinities() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        let v = log_sum_exp(&[0.0, f64::NEG_INFINITY]);
        assert_eq!(v, 0.0);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add_exp(-2.0, -3.0) - log_sum_exp(&[-2.0, -3.0])).abs() < 1e-15);
    }

    #[test]
    fn factorial_helpers() {
        assert_eq!(ln_falling_factorial(3, 4), f64::NEG_INFINITY);
        assert!((ln_falling_factorial(5, 2) - 20f64.ln()).abs() < 1e-13);
        assert!((ln_rising_factorial(2.0, 3) - 24f64.ln()).abs() < 1e-13);
        assert_eq!(ln_rising_factorial(0.5, 0), 0.0);
    }

    #[test]
    fn categorical_sampling_skips_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = [f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY];
        for _ in 0..100 {
            assert_eq!(sample_log_categorical(&w, &mut rng), Some(1));
        }
        assert_eq!(
            sample_log_categorical(&[f64::NEG_INFINITY], &mut rng),
            None
        );
        assert_eq!(sample_categorical(&[0.0, 0.0], &mut rng), None);
    }

    #[test]
    fn normalized_weights_sum_to_one() {
        let mut w = vec![-1.0, -2.5, 3.0, f64::NEG_INFINITY];
        normalize_log_weights(&mut w);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[3], 0.0);
    }
}
