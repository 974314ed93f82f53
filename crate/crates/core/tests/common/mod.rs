//! Independent reference computations shared by the integration tests. Nothing
//! here calls into the library's numerics, so agreement is a real check.

#![allow(dead_code)]

use mfm_core::{ComponentCountPrior, Matrix, ModelConfig};

/// Nodes and weights of the `m`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 2);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_m(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre integration of `f` over [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * total
}

/// `ln Γ(x)` by the Lanczos approximation (g = 7, 9 terms), written out here so
/// the oracles do not share the library's special functions.
pub fn ln_gamma_ref(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_ref(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Prior mass of `k` written out directly.
pub fn prior_mass(prior: &ComponentCountPrior, k: usize) -> f64 {
    match *prior {
        ComponentCountPrior::Geometric { r } => r * (1.0 - r).powi(k as i32 - 1),
        ComponentCountPrior::UniformBounded { max_k } => {
            if (1..=max_k).contains(&k) {
                1.0 / max_k as f64
            } else {
                0.0
            }
        }
    }
}

/// `ln [k_(t) / (gamma k)^(n)]` by explicit products.
pub fn ln_term(k: usize, t: usize, gamma: f64, n: usize) -> f64 {
    if k < t {
        return f64::NEG_INFINITY;
    }
    let falling: f64 = (0..t).map(|i| ((k - i) as f64).ln()).sum();
    let rising: f64 = (0..n).map(|i| (gamma * k as f64 + i as f64).ln()).sum();
    falling - rising
}

/// `ln V_n(t)` by plain summation over `k = t..=k_max`, largest term factored out.
pub fn brute_log_v(prior: &ComponentCountPrior, gamma: f64, n: usize, t: usize, k_max: usize) -> f64 {
    let logs: Vec<f64> = (t..=k_max)
        .map(|k| {
            let p = prior_mass(prior, k);
            if p > 0.0 {
                p.ln() + ln_term(k, t, gamma, n)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
}

/// `p(k | t, n)` for `k = 1..=k_max` by plain summation.
pub fn brute_posterior_k(prior: &ComponentCountPrior, gamma: f64, n: usize, t: usize, k_max: usize) -> Vec<f64> {
    let log_v = brute_log_v(prior, gamma, n, t, k_max);
    (1..=k_max)
        .map(|k| {
            let p = prior_mass(prior, k);
            if p == 0.0 || k < t {
                0.0
            } else {
                (p.ln() + ln_term(k, t, gamma, n) - log_v).exp()
            }
        })
        .collect()
}

/// Gaussian log density with precision `tau`.
pub fn ln_normal(x: f64, mean: f64, tau: f64) -> f64 {
    0.5 * (tau / (2.0 * std::f64::consts::PI)).ln() - 0.5 * tau * (x - mean).powi(2)
}

/// One-dimensional cluster marginal by two-dimensional quadrature over the
/// cluster mean `theta` and log-precision `u = ln tau`.
pub fn quadrature_log_marginal(xs: &[f64], m: f64, c: f64, alpha: f64, beta: f64) -> f64 {
    let rule = gauss_legendre(20);
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ln_gam_norm = alpha * beta.ln() - ln_gamma_ref(alpha);
    // Log joint density in (theta, u), Jacobian tau included.
    let log_joint = |theta: f64, u: f64| -> f64 {
        let tau = u.exp();
        let lik: f64 = xs.iter().map(|&x| ln_normal(x, theta, tau)).sum();
        lik + ln_normal(theta, m, c * tau) + ln_gam_norm + alpha * u - beta * tau
    };
    // Locate the peak on a coarse grid to centre the integration box.
    let center = (c * m + n * xbar) / (c + n);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut u = -25.0;
    while u < 25.0 {
        let v = log_joint(center, u);
        if v > best.0 {
            best = (v, u);
        }
        u += 0.01;
    }
    let peak = best.0;
    let inner = |u: f64| -> f64 {
        let tau = u.exp();
        let sd = 1.0 / ((c + n) * tau).sqrt();
        let (lo, hi) = (center - 40.0 * sd, center + 40.0 * sd);
        integrate(|th| (log_joint(th, u) - peak).exp(), lo, hi, 16, &rule)
    };
    let (ulo, uhi) = (best.1 - 30.0, best.1 + 12.0);
    let total = integrate(inner, ulo, uhi, 120, &rule);
    peak + total.ln()
}

/// Every set partition of `0..n` as a list of blocks, built by recursive
/// insertion (a different construction from restricted-growth enumeration).
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            go(i + 1, n, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        go(i + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// Closed-form univariate Normal-Gamma marginal written from scratch
/// (`theta | tau ~ N(m, 1/(c tau))`, `tau ~ Gam(alpha, beta)`).
pub fn ref_log_marginal_1d(xs: &[f64], m: f64, c: f64, alpha: f64, beta: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let cn = c + n;
    let an = alpha + n / 2.0;
    let bn = beta + 0.5 * ss + c * n * (xbar - m).powi(2) / (2.0 * cn);
    ln_gamma_ref(an) - ln_gamma_ref(alpha) + alpha * beta.ln() - an * bn.ln() + 0.5 * (c / cn).ln()
        - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Exact posterior over `k` by recursive-insertion enumeration and brute-force
/// coefficients. Returns probabilities for `k = 1..=k_max`.
pub fn reference_posterior_k(data: &Matrix, cfg: &ModelConfig, beta: f64, k_max: usize) -> Vec<f64> {
    let n = data.rows();
    let mut log_w_t = vec![Vec::new(); n + 1];
    for blocks in set_partitions(n) {
        let t = blocks.len();
        let log_v = brute_log_v(&cfg.count_prior, cfg.gamma, n, t, k_max.max(t));
        if log_v == f64::NEG_INFINITY {
            continue;
        }
        let mut w = log_v;
        for b in &blocks {
            w += ln_gamma_ref(cfg.gamma + b.len() as f64) - ln_gamma_ref(cfg.gamma);
            for d in 0..data.cols() {
                let xs: Vec<f64> = b.iter().map(|&i| data.get(i, d)).collect();
                w += ref_log_marginal_1d(&xs, cfg.mean[d], cfg.c[d], cfg.alpha, beta);
            }
        }
        log_w_t[t].push(w);
    }
    let all: Vec<f64> = log_w_t.iter().flatten().copied().collect();
    let top = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = all.iter().map(|w| (w - top).exp()).sum();
    let mut post = vec![0.0; k_max];
    for (t, ws) in log_w_t.iter().enumerate() {
        if ws.is_empty() {
            continue;
        }
        let pt: f64 = ws.iter().map(|w| (w - top).exp()).sum::<f64>() / z;
        let given_t = brute_posterior_k(&cfg.count_prior, cfg.gamma, n, t, k_max);
        for (p, q) in post.iter_mut().zip(given_t) {
            *p += pt * q;
        }
    }
    post
}

/// Total variation distance between two distributions indexed from `k = 1`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    0.5 * (0..len)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
