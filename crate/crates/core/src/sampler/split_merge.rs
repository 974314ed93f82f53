//! Split-merge Metropolis-Hastings moves with restricted Gibbs launch states.

use rand::Rng;

use crate::coefficients::CoefficientTable;
use crate::error::{MfmError, Result};
use crate::matrix::Matrix;
use crate::model::{ClusterKernel, PredictiveCache};
use crate::numerics::ln_rising_factorial;
use crate::suffstats::SuffStats;

use super::state::PartitionState;

/// Two clusters `A` and `B` anchored by observations `i` and `j`, with the
/// remaining members free to move between them.
#[derive(Debug, Clone)]
pub struct LaunchState {
    members: Vec<usize>,
    /// `in_a[m]` is true when `members[m]` sits in `A`.
    in_a: Vec<bool>,
    a: SuffStats,
    b: SuffStats,
    cache_a: PredictiveCache,
    cache_b: PredictiveCache,
    spare: PredictiveCache,
}

impl LaunchState {
    /// Builds the launch state with anchors `i` in `A`, `j` in `B`, and each of
    /// `members` placed by `in_a`.
    pub fn new(
        kernel: &ClusterKernel,
        data: &Matrix,
        anchor_a: usize,
        anchor_b: usize,
        members: Vec<usize>,
        in_a: Vec<bool>,
    ) -> Self {
        assert_eq!(members.len(), in_a.len());
        let dim = data.cols();
        let mut a = SuffStats::empty(dim).with(data.row(anchor_a));
        let mut b = SuffStats::empty(dim).with(data.row(anchor_b));
        for (&k, &side) in members.iter().zip(&in_a) {
            if side {
                a.add(data.row(k));
            } else {
                b.add(data.row(k));
            }
        }
        let cache_a = kernel.cache_for(&a);
        let cache_b = kernel.cache_for(&b);
        Self {
            members,
            in_a,
            a,
            b,
            cache_a,
            cache_b,
            spare: PredictiveCache::default(),
        }
    }

    /// Uniformly random initial placement followed by `scans` restricted Gibbs scans.
    pub fn launch<R: Rng + ?Sized>(
        kernel: &ClusterKernel,
        data: &Matrix,
        anchor_a: usize,
        anchor_b: usize,
        members: Vec<usize>,
        scans: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let in_a = members.iter().map(|_| rng.random::<bool>()).collect();
        let mut launch = Self::new(kernel, data, anchor_a, anchor_b, members, in_a);
        for _ in 0..scans {
            launch.launch_scan(kernel, data, rng)?;
        }
        Ok(launch)
    }

    pub fn in_a(&self) -> &[bool] {
        &self.in_a
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn stats_a(&self) -> &SuffStats {
        &self.a
    }

    pub fn stats_b(&self) -> &SuffStats {
        &self.b
    }

    /// Moves member `m` between the two clusters, to `target` if given, else by
    /// sampling. Returns the log probability of the side taken when `want_log`,
    /// zero otherwise.
    fn step<R: Rng + ?Sized>(
        &mut self,
        kernel: &ClusterKernel,
        data: &Matrix,
        m: usize,
        target: Option<bool>,
        want_log: bool,
        rng: &mut R,
    ) -> Result<f64> {
        let x = data.row(self.members[m]);
        let was_a = self.in_a[m];
        if was_a {
            self.a.remove(x)?;
            std::mem::swap(&mut self.cache_a, &mut self.spare);
            kernel.fill_cache(&self.a, &mut self.cache_a);
        } else {
            self.b.remove(x)?;
            std::mem::swap(&mut self.cache_b, &mut self.spare);
            kernel.fill_cache(&self.b, &mut self.cache_b);
        }
        let wa = kernel.size_log_weight(self.a.n()) + self.cache_a.log_predictive(x);
        let wb = kernel.size_log_weight(self.b.n()) + self.cache_b.log_predictive(x);
        // P(A) = 1 / (1 + exp(wb - wa))
        let diff = wb - wa;
        let to_a = match target {
            Some(side) => side,
            None => rng.random::<f64>() * (1.0 + diff.exp()) < 1.0,
        };
        self.in_a[m] = to_a;
        // Returning to the original side restores the saved cache.
        match (to_a, was_a) {
            (true, true) => {
                self.a.add(x);
                std::mem::swap(&mut self.cache_a, &mut self.spare);
            }
            (false, false) => {
                self.b.add(x);
                std::mem::swap(&mut self.cache_b, &mut self.spare);
            }
            (true, false) => {
                self.a.add(x);
                kernel.fill_cache(&self.a, &mut self.cache_a);
            }
            (false, true) => {
                self.b.add(x);
                kernel.fill_cache(&self.b, &mut self.cache_b);
            }
        }
        if !want_log {
            return Ok(0.0);
        }
        Ok(if to_a { -softplus(diff) } else { -softplus(-diff) })
    }

    /// One restricted Gibbs scan; returns the log probability of the sequence drawn.
    pub fn scan<R: Rng + ?Sized>(
        &mut self,
        kernel: &ClusterKernel,
        data: &Matrix,
        rng: &mut R,
    ) -> Result<f64> {
        let mut log_q = 0.0;
        for m in 0..self.members.len() {
            log_q += self.step(kernel, data, m, None, true, rng)?;
        }
        Ok(log_q)
    }

    /// A restricted Gibbs scan that does not track its proposal density.
    fn launch_scan<R: Rng + ?Sized>(
        &mut self,
        kernel: &ClusterKernel,
        data: &Matrix,
        rng: &mut R,
    ) -> Result<()> {
        for m in 0..self.members.len() {
            self.step(kernel, data, m, None, false, rng)?;
        }
        Ok(())
    }

    /// One restricted Gibbs scan forced to end at `target`; returns the log
    /// probability that an unforced scan from this state produces `target`.
    pub fn scan_to(&mut self, kernel: &ClusterKernel, data: &Matrix, target: &[bool]) -> Result<f64> {
        assert_eq!(target.len(), self.members.len());
        let mut log_q = 0.0;
        let mut no_rng = NoRng;
        for (m, &side) in target.iter().enumerate() {
            log_q += self.step(kernel, data, m, Some(side), true, &mut no_rng)?;
        }
        Ok(log_q)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// An rng that is never consulted; forced steps do not draw.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("forced restricted scan drew a random number")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("forced restricted scan drew a random number")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("forced restricted scan drew a random number")
    }
}

/// Log of `p(split) / p(merged)` under the partition prior and cluster marginals,
/// where the merged partition has `t_merged` clusters and the split one `t_merged + 1`.
///
/// The partition prior is `V_n(t) Π_c gamma^(n_c)` (rising factorials).
pub fn log_split_ratio(
    table: &mut CoefficientTable,
    kernel: &ClusterKernel,
    gamma: f64,
    t_merged: usize,
    a: &SuffStats,
    b: &SuffStats,
) -> Result<f64> {
    let v_split = table.log_v_extending(t_merged + 1)?;
    if v_split == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let v_merged = table.log_v_extending(t_merged)?;
    let merged = a.merged(b);
    let prior = v_split - v_merged + ln_rising_factorial(gamma, a.n()) + ln_rising_factorial(gamma, b.n())
        - ln_rising_factorial(gamma, merged.n());
    let lik = kernel.log_marginal(a) + kernel.log_marginal(b) - kernel.log_marginal(&merged);
    Ok(prior + lik)
}

/// Log MH acceptance ratio of a split proposal produced with log density `log_q`.
pub fn split_log_acceptance(log_split_ratio: f64, log_q: f64) -> f64 {
    log_split_ratio - log_q
}

/// Log MH acceptance ratio of the merge whose reverse split has log density `log_q`.
pub fn merge_log_acceptance(log_split_ratio: f64, log_q: f64) -> f64 {
    -log_split_ratio + log_q
}

/// Running counts of proposed and accepted moves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounter {
    pub proposed: u64,
    pub accepted: u64,
}

/// One split-merge proposal. Returns whether it was accepted.
pub fn split_merge_move<R: Rng + ?Sized>(
    state: &mut PartitionState,
    data: &Matrix,
    gamma: f64,
    table: &mut CoefficientTable,
    rng: &mut R,
    restricted_scans: usize,
    counter: &mut MoveCounter,
) -> Result<bool> {
    let n = state.n();
    if n < 2 {
        return Err(MfmError::input("split-merge needs at least two observations"));
    }
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    let ci = state.label(i);
    let cj = state.label(j);
    let members: Vec<usize> = (0..n)
        .filter(|&k| k != i && k != j && (state.label(k) == ci || state.label(k) == cj))
        .collect();
    counter.proposed += 1;

    let kernel = state.kernel().clone();
    let mut launch = LaunchState::launch(&kernel, data, i, j, members, restricted_scans, rng)?;
    let t = state.t();

    let accepted = if ci == cj {
        let log_q = launch.scan(&kernel, data, rng)?;
        let ratio = log_split_ratio(table, &kernel, gamma, t, launch.stats_a(), launch.stats_b())?;
        if ratio == f64::NEG_INFINITY {
            return Ok(false);
        }
        let log_acc = split_log_acceptance(ratio, log_q);
        let accept = log_acc >= 0.0 || rng.random::<f64>().ln() < log_acc;
        if accept {
            let new_id = state.open_cluster(launch.stats_a().clone());
            state.replace_stats(ci, launch.stats_b().clone());
            state.set_label(i, new_id);
            for (&k, &side) in launch.members().iter().zip(launch.in_a()) {
                if side {
                    state.set_label(k, new_id);
                }
            }
        }
        accept
    } else {
        let original: Vec<bool> = launch.members().iter().map(|&k| state.label(k) == ci).collect();
        let log_q = launch.scan_to(&kernel, data, &original)?;
        let a = state.cluster(ci).expect("occupied").stats().clone();
        let b = state.cluster(cj).expect("occupied").stats().clone();
        let ratio = log_split_ratio(table, &kernel, gamma, t - 1, &a, &b)?;
        let log_acc = merge_log_acceptance(ratio, log_q);
        let accept = log_acc >= 0.0 || rng.random::<f64>().ln() < log_acc;
        if accept {
            let merged = a.merged(&b);
            for k in launch.members().iter().copied().chain([i, j]) {
                state.set_label(k, cj);
            }
            state.close_cluster(ci);
            state.replace_stats(cj, merged);
        }
        accept
    };
    if accepted {
        counter.accepted += 1;
    }
    Ok(accepted)
}
