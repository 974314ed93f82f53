use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{MfmError, Result};
use crate::matrix::Matrix;
use crate::model::{BetaSpec, ClusterKernel, ModelConfig, PredictiveCache};
use crate::suffstats::SuffStats;

/// An occupied cluster: its statistics plus cached predictive constants.
#[derive(Debug, Clone)]
pub struct Cluster {
    stats: SuffStats,
    cache: PredictiveCache,
}

impl Cluster {
    pub fn stats(&self) -> &SuffStats {
        &self.stats
    }

    pub fn size(&self) -> usize {
        self.stats.n()
    }

    #[inline]
    pub fn log_predictive(&self, x: &[f64]) -> f64 {
        self.cache.log_predictive(x)
    }
}

/// Cluster assignments of every observation plus per-cluster statistics.
///
/// Cluster ids index a slot table. Ids released during a sweep are held back
/// until [`PartitionState::release_retired`] so that one sweep never reuses an id.
#[derive(Debug, Clone)]
pub struct PartitionState {
    z: Vec<usize>,
    clusters: Vec<Option<Cluster>>,
    free: Vec<usize>,
    retired: Vec<usize>,
    t: usize,
    kernel: ClusterKernel,
    empty_cache: PredictiveCache,
    /// Cache of the cluster last detached from, restored if the point returns.
    spare: PredictiveCache,
    spare_id: Option<usize>,
}

pub(crate) fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| MfmError::input(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(g.sample(rng))
}


impl PartitionState {
    /// All observations in one cluster; `beta` fixed or drawn from its hyperprior.
    pub fn init<R: Rng + ?Sized>(data: &Matrix, cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        if data.rows() == 0 {
            return Err(MfmError::input("cannot initialize a partition of empty data"));
        }
        let beta = match cfg.beta {
            BetaSpec::Fixed { beta } => beta,
            BetaSpec::Hyperprior { shape, rate } => gamma_draw(shape, rate, rng)?,
        };
        Self::from_labels(data, cfg, &vec![0; data.rows()], beta)
    }

    /// State with the given cluster labels (any nonnegative integers) and rate `beta`.
    pub fn from_labels(data: &Matrix, cfg: &ModelConfig, labels: &[usize], beta: f64) -> Result<Self> {
        cfg.validate()?;
        if data.cols() != cfg.dim() {
            return Err(MfmError::input(format!(
                "data has {} columns but the model has dimension {}",
                data.cols(),
                cfg.dim()
            )));
        }
        if labels.len() != data.rows() {
            return Err(MfmError::input("label count differs from row count"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(MfmError::input(format!("beta must be > 0, got {beta}")));
        }
        let kernel = ClusterKernel::new(cfg, beta, data.rows());
        let empty_cache = kernel.cache_for(&SuffStats::empty(cfg.dim()));
        let slots = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut state = Self {
            z: labels.to_vec(),
            clusters: vec![None; slots],
            free: Vec::new(),
            retired: Vec::new(),
            t: 0,
            kernel,
            empty_cache,
            spare: PredictiveCache::default(),
            spare_id: None,
        };
        state.rebuild_clusters(data);
        Ok(state)
    }

    fn rebuild_clusters(&mut self, data: &Matrix) {
        let dim = data.cols();
        let mut stats: Vec<Option<SuffStats>> = vec![None; self.clusters.len()];
        for (i, &c) in self.z.iter().enumerate() {
            stats[c]
                .get_or_insert_with(|| SuffStats::empty(dim))
                .add(data.row(i));
        }
        self.t = 0;
        self.free.clear();
        self.spare_id = None;
        for (id, s) in stats.into_iter().enumerate() {
            self.clusters[id] = s.map(|stats| {
                let cache = self.kernel.cache_for(&stats);
                Cluster { stats, cache }
            });
            if self.clusters[id].is_some() {
                self.t += 1;
            } else if !self.retired.contains(&id) {
                self.free.push(id);
            }
        }
        // Lowest free id is handed out first.
        self.free.sort_unstable_by(|a, b| b.cmp(a));
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Number of occupied clusters.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn beta(&self) -> f64 {
        self.kernel.beta()
    }

    pub fn kernel(&self) -> &ClusterKernel {
        &self.kernel
    }

    pub fn assignments(&self) -> &[usize] {
        &self.z
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.z[i]
    }

    pub fn cluster(&self, id: usize) -> Option<&Cluster> {
        self.clusters.get(id).and_then(Option::as_ref)
    }

    /// Occupied clusters in ascending id order.
    pub fn clusters(&self) -> impl Iterator<Item = (usize, &Cluster)> {
        self.clusters
            .iter()
            .enumerate()
            .filter_map(|(id, c)| c.as_ref().map(|c| (id, c)))
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters().map(|(_, c)| c.size()).collect()
    }

    #[inline]
    pub fn empty_log_predictive(&self, x: &[f64]) -> f64 {
        self.empty_cache.log_predictive(x)
    }

    /// Replaces `beta` and refreshes every cached predictive.
    pub fn set_beta(&mut self, beta: f64) {
        self.spare_id = None;
        self.kernel.set_beta(beta);
        let kernel = &self.kernel;
        for c in self.clusters.iter_mut().flatten() {
            kernel.fill_cache(&c.stats, &mut c.cache);
        }
        self.empty_cache = self.kernel.cache_for(&SuffStats::empty(self.dim()));
    }

    /// Detaches observation `i` from its cluster, deleting the cluster if it empties.
    /// Returns the id it was removed from. The label of `i` is left stale until
    /// [`Self::assign`] is called.
    pub(crate) fn detach(&mut self, i: usize, x: &[f64]) -> Result<usize> {
        let id = self.z[i];
        let cluster = self.clusters[id]
            .as_mut()
            .ok_or_else(|| MfmError::input(format!("observation {i} references empty cluster {id}")))?;
        cluster.stats.remove(x)?;
        if cluster.stats.is_empty() {
            self.clusters[id] = None;
            self.retired.push(id);
            self.t -= 1;
            self.spare_id = None;
        } else {
            std::mem::swap(&mut cluster.cache, &mut self.spare);
            self.kernel.fill_cache(&cluster.stats, &mut cluster.cache);
            self.spare_id = Some(id);
        }
        Ok(id)
    }

    /// Attaches observation `i` to the occupied cluster `id`.
    pub(crate) fn assign(&mut self, i: usize, x: &[f64], id: usize) {
        let cluster = self.clusters[id].as_mut().expect("assign to occupied cluster");
        cluster.stats.add(x);
        if self.spare_id == Some(id) {
            std::mem::swap(&mut cluster.cache, &mut self.spare);
        } else {
            self.kernel.fill_cache(&cluster.stats, &mut cluster.cache);
        }
        self.spare_id = None;
        self.z[i] = id;
    }

    /// Opens a new cluster holding the given statistics; returns its id.
    pub(crate) fn open_cluster(&mut self, stats: SuffStats) -> usize {
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                self.clusters.push(None);
                self.clusters.len() - 1
            }
        };
        let cache = self.kernel.cache_for(&stats);
        self.clusters[id] = Some(Cluster { stats, cache });
        self.t += 1;
        self.spare_id = None;
        id
    }

    /// Replaces the statistics of cluster `id` (which must be occupied).
    pub(crate) fn replace_stats(&mut self, id: usize, stats: SuffStats) {
        self.spare_id = None;
        let cache = self.kernel.cache_for(&stats);
        self.clusters[id] = Some(Cluster { stats, cache });
    }

    /// Deletes cluster `id` outright; its members must already be relabeled.
    pub(crate) fn close_cluster(&mut self, id: usize) {
        if self.clusters[id].take().is_some() {
            self.t -= 1;
            self.retired.push(id);
        }
    }

    pub(crate) fn set_label(&mut self, i: usize, id: usize) {
        self.z[i] = id;
    }

    /// Makes ids freed since the last call available again.
    pub fn release_retired(&mut self) {
        self.free.append(&mut self.retired);
        self.free.sort_unstable_by(|a, b| b.cmp(a));
    }

    /// Recomputes every cluster's statistics from its members.
    pub fn refresh_stats(&mut self, data: &Matrix) {
        self.release_retired();
        self.rebuild_clusters(data);
    }

    /// Checks the partition invariants against a from-scratch recomputation.
    pub fn audit(&self, data: &Matrix, tol: f64) -> Result<()> {
        let dim = data.cols();
        let mut fresh: Vec<Option<SuffStats>> = vec![None; self.clusters.len()];
        for (i, &c) in self.z.iter().enumerate() {
            if self.cluster(c).is_none() {
                return Err(MfmError::input(format!(
                    "observation {i} labeled with unoccupied cluster {c}"
                )));
            }
            fresh[c]
                .get_or_insert_with(|| SuffStats::empty(dim))
                .add(data.row(i));
        }
        let occupied = self.clusters().count();
        if occupied != self.t {
            return Err(MfmError::input(format!(
                "t = {} but {occupied} clusters are occupied",
                self.t
            )));
        }
        let total: usize = self.clusters().map(|(_, c)| c.size()).sum();
        if total != self.n() {
            return Err(MfmError::input(format!("cluster sizes sum to {total}, not {}", self.n())));
        }
        for (id, c) in self.clusters() {
            match &fresh[id] {
                Some(s) if s.approx_eq(&c.stats, tol) => {}
                _ => {
                    return Err(MfmError::input(format!(
                        "cluster {id} statistics drifted from recomputation"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Labels relabeled in order of first appearance (a restricted-growth string).
    pub fn canonical_labels(&self) -> Vec<usize> {
        canonical_labels(&self.z)
    }
}

/// Relabels clusters in order of first appearance: `[5, 2, 5]` becomes `[0, 1, 0]`.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}
