use rand::Rng;

use crate::coefficients::CoefficientTable;
use crate::error::{MfmError, Result};
use crate::matrix::Matrix;
use crate::numerics::sample_log_categorical_with;
use crate::suffstats::SuffStats;

use super::state::PartitionState;

/// Where an observation may go during reassignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Existing(usize),
    New,
}

/// Unnormalized log reassignment weights of `x` given the state with `x` removed:
/// `log(n_c + gamma) + log p(x | c)` for each occupied cluster, and
/// `log gamma + log V_n(t+1)/V_n(t) + log p(x)` for a new one.
pub fn reassignment_weights(
    state: &PartitionState,
    x: &[f64],
    gamma: f64,
    table: &mut CoefficientTable,
    destinations: &mut Vec<Destination>,
    log_weights: &mut Vec<f64>,
) -> Result<()> {
    let kernel = state.kernel();
    destinations.clear();
    log_weights.clear();
    for (id, c) in state.clusters() {
        destinations.push(Destination::Existing(id));
        log_weights.push(kernel.size_log_weight(c.size()) + c.log_predictive(x));
    }
    let t = state.t();
    let new_weight = if t == 0 {
        // Nothing else to join.
        0.0
    } else {
        let ratio = table.log_v_ratio_extending(t)?;
        if ratio == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            gamma.ln() + ratio + state.empty_log_predictive(x)
        }
    };
    destinations.push(Destination::New);
    log_weights.push(new_weight);
    Ok(())
}

/// One systematic scan reassigning every observation from its full conditional.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut PartitionState,
    data: &Matrix,
    gamma: f64,
    table: &mut CoefficientTable,
    rng: &mut R,
) -> Result<()> {
    let mut destinations = Vec::new();
    let mut log_weights = Vec::new();
    let mut scratch = Vec::new();
    for i in 0..data.rows() {
        let x = data.row(i);
        state.detach(i, x)?;
        reassignment_weights(state, x, gamma, table, &mut destinations, &mut log_weights)?;
        let pick = sample_log_categorical_with(&log_weights, &mut scratch, rng).ok_or(MfmError::DegenerateWeights)?;
        match destinations[pick] {
            Destination::Existing(id) => state.assign(i, x, id),
            Destination::New => {
                let id = state.open_cluster(SuffStats::empty(data.cols()).with(x));
                state.set_label(i, id);
            }
        }
    }
    state.release_retired();
    Ok(())
}
