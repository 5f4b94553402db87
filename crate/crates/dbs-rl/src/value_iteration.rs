//! Value iteration with a pluggable per-state summary operator, plus the
//! exact max-operator oracle used as ground truth for loss curves.
//!
//! One sweep is: back up `Q(s,a) = r(s,a) + gamma * sum_s' p(s'|s,a) V(s')`,
//! then summarize each non-terminal row with the selected operator. Terminal
//! states are pinned to value 0 so every operator treats them identically.
//! For the dynamic-softmax operator the schedule index is the sweep number,
//! starting at 1.

use crate::error::{Error, Result};
use crate::mdp::{value_loss, QTable, TabularMdp};
use crate::operators::OperatorKind;

/// Tolerance at which the internal oracle is solved before recording losses.
/// Two orders below the tightest tolerance asserted anywhere downstream.
pub const ORACLE_TOL: f64 = 1e-12;

/// One Bellman backup of the Q-table from a state-value function.
/// Rows of terminal states are left at 0.
pub fn bellman_backup_q(mdp: &TabularMdp, v: &[f64]) -> Result<QTable> {
    if v.len() != mdp.n_states() {
        return Err(Error::DimensionMismatch {
            expected: mdp.n_states(),
            actual: v.len(),
        });
    }
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..mdp.n_actions() {
            let expected: f64 = mdp
                .transition_row(s, a)
                .iter()
                .map(|&(next, p)| p * v[next])
                .sum();
            q.set(s, a, mdp.reward(s, a) + mdp.gamma() * expected);
        }
    }
    Ok(q)
}

/// Ground-truth optimal values via max-operator value iteration.
///
/// Stops when the successive-iterate infinity-norm change drops below
/// `tol * (1 - gamma) / gamma`, which guarantees `||V - V*|| < tol`.
pub fn oracle_optimal_values(mdp: &TabularMdp, tol: f64) -> Result<Vec<f64>> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "must be finite and > 0",
        });
    }
    let gamma = mdp.gamma();
    let stop = if gamma > 0.0 {
        tol * (1.0 - gamma) / gamma
    } else {
        tol
    };
    let mut v = vec![0.0; mdp.n_states()];
    loop {
        let q = bellman_backup_q(mdp, &v)?;
        let mut next = vec![0.0; mdp.n_states()];
        let mut delta = 0.0f64;
        for (s, slot) in next.iter_mut().enumerate() {
            if !mdp.is_terminal(s) {
                *slot = q
                    .row(s)
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            delta = delta.max((*slot - v[s]).abs());
        }
        v = next;
        if delta < stop {
            return Ok(v);
        }
    }
}

/// Record of one value-iteration run: the per-sweep infinity-norm loss
/// against the oracle, the final value function, and the operator label.
#[derive(Debug, Clone)]
pub struct ViRunRecord {
    pub operator: String,
    pub iterations: usize,
    pub losses: Vec<f64>,
    pub final_v: Vec<f64>,
}

impl ViRunRecord {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least one iteration")
    }
}

/// Run `iterations` sweeps of value iteration with the given operator,
/// starting from `v0`, recording the loss against the exact oracle after
/// every sweep.
pub fn vi_run(
    mdp: &TabularMdp,
    op: &OperatorKind,
    iterations: usize,
    v0: &[f64],
) -> Result<ViRunRecord> {
    if iterations == 0 {
        return Err(Error::InvalidParameter {
            name: "iterations",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    if v0.len() != mdp.n_states() {
        return Err(Error::DimensionMismatch {
            expected: mdp.n_states(),
            actual: v0.len(),
        });
    }
    let v_star = oracle_optimal_values(mdp, ORACLE_TOL)?;
    let mut v = v0.to_vec();
    let mut losses = Vec::with_capacity(iterations);
    for t in 1..=iterations as u64 {
        let q = bellman_backup_q(mdp, &v)?;
        for (s, slot) in v.iter_mut().enumerate() {
            *slot = if mdp.is_terminal(s) {
                0.0
            } else {
                op.apply(q.row(s), t)?
            };
        }
        losses.push(value_loss(&v, &v_star)?);
    }
    Ok(ViRunRecord {
        operator: op.label(),
        iterations,
        losses,
        final_v: v,
    })
}
