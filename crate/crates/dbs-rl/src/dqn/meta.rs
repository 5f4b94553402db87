//! Online adaptation of the temperature-schedule coefficient `c`.
//!
//! The schedule is `beta_t(c) = c * t^p` with a fixed power. After the online
//! parameters take the step `theta' = theta - alpha * dJ(tau, theta, c)/dtheta`,
//! the coefficient is scored on the *next* transition (online
//! cross-validation): the held-out loss `J'(tau', theta', c_ref)` is
//! differentiated with respect to `c` through the parameter update only,
//!
//! ```text
//! dJ'/dc = (dJ'/dtheta') . (dtheta'/dc)
//! dtheta'/dc = alpha * gamma * (t^p) * dboltz_dbeta(Q(s_next, .; theta_minus), beta_t(c))
//!              * dQ(s, a; theta)/dtheta
//! ```
//!
//! where `(s, a, s_next)` come from the transition(s) that produced the
//! update. The target-network pathway carries no `c` gradient, and the
//! reference coefficient is the live value of `c` at update time. Terminal
//! transitions contribute nothing (their target has no softmax term).

use crate::error::{Error, Result};
use crate::operators::dboltz_dbeta;

use super::grad::{td_target, TargetOp};
use super::model::{ApproxModel, TargetModel};
use super::replay::Experience;

/// Adaptable schedule coefficient with its meta learning rate.
/// `c` is kept strictly positive by projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaState {
    pub c: f64,
    pub eta: f64,
}

/// Projection floor for the coefficient.
pub const C_MIN: f64 = 1e-6;

impl MetaState {
    pub fn new(c: f64, eta: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c,
                reason: "must be finite and > 0",
            });
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must be finite and >= 0",
            });
        }
        Ok(MetaState { c, eta })
    }
}

/// Descend the held-out loss: `c' = max(c - eta * grad_c, C_MIN)`.
pub fn c_update(meta: MetaState, grad_c: f64) -> Result<MetaState> {
    if !grad_c.is_finite() {
        return Err(Error::NonFiniteValue { value: grad_c });
    }
    Ok(MetaState {
        c: (meta.c - meta.eta * grad_c).max(C_MIN),
        eta: meta.eta,
    })
}

/// Sensitivity of the updated parameters to the coefficient, for a single
/// transition: the `dtheta'/dc` vector. Zero for terminal transitions.
///
/// `beta` must be the temperature actually used in the update and
/// `dbeta_dc = t^p` its derivative with respect to `c`.
pub fn dtheta_dc(
    exp: &Experience,
    model: &ApproxModel,
    target: &TargetModel,
    alpha: f64,
    gamma: f64,
    beta: f64,
    dbeta_dc: f64,
) -> Result<Vec<f64>> {
    if exp.terminal {
        return Ok(vec![0.0; model.theta.len()]);
    }
    let next_row = target.q_forward(&exp.next_state)?;
    let sensitivity = dboltz_dbeta(&next_row, beta)? * dbeta_dc;
    let scale = alpha * gamma * sensitivity;
    let mut vec = model.q_grad(&exp.state, exp.action)?;
    for v in vec.iter_mut() {
        *v *= scale;
    }
    Ok(vec)
}

/// Batch-mean `dtheta'/dc` matching a batch-mean gradient step.
pub fn dtheta_dc_batch(
    batch: &[&Experience],
    model: &ApproxModel,
    target: &TargetModel,
    alpha: f64,
    gamma: f64,
    beta: f64,
    dbeta_dc: f64,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyValues);
    }
    let mut acc = vec![0.0; model.theta.len()];
    for exp in batch {
        let term = dtheta_dc(exp, model, target, alpha, gamma, beta, dbeta_dc)?;
        for (a, t) in acc.iter_mut().zip(&term) {
            *a += t;
        }
    }
    let n = batch.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    Ok(acc)
}

/// Chain-rule meta gradient: the held-out semi-gradient at `theta'` dotted
/// with the stored `dtheta'/dc`.
///
/// `held_out` is the transition following the update, `model_after` holds
/// `theta'`, and `beta_ref` is the temperature at the reference coefficient
/// for the held-out target.
pub fn meta_grad_c(
    held_out: &Experience,
    model_after: &ApproxModel,
    target: &TargetModel,
    beta_ref: f64,
    gamma: f64,
    dtheta_dc: &[f64],
) -> Result<f64> {
    if dtheta_dc.len() != model_after.theta.len() {
        return Err(Error::DimensionMismatch {
            expected: model_after.theta.len(),
            actual: dtheta_dc.len(),
        });
    }
    let y = td_target(held_out, target, TargetOp::Boltz { beta: beta_ref }, gamma)?;
    let q = model_after.q_forward(&held_out.state)?[held_out.action];
    let residual = y - q;
    let dq = model_after.q_grad(&held_out.state, held_out.action)?;
    // dJ'/dtheta' = -(y - Q) * dQ/dtheta'; dot with dtheta'/dc.
    Ok(dq
        .iter()
        .zip(dtheta_dc)
        .map(|(d, b)| -residual * d * b)
        .sum())
}
