//! Semi-gradient TD loss for the softmax-target network.
//!
//! The target `y = r + gamma * boltz_beta(Q(s', .; theta_minus))` is treated
//! as a constant with respect to the online parameters.

use crate::error::{Error, Result};
use crate::operators::{boltz, max_op};

use super::model::{ApproxModel, TargetModel};
use super::replay::Experience;

/// How the next-state row is summarized inside the TD target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetOp {
    /// Softmax at the supplied inverse temperature.
    Boltz { beta: f64 },
    /// Hard max, the classic target.
    Max,
}

impl TargetOp {
    fn apply(&self, row: &[f64]) -> Result<f64> {
        match *self {
            TargetOp::Boltz { beta } => boltz(row, beta),
            TargetOp::Max => max_op(row),
        }
    }
}

/// TD target for one transition: `r` when terminal, else
/// `r + gamma * op(Q(s', .; theta_minus))`.
pub fn td_target(exp: &Experience, target: &TargetModel, op: TargetOp, gamma: f64) -> Result<f64> {
    if exp.terminal {
        return Ok(exp.reward);
    }
    let row = target.q_forward(&exp.next_state)?;
    Ok(exp.reward + gamma * op.apply(&row)?)
}

/// Mean squared TD loss over a batch and its semi-gradient:
/// `J = mean(0.5 * (y - Q(s,a))^2)`,
/// `grad = mean(-(y - Q(s,a)) * dQ(s,a)/dtheta)`.
pub fn loss_and_grad(
    batch: &[&Experience],
    model: &ApproxModel,
    target: &TargetModel,
    op: TargetOp,
    gamma: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyValues);
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.theta.len()];
    for exp in batch {
        let y = td_target(exp, target, op, gamma)?;
        let q = model.q_forward(&exp.state)?[exp.action];
        let residual = y - q;
        loss += 0.5 * residual * residual;
        let dq = model.q_grad(&exp.state, exp.action)?;
        for (g, d) in grad.iter_mut().zip(&dq) {
            *g -= residual * d;
        }
    }
    let n = batch.len() as f64;
    for g in grad.iter_mut() {
        *g /= n;
    }
    Ok((loss / n, grad))
}

/// Plain gradient-descent step: `theta - alpha * grad`, elementwise.
pub fn sgd_step(theta: &[f64], grad: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if theta.len() != grad.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            actual: grad.len(),
        });
    }
    Ok(theta
        .iter()
        .zip(grad)
        .map(|(t, g)| t - alpha * g)
        .collect())
}
