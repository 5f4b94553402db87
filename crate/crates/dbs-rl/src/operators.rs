//! Value-summary operators over action-value vectors.
//!
//! Three summary kernels are provided, all in shifted form (the maximum is
//! subtracted before exponentiating, so every exponent is <= 0 and no
//! overflow is possible for any finite inverse temperature):
//!
//! * `max_op` — the hard max,
//! * `boltz` — the Boltzmann softmax, an exponentially weighted average,
//! * `log_sum_exp` — the soft upper bound `(1/beta) * ln(sum exp(beta x))`.
//!
//! For every finite input and every `beta_t >= 0`, `beta > 0`:
//!
//! ```text
//! boltz(x, beta_t) <= max_op(x) <= log_sum_exp(x, beta)
//! ```
//!
//! and the gap on the right is exactly the entropy of the Boltzmann weight
//! distribution divided by beta (see [`entropy_gap`]).
//!
//! When the shifted exponents underflow so hard that every non-maximal
//! weight is zero, `boltz` degrades to the mean of the arg-max entries,
//! which is the continuous limit of the softmax as beta grows.
//! `boltz` at `beta = 0` is the arithmetic mean; `log_sum_exp` rejects
//! `beta = 0` since the defining formula divides by beta.

use crate::error::{Error, Result};

fn validate_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyValues);
    }
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { value: v });
        }
    }
    Ok(())
}

fn validate_beta(name: &'static str, beta: f64, strictly_positive: bool) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter {
            name,
            value: beta,
            reason: "must be finite",
        });
    }
    if strictly_positive && beta <= 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value: beta,
            reason: "must be > 0",
        });
    }
    if !strictly_positive && beta < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value: beta,
            reason: "must be >= 0",
        });
    }
    Ok(())
}

/// Hard max over an action-value vector.
pub fn max_op(values: &[f64]) -> Result<f64> {
    validate_values(values)?;
    Ok(values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Boltzmann softmax: `sum(exp(beta x_i) x_i) / sum(exp(beta x_i))`.
///
/// Computed with shifted exponents, and clamped into `[min x, max x]` so the
/// convex-combination range holds bit-for-bit even under worst-case rounding.
/// `beta = 0` yields the arithmetic mean.
pub fn boltz(values: &[f64], beta: f64) -> Result<f64> {
    validate_values(values)?;
    validate_beta("beta", beta, false)?;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = min_of(values);
    let mut weight_sum = 0.0;
    let mut weighted = 0.0;
    for &v in values {
        let w = (beta * (v - hi)).exp();
        weight_sum += w;
        weighted += w * v;
    }
    // weight_sum >= 1 because the maximal entry always contributes exp(0).
    Ok((weighted / weight_sum).clamp(lo, hi))
}

/// Log-sum-exp: `(1/beta) * ln(sum exp(beta x_i))`, requires `beta > 0`.
///
/// Always >= `max_op(values)`: the shifted sum is >= 1 so its log is >= 0.
pub fn log_sum_exp(values: &[f64], beta: f64) -> Result<f64> {
    validate_values(values)?;
    validate_beta("beta", beta, true)?;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|&v| (beta * (v - hi)).exp()).sum();
    Ok(hi + sum.ln() / beta)
}

/// Boltzmann weights `p_i = exp(beta x_i) / sum_j exp(beta x_j)` in shifted form.
pub fn boltz_weights(values: &[f64], beta: f64) -> Result<Vec<f64>> {
    validate_values(values)?;
    validate_beta("beta", beta, false)?;
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|&v| (beta * (v - hi)).exp()).collect();
    let sum: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / sum).collect())
}

/// Entropy of the Boltzmann weight distribution divided by beta:
/// `(1/beta) * sum(-p_i ln p_i)`.
///
/// Equals `log_sum_exp(x, beta) - boltz(x, beta)` and is bounded above by
/// `ln(n) / beta`.
pub fn entropy_gap(values: &[f64], beta: f64) -> Result<f64> {
    validate_values(values)?;
    validate_beta("beta", beta, true)?;
    let weights = boltz_weights(values, beta)?;
    let entropy: f64 = weights
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum();
    Ok(entropy / beta)
}

/// Derivative of `boltz(x, beta)` with respect to beta: the Boltzmann-weighted
/// variance of the values. Computed in centered form so it is nonnegative by
/// construction (the softmax is nondecreasing in beta).
pub fn dboltz_dbeta(values: &[f64], beta: f64) -> Result<f64> {
    let mean = boltz(values, beta)?;
    let weights = boltz_weights(values, beta)?;
    Ok(weights
        .iter()
        .zip(values)
        .map(|(&p, &v)| p * (v - mean) * (v - mean))
        .sum())
}

/// Gradient of `boltz(x, beta)` with respect to the entries of `x`:
/// component j is `p_j * (1 + beta * (x_j - boltz(x, beta)))`.
/// The components always sum to 1.
pub fn grad_boltz(values: &[f64], beta: f64) -> Result<Vec<f64>> {
    let mean = boltz(values, beta)?;
    let weights = boltz_weights(values, beta)?;
    Ok(weights
        .iter()
        .zip(values)
        .map(|(&p, &v)| p * (1.0 + beta * (v - mean)))
        .collect())
}

/// Rule producing the inverse temperature `beta_t` from a 1-based index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSchedule {
    /// Fixed beta for every index.
    Constant { beta: f64 },
    /// Power law `beta_t = c * t^p`.
    Power { c: f64, p: f64 },
}

impl BetaSchedule {
    pub fn constant(beta: f64) -> Result<Self> {
        validate_beta("beta", beta, false)?;
        Ok(BetaSchedule::Constant { beta })
    }

    pub fn power(c: f64, p: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c,
                reason: "must be finite and > 0",
            });
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "must be finite and > 0",
            });
        }
        Ok(BetaSchedule::Power { c, p })
    }

    /// Evaluate `beta_t`. Indices start at 1; `t = 0` is rejected so a power
    /// schedule never produces the degenerate `beta = 0` mean update.
    pub fn eval(&self, t: u64) -> Result<f64> {
        if t < 1 {
            return Err(Error::InvalidScheduleIndex { t });
        }
        Ok(match *self {
            BetaSchedule::Constant { beta } => beta,
            BetaSchedule::Power { c, p } => c * (t as f64).powf(p),
        })
    }
}

/// Which summary kernel a consumer dispatches to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    Max,
    Boltzmann { beta: f64 },
    LogSumExp { beta: f64 },
    Dbs { schedule: BetaSchedule },
}

impl OperatorKind {
    /// Dynamic Boltzmann softmax with the power schedule `c * t^p`.
    pub fn dbs_power(c: f64, p: f64) -> Result<Self> {
        Ok(OperatorKind::Dbs {
            schedule: BetaSchedule::power(c, p)?,
        })
    }

    /// Apply the kernel to one action-value vector at index `t` (1-based;
    /// only the Dbs variant consumes the index).
    pub fn apply(&self, values: &[f64], t: u64) -> Result<f64> {
        match *self {
            OperatorKind::Max => max_op(values),
            OperatorKind::Boltzmann { beta } => boltz(values, beta),
            OperatorKind::LogSumExp { beta } => log_sum_exp(values, beta),
            OperatorKind::Dbs { schedule } => boltz(values, schedule.eval(t)?),
        }
    }

    /// Short filesystem-safe label used in CSV artifact names.
    pub fn label(&self) -> String {
        match *self {
            OperatorKind::Max => "max".to_string(),
            OperatorKind::Boltzmann { beta } => format!("boltz_b{beta}"),
            OperatorKind::LogSumExp { beta } => format!("lse_b{beta}"),
            OperatorKind::Dbs {
                schedule: BetaSchedule::Power { c, p },
            } => format!("dbs_c{c}_p{p}"),
            OperatorKind::Dbs {
                schedule: BetaSchedule::Constant { beta },
            } => format!("dbs_const_b{beta}"),
        }
    }
}
