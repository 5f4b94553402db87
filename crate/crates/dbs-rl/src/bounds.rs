//! Closed-form error-bound and step-count calculators for softmax-operator
//! value iteration.

use crate::error::{Error, Result};

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

/// Asymptotic loss bound of value iteration with a *fixed* softmax
/// temperature:
///
/// ```text
/// min { ln(|A|) / (beta (1 - gamma)),  2R / (1 - gamma)^2 }
/// ```
pub fn fixed_beta_error_bound(
    beta: f64,
    gamma: f64,
    n_actions: usize,
    r_max: f64,
) -> Result<f64> {
    check("beta", beta, beta.is_finite() && beta > 0.0, "must be > 0")?;
    check("gamma", gamma, (0.0..1.0).contains(&gamma), "must be in [0, 1)")?;
    check(
        "n_actions",
        n_actions as f64,
        n_actions >= 2,
        "must be >= 2",
    )?;
    check("r_max", r_max, r_max.is_finite() && r_max > 0.0, "must be > 0")?;
    let softmax_term = (n_actions as f64).ln() / (beta * (1.0 - gamma));
    let range_term = 2.0 * r_max / ((1.0 - gamma) * (1.0 - gamma));
    Ok(softmax_term.min(range_term))
}

/// Number of sweeps after which power-schedule (`beta_t = t^p`) value
/// iteration is guaranteed within `eps` of the optimum, for any start values
/// bounded by `r_max / (1 - gamma)`:
///
/// ```text
/// max { ceil( (ln(1/eps) + ln(1/(1-gamma)) + ln(R) + ln 4) / ln(1/gamma) ),
///       ceil( (2 ln|A| / ((1-gamma) eps))^(1/p) - 1 ) }
/// ```
pub fn convergence_step_bound(
    eps: f64,
    gamma: f64,
    r_max: f64,
    n_actions: usize,
    p: f64,
) -> Result<u64> {
    check(
        "eps",
        eps,
        eps.is_finite() && eps > 0.0 && eps < 0.25,
        "must be in (0, 1/4)",
    )?;
    check(
        "gamma",
        gamma,
        gamma > 0.0 && gamma < 1.0,
        "must be in (0, 1)",
    )?;
    check("r_max", r_max, r_max.is_finite() && r_max > 0.0, "must be > 0")?;
    check(
        "n_actions",
        n_actions as f64,
        n_actions >= 2,
        "must be >= 2",
    )?;
    check("p", p, p.is_finite() && p > 0.0, "must be > 0")?;

    let contraction_term = ((1.0 / eps).ln() + (1.0 / (1.0 - gamma)).ln() + r_max.ln() + 4.0f64.ln())
        / (1.0 / gamma).ln();
    let schedule_term =
        (2.0 * (n_actions as f64).ln() / ((1.0 - gamma) * eps)).powf(1.0 / p) - 1.0;
    let steps = contraction_term.ceil().max(schedule_term.ceil());
    Ok(if steps < 1.0 { 1 } else { steps as u64 })
}

/// Temperature above which the fixed-softmax bound here is the tighter one:
///
/// ```text
/// 2 / ( max { gamma (|A|-1) / ln|A|,  2 gamma (|A|-1) R / (1-gamma) } - 1 )
/// ```
///
/// Undefined (domain error) when the bracketed denominator is not positive.
pub fn tighter_bound_threshold(gamma: f64, n_actions: usize, r_max: f64) -> Result<f64> {
    check(
        "gamma",
        gamma,
        gamma > 0.0 && gamma < 1.0,
        "must be in (0, 1)",
    )?;
    check(
        "n_actions",
        n_actions as f64,
        n_actions >= 2,
        "must be >= 2",
    )?;
    check("r_max", r_max, r_max.is_finite() && r_max > 0.0, "must be > 0")?;
    let a = n_actions as f64;
    let first = gamma * (a - 1.0) / a.ln();
    let second = 2.0 * gamma * (a - 1.0) * r_max / (1.0 - gamma);
    let denominator = first.max(second) - 1.0;
    if denominator <= 0.0 {
        return Err(Error::ThresholdUndefined { denominator });
    }
    Ok(2.0 / denominator)
}
