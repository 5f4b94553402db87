//! Monte Carlo bench for the overestimation bias of value-summary operators.
//!
//! Setup: M random variables with known means; each trial draws n samples per
//! variable, summarizes the vector of sample means with an operator, and the
//! bias is the average summarized value minus the true maximum mean.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::operators::{boltz, log_sum_exp, max_op, OperatorKind};

/// One random variable of the bench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariableSpec {
    pub family: Family,
    pub mean: f64,
    /// Standard deviation (Gaussian) or half-range (scaled Bernoulli).
    pub spread: f64,
    /// Samples per trial whose mean forms the estimate.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    /// Two-point variable at `mean - spread` and `mean + spread`, each with
    /// probability 1/2.
    BernoulliScaled,
}

impl VariableSpec {
    pub fn gaussian(mean: f64, spread: f64, samples: usize) -> Self {
        VariableSpec {
            family: Family::Gaussian,
            mean,
            spread,
            samples,
        }
    }

    pub fn bernoulli_scaled(mean: f64, spread: f64, samples: usize) -> Self {
        VariableSpec {
            family: Family::BernoulliScaled,
            mean,
            spread,
            samples,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.spread.is_finite() && self.spread > 0.0) {
            return Err(Error::InvalidParameter {
                name: "spread",
                value: self.spread,
                reason: "must be finite and > 0",
            });
        }
        if !self.mean.is_finite() {
            return Err(Error::NonFiniteValue { value: self.mean });
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter {
                name: "samples",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.mean + self.spread * z
            }
            Family::BernoulliScaled => {
                if rng.gen::<bool>() {
                    self.mean + self.spread
                } else {
                    self.mean - self.spread
                }
            }
        }
    }
}

/// Equal-mean standard Gaussians, one sample each: the default bench family.
pub fn equal_mean_gaussians(m: usize) -> Vec<VariableSpec> {
    (0..m).map(|_| VariableSpec::gaussian(0.0, 1.0, 1)).collect()
}

/// Bias estimate for one operator.
#[derive(Debug, Clone)]
pub struct BiasReport {
    pub operator: String,
    pub bias: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Draw one vector of sample means, one entry per variable.
pub fn draw_sample_means<R: Rng>(specs: &[VariableSpec], rng: &mut R) -> Result<Vec<f64>> {
    if specs.is_empty() {
        return Err(Error::EmptyValues);
    }
    let mut means = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let total: f64 = (0..spec.samples).map(|_| spec.draw(rng)).sum();
        means.push(total / spec.samples as f64);
    }
    Ok(means)
}

/// Monte Carlo estimate of the operator's bias over `trials` independent
/// sample-mean vectors, with the standard error of the trial mean.
pub fn estimator_bias<R: Rng>(
    specs: &[VariableSpec],
    op: &OperatorKind,
    trials: usize,
    rng: &mut R,
) -> Result<BiasReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter {
            name: "trials",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    if specs.is_empty() {
        return Err(Error::EmptyValues);
    }
    let true_max = specs
        .iter()
        .map(|s| s.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 1..=trials as u64 {
        let means = draw_sample_means(specs, rng)?;
        let value = op.apply(&means, t)?;
        sum += value;
        sum_sq += value * value;
    }
    let n = trials as f64;
    let mean = sum / n;
    let variance = ((sum_sq / n) - mean * mean).max(0.0);
    let std_error = if trials > 1 {
        (variance / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(BiasReport {
        operator: op.label(),
        bias: mean - true_max,
        std_error,
        trials,
    })
}

/// Check the deterministic sandwich `boltz <= max <= log_sum_exp` on one
/// realization, with a 1e-12 allowance for equality cases.
pub fn pointwise_order_check(mu_hat: &[f64], beta_t: f64, beta: f64) -> Result<bool> {
    let b = boltz(mu_hat, beta_t)?;
    let m = max_op(mu_hat)?;
    let l = log_sum_exp(mu_hat, beta)?;
    Ok(b <= m + 1e-12 && m <= l + 1e-12)
}
