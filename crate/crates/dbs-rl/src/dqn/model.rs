//! Small differentiable Q-approximators with hand-written gradients.
//!
//! Two architectures: a bias-free linear map (with one-hot features this is
//! exactly a tabular Q-function) and a one-hidden-layer network with a tanh
//! nonlinearity, smooth enough for finite-difference checks.

use rand::Rng;

use crate::error::{Error, Result};

/// Encoder from a state index to a feature vector.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    n_states: usize,
}

impl FeatureMap {
    /// One-hot features: dimension equals the number of states.
    pub fn one_hot(n_states: usize) -> Self {
        FeatureMap { n_states }
    }

    pub fn dim(&self) -> usize {
        self.n_states
    }

    pub fn encode(&self, state: usize) -> Vec<f64> {
        let mut features = vec![0.0; self.n_states];
        features[state] = 1.0;
        features
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Linear,
    OneHidden { hidden: usize },
}

impl Architecture {
    pub fn param_count(&self, input_dim: usize, n_actions: usize) -> usize {
        match *self {
            Architecture::Linear => n_actions * input_dim,
            Architecture::OneHidden { hidden } => {
                hidden * input_dim + hidden + n_actions * hidden + n_actions
            }
        }
    }
}

/// Q-approximator: flat parameter vector plus its architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxModel {
    pub arch: Architecture,
    pub input_dim: usize,
    pub n_actions: usize,
    pub theta: Vec<f64>,
}

impl ApproxModel {
    pub fn zeros(arch: Architecture, input_dim: usize, n_actions: usize) -> Self {
        ApproxModel {
            arch,
            input_dim,
            n_actions,
            theta: vec![0.0; arch.param_count(input_dim, n_actions)],
        }
    }

    /// Random initialization, uniform in `[-scale, scale]`.
    pub fn random<R: Rng>(
        arch: Architecture,
        input_dim: usize,
        n_actions: usize,
        scale: f64,
        rng: &mut R,
    ) -> Self {
        let count = arch.param_count(input_dim, n_actions);
        let theta = (0..count).map(|_| rng.gen_range(-scale..scale)).collect();
        ApproxModel {
            arch,
            input_dim,
            n_actions,
            theta,
        }
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: features.len(),
            });
        }
        Ok(())
    }

    /// Action values for one feature vector.
    pub fn q_forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_features(features)?;
        match self.arch {
            Architecture::Linear => {
                let d = self.input_dim;
                Ok((0..self.n_actions)
                    .map(|a| {
                        let row = &self.theta[a * d..(a + 1) * d];
                        row.iter().zip(features).map(|(w, x)| w * x).sum()
                    })
                    .collect())
            }
            Architecture::OneHidden { hidden } => {
                let (h, _) = self.hidden_activations(features, hidden);
                let (w2_off, b2_off) = self.output_offsets(hidden);
                Ok((0..self.n_actions)
                    .map(|a| {
                        let row = &self.theta[w2_off + a * hidden..w2_off + (a + 1) * hidden];
                        let dot: f64 = row.iter().zip(&h).map(|(w, v)| w * v).sum();
                        dot + self.theta[b2_off + a]
                    })
                    .collect())
            }
        }
    }

    /// Gradient of `Q(features, action)` with respect to every parameter.
    pub fn q_grad(&self, features: &[f64], action: usize) -> Result<Vec<f64>> {
        self.check_features(features)?;
        if action >= self.n_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                limit: self.n_actions,
            });
        }
        let mut grad = vec![0.0; self.theta.len()];
        match self.arch {
            Architecture::Linear => {
                let d = self.input_dim;
                grad[action * d..(action + 1) * d].copy_from_slice(features);
            }
            Architecture::OneHidden { hidden } => {
                let (h, z_deriv) = self.hidden_activations(features, hidden);
                let (w2_off, b2_off) = self.output_offsets(hidden);
                // Output layer.
                for j in 0..hidden {
                    grad[w2_off + action * hidden + j] = h[j];
                }
                grad[b2_off + action] = 1.0;
                // Hidden layer, through tanh'.
                let d = self.input_dim;
                for j in 0..hidden {
                    let back = self.theta[w2_off + action * hidden + j] * z_deriv[j];
                    for (i, &x) in features.iter().enumerate() {
                        grad[j * d + i] = back * x;
                    }
                    grad[hidden * d + j] = back;
                }
            }
        }
        Ok(grad)
    }

    /// Hidden activations and the derivative of tanh at the pre-activations.
    fn hidden_activations(&self, features: &[f64], hidden: usize) -> (Vec<f64>, Vec<f64>) {
        let d = self.input_dim;
        let mut h = Vec::with_capacity(hidden);
        let mut z_deriv = Vec::with_capacity(hidden);
        for j in 0..hidden {
            let row = &self.theta[j * d..(j + 1) * d];
            let z: f64 =
                row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>() + self.theta[hidden * d + j];
            let t = z.tanh();
            h.push(t);
            z_deriv.push(1.0 - t * t);
        }
        (h, z_deriv)
    }

    fn output_offsets(&self, hidden: usize) -> (usize, usize) {
        let w2_off = hidden * self.input_dim + hidden;
        let b2_off = w2_off + self.n_actions * hidden;
        (w2_off, b2_off)
    }

    /// Largest parameter magnitude, used by the divergence detector.
    pub fn max_abs_param(&self) -> f64 {
        self.theta.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// Delayed copy of the online parameters used for TD targets.
#[derive(Debug, Clone)]
pub struct TargetModel {
    model: ApproxModel,
}

impl TargetModel {
    pub fn q_forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.model.q_forward(features)
    }

    pub fn theta(&self) -> &[f64] {
        &self.model.theta
    }

    /// Overwrite the target parameters with the online ones.
    pub fn sync(&mut self, online: &ApproxModel) {
        self.model = online.clone();
    }
}

/// Snapshot the online model into an independent target copy.
pub fn target_sync(online: &ApproxModel) -> TargetModel {
    TargetModel {
        model: online.clone(),
    }
}
