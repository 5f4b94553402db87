//! Finite Markov decision process model with sparse transition rows.

use rand::Rng;

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite MDP: `n_states` x `n_actions` with sparse probability rows,
/// a bounded reward table, discount `gamma < 1`, and a terminal-state mask.
/// Terminal states self-loop with reward 0.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// transitions[s * n_actions + a] = list of (next_state, probability).
    transitions: Vec<Vec<(usize, f64)>>,
    /// rewards[s * n_actions + a]
    rewards: Vec<f64>,
    gamma: f64,
    terminal: Vec<bool>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<Vec<(usize, f64)>>,
        rewards: Vec<f64>,
        gamma: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidParameter {
                name: "n_states/n_actions",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "must be in [0, 1)",
            });
        }
        let pairs = n_states * n_actions;
        if transitions.len() != pairs {
            return Err(Error::DimensionMismatch {
                expected: pairs,
                actual: transitions.len(),
            });
        }
        if rewards.len() != pairs {
            return Err(Error::DimensionMismatch {
                expected: pairs,
                actual: rewards.len(),
            });
        }
        if terminal.len() != n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states,
                actual: terminal.len(),
            });
        }
        for row in &transitions {
            let mut sum = 0.0;
            for &(next, p) in row {
                if next >= n_states {
                    return Err(Error::IndexOutOfRange {
                        what: "next_state",
                        index: next,
                        limit: n_states,
                    });
                }
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "transition probability",
                        value: p,
                        reason: "must be finite and >= 0",
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidParameter {
                    name: "transition row sum",
                    value: sum,
                    reason: "must sum to 1",
                });
            }
        }
        for &r in &rewards {
            if !r.is_finite() {
                return Err(Error::NonFiniteValue { value: r });
            }
        }
        Ok(TabularMdp {
            n_states,
            n_actions,
            transitions,
            rewards,
            gamma,
            terminal,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.n_actions + a]
    }

    /// Largest absolute reward, the `R` of the error-bound formulas.
    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Sample a successor state. Deterministic rows are resolved without
    /// consuming randomness so seeded runs stay comparable across variants.
    pub fn sample_next<R: Rng>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let row = self.transition_row(s, a);
        if row.len() == 1 {
            return row[0].0;
        }
        let draw: f64 = rng.gen();
        let mut acc = 0.0;
        for &(next, p) in row {
            acc += p;
            if draw < acc {
                return next;
            }
        }
        row.last().expect("transition rows are never empty").0
    }
}

/// Dense state-action value table.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    data: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        QTable {
            n_states,
            n_actions,
            data: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.data[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.data[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.data[s * self.n_actions + a] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Infinity-norm distance between two value functions.
pub fn value_loss(v: &[f64], v_star: &[f64]) -> Result<f64> {
    if v.len() != v_star.len() {
        return Err(Error::DimensionMismatch {
            expected: v_star.len(),
            actual: v.len(),
        });
    }
    Ok(v.iter()
        .zip(v_star)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
