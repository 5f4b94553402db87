//! Tabular Q-learning on a GridWorld with a pluggable next-state value
//! estimator: hard max, fixed-temperature softmax / log-sum-exp, or the
//! dynamic softmax whose temperature grows with the episode index.
//!
//! The episode index (1-based) drives the temperature schedule; the step
//! loop runs inside it, capped by the GridWorld's `max_steps`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::gridworld::GridWorld;
use crate::mdp::QTable;
use crate::operators::OperatorKind;

/// Q-learning run configuration.
#[derive(Debug, Clone)]
pub struct LearnerConfig {
    pub operator: OperatorKind,
    /// Constant learning rate in (0, 1].
    pub alpha: f64,
    /// Exploration rate in [0, 1].
    pub epsilon: f64,
    pub episodes: usize,
    pub seed: u64,
}

impl LearnerConfig {
    pub fn new(operator: OperatorKind, episodes: usize, seed: u64) -> Self {
        LearnerConfig {
            operator,
            alpha: 0.1,
            epsilon: 0.1,
            episodes,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must be in (0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
                reason: "must be in [0, 1]",
            });
        }
        if self.episodes == 0 {
            return Err(Error::InvalidParameter {
                name: "episodes",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }
}

/// Per-episode outcome record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub reached_goal: bool,
}

/// Epsilon-greedy action selection; greedy ties are broken uniformly at
/// random.
pub fn select_action<R: Rng>(q_row: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if q_row.is_empty() {
        return Err(Error::EmptyValues);
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "must be in [0, 1]",
        });
    }
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Ok(rng.gen_range(0..q_row.len()));
    }
    let best = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = q_row
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == best)
        .map(|(i, _)| i)
        .collect();
    if tied.len() == 1 {
        Ok(tied[0])
    } else {
        Ok(tied[rng.gen_range(0..tied.len())])
    }
}

/// Value of the next state under the configured operator at episode index
/// `t`. Terminal next states are worth 0 regardless of the operator.
pub fn next_state_value(
    q_row: &[f64],
    op: &OperatorKind,
    t: u64,
    terminal: bool,
) -> Result<f64> {
    if terminal {
        return Ok(0.0);
    }
    op.apply(q_row, t)
}

/// One TD update: `Q(s,a) += alpha * (r + gamma * v_next - Q(s,a))`.
/// Only the `(s, a)` entry changes.
pub fn q_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    reward: f64,
    v_next: f64,
    alpha: f64,
    gamma: f64,
) -> Result<()> {
    if s >= q.n_states() {
        return Err(Error::IndexOutOfRange {
            what: "state",
            index: s,
            limit: q.n_states(),
        });
    }
    if a >= q.n_actions() {
        return Err(Error::IndexOutOfRange {
            what: "action",
            index: a,
            limit: q.n_actions(),
        });
    }
    let old = q.get(s, a);
    q.set(s, a, old + alpha * (reward + gamma * v_next - old));
    Ok(())
}

/// Outcome of a training run: per-episode stats and the learned table.
#[derive(Debug, Clone)]
pub struct TrainRecord {
    pub stats: Vec<EpisodeStats>,
    pub q: QTable,
    /// Which (s, a) pairs were ever updated.
    pub visited: Vec<bool>,
}

impl TrainRecord {
    /// Mean steps over the final `window` episodes.
    pub fn final_window_mean_steps(&self, window: usize) -> f64 {
        let tail = &self.stats[self.stats.len().saturating_sub(window)..];
        tail.iter().map(|e| e.steps as f64).sum::<f64>() / tail.len() as f64
    }

    /// Median steps over the final `window` episodes.
    pub fn final_window_median_steps(&self, window: usize) -> f64 {
        let tail = &self.stats[self.stats.len().saturating_sub(window)..];
        let mut steps: Vec<usize> = tail.iter().map(|e| e.steps).collect();
        steps.sort_unstable();
        let n = steps.len();
        if n % 2 == 1 {
            steps[n / 2] as f64
        } else {
            (steps[n / 2 - 1] + steps[n / 2]) as f64 / 2.0
        }
    }
}

/// Run episodic Q-learning on a GridWorld. Deterministic given the seed:
/// the table starts at zero (terminal rows stay pinned there) and episodes
/// are capped at the spec's `max_steps`.
pub fn train(gw: &GridWorld, cfg: &LearnerConfig) -> Result<TrainRecord> {
    cfg.validate()?;
    let mdp = &gw.mdp;
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    let mut visited = vec![false; mdp.n_states() * mdp.n_actions()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gamma = mdp.gamma();
    let mut stats = Vec::with_capacity(cfg.episodes);

    for episode in 1..=cfg.episodes {
        let mut s = gw.start_state;
        let mut total_reward = 0.0;
        let mut steps = 0;
        let mut reached_goal = false;
        for _ in 0..gw.spec.max_steps {
            steps += 1;
            let a = select_action(q.row(s), cfg.epsilon, &mut rng)?;
            let next = mdp.sample_next(s, a, &mut rng);
            let reward = mdp.reward(s, a);
            let v_next =
                next_state_value(q.row(next), &cfg.operator, episode as u64, mdp.is_terminal(next))?;
            q_update(&mut q, s, a, reward, v_next, cfg.alpha, gamma)?;
            visited[s * mdp.n_actions() + a] = true;
            total_reward += reward;
            s = next;
            if mdp.is_terminal(s) {
                reached_goal = true;
                break;
            }
        }
        stats.push(EpisodeStats {
            episode,
            steps,
            total_reward,
            reached_goal,
        });
    }
    Ok(TrainRecord { stats, q, visited })
}
