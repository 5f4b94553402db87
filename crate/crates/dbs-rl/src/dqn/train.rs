//! The training loop: epsilon-greedy acting, FIFO replay, softmax (or max)
//! TD targets on a periodically synced target network, gradient steps on the
//! online parameters, and optional online adaptation of the schedule
//! coefficient.
//!
//! The schedule index for `beta_t(c) = c * t^2` is the global environment
//! step counter, monotone across episodes; a per-episode reset would collapse
//! the temperature at every episode start. The coefficient update runs at the
//! start of the following step, once its held-out transition exists.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gridworld::GridWorld;
use crate::qlearning::select_action;

use super::grad::{loss_and_grad, sgd_step, TargetOp};
use super::meta::{c_update, dtheta_dc_batch, meta_grad_c, MetaState};
use super::model::{target_sync, ApproxModel, Architecture, FeatureMap};
use super::replay::{Experience, ReplayBuffer};

/// Parameter bound past which a run is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Power of the temperature schedule `beta_t(c) = c * t^p`.
pub const SCHEDULE_POWER: i32 = 2;

/// How TD targets summarize the next-state row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetRule {
    /// Softmax at `beta_t(c) = c * t^2`. When `eta` is `None` the coefficient
    /// stays frozen at `c0`; otherwise it is meta-adapted with that learning
    /// rate.
    Dbs { c0: f64, eta: Option<f64> },
    /// Hard-max targets, the classic baseline.
    Max,
}

#[derive(Debug, Clone)]
pub struct DqnConfig {
    pub episodes: usize,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Online learning rate.
    pub alpha: f64,
    pub eps_start: f64,
    pub eps_final: f64,
    /// Fraction of episodes over which epsilon anneals linearly.
    pub eps_anneal_frac: f64,
    /// Target-network sync period, in global steps.
    pub target_sync_every: u64,
    pub seed: u64,
    pub arch: Architecture,
    pub target_rule: TargetRule,
    /// Uniform init range for the online parameters.
    pub init_scale: f64,
    /// Record the per-step (state, action, reward) log.
    pub record_steps: bool,
    /// Keep a parameter snapshot every this many episodes.
    pub snapshot_every: Option<usize>,
}

impl DqnConfig {
    pub fn new(episodes: usize, seed: u64, target_rule: TargetRule) -> Self {
        DqnConfig {
            episodes,
            buffer_capacity: 10_000,
            batch_size: 32,
            alpha: 0.01,
            eps_start: 1.0,
            eps_final: 0.05,
            eps_anneal_frac: 0.2,
            target_sync_every: 200,
            seed,
            arch: Architecture::Linear,
            target_rule,
            init_scale: 0.01,
            record_steps: false,
            snapshot_every: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let field = |name: &'static str, value: f64, ok: bool, reason: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason,
                })
            }
        };
        field("episodes", self.episodes as f64, self.episodes >= 1, "must be >= 1")?;
        field(
            "buffer_capacity",
            self.buffer_capacity as f64,
            self.buffer_capacity >= self.batch_size && self.batch_size >= 1,
            "must be >= batch_size >= 1",
        )?;
        field("alpha", self.alpha, self.alpha > 0.0, "must be > 0")?;
        field(
            "eps",
            self.eps_start,
            (0.0..=1.0).contains(&self.eps_start) && (0.0..=1.0).contains(&self.eps_final),
            "must be in [0, 1]",
        )?;
        field(
            "eps_anneal_frac",
            self.eps_anneal_frac,
            (0.0..=1.0).contains(&self.eps_anneal_frac),
            "must be in [0, 1]",
        )?;
        field(
            "target_sync_every",
            self.target_sync_every as f64,
            self.target_sync_every >= 1,
            "must be >= 1",
        )?;
        if let TargetRule::Dbs { c0, eta } = self.target_rule {
            field("c0", c0, c0.is_finite() && c0 > 0.0, "must be > 0")?;
            if let Some(eta) = eta {
                field("eta", eta, eta.is_finite() && eta >= 0.0, "must be >= 0")?;
            }
        }
        Ok(())
    }

    fn epsilon_at(&self, episode: usize) -> f64 {
        let horizon = (self.eps_anneal_frac * self.episodes as f64).round().max(1.0);
        let progress = (episode - 1) as f64 / horizon;
        if progress >= 1.0 {
            self.eps_final
        } else {
            self.eps_start + (self.eps_final - self.eps_start) * progress
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnEpisodeStats {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub reached_goal: bool,
    pub epsilon: f64,
    /// Coefficient value at episode end; `None` for max-target runs.
    pub c: Option<f64>,
    /// Mean TD loss over this episode's update steps; `None` before warmup.
    pub loss_mean: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DqnRunRecord {
    pub episodes: Vec<DqnEpisodeStats>,
    /// Coefficient after every global step (empty for max-target runs).
    pub c_trajectory: Vec<f64>,
    /// (step, state, action, reward) log when `record_steps` is on.
    pub step_log: Vec<(u64, usize, usize, f64)>,
    /// (episode, theta) snapshots when `snapshot_every` is set.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub target_syncs: u64,
    pub final_model: ApproxModel,
}

impl DqnRunRecord {
    /// Fraction of the final `window` episodes that reached the goal.
    pub fn final_success_rate(&self, window: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(window)..];
        tail.iter().filter(|e| e.reached_goal).count() as f64 / tail.len() as f64
    }
}

/// Run the full training loop on a GridWorld with one-hot features.
/// Deterministic given the seed. Aborts with a diagnostic if any parameter
/// magnitude exceeds [`DIVERGENCE_BOUND`].
pub fn train_dqn(gw: &GridWorld, cfg: &DqnConfig) -> Result<DqnRunRecord> {
    cfg.validate()?;
    let mdp = &gw.mdp;
    let features = FeatureMap::one_hot(mdp.n_states());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = ApproxModel::random(
        cfg.arch,
        features.dim(),
        mdp.n_actions(),
        cfg.init_scale,
        &mut rng,
    );
    let mut target = target_sync(&model);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut meta = match cfg.target_rule {
        TargetRule::Dbs { c0, eta } => Some(MetaState::new(c0, eta.unwrap_or(0.0))?),
        TargetRule::Max => None,
    };
    let meta_enabled = matches!(cfg.target_rule, TargetRule::Dbs { eta: Some(_), .. });

    let mut episodes = Vec::with_capacity(cfg.episodes);
    let mut c_trajectory = Vec::new();
    let mut step_log = Vec::new();
    let mut snapshots = Vec::new();
    let mut target_syncs = 0u64;
    let mut global_step = 0u64;
    // dtheta'/dc saved from the previous update, waiting for its held-out
    // transition.
    let mut pending_meta: Option<Vec<f64>> = None;

    for episode in 1..=cfg.episodes {
        let epsilon = cfg.epsilon_at(episode);
        let mut state = gw.start_state;
        let mut total_reward = 0.0;
        let mut steps = 0;
        let mut reached_goal = false;
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;

        for _ in 0..gw.spec.max_steps {
            global_step += 1;
            steps += 1;
            let state_features = features.encode(state);
            let q_row = model.q_forward(&state_features)?;
            let action = select_action(&q_row, epsilon, &mut rng)?;
            let next = mdp.sample_next(state, action, &mut rng);
            let reward = mdp.reward(state, action);
            let terminal = mdp.is_terminal(next);
            if cfg.record_steps {
                step_log.push((global_step, state, action, reward));
            }
            buffer.push(Experience {
                state: state_features,
                action,
                reward,
                next_state: features.encode(next),
                terminal,
                step: global_step,
            });

            // Score the previous update on the transition that just arrived,
            // then let the fresh coefficient set this step's temperature.
            if let (Some(b_vec), Some(m)) = (pending_meta.take(), meta.as_mut()) {
                let held_out = buffer.get(buffer.len() - 1).expect("just pushed");
                let t_pow = (global_step as f64).powi(SCHEDULE_POWER);
                let grad_c = meta_grad_c(held_out, &model, &target, m.c * t_pow, mdp.gamma(), &b_vec)?;
                *m = c_update(*m, grad_c)?;
            }

            if buffer.len() >= cfg.batch_size {
                let t_pow = (global_step as f64).powi(SCHEDULE_POWER);
                let (op, beta_dc) = match meta {
                    Some(m) => (TargetOp::Boltz { beta: m.c * t_pow }, Some(t_pow)),
                    None => (TargetOp::Max, None),
                };
                let batch = buffer.sample(cfg.batch_size, &mut rng);
                let (loss, grad) = loss_and_grad(&batch, &model, &target, op, mdp.gamma())?;
                if meta_enabled {
                    let m = meta.as_ref().expect("dbs rule has meta state");
                    let beta = m.c * t_pow;
                    pending_meta = Some(dtheta_dc_batch(
                        &batch,
                        &model,
                        &target,
                        cfg.alpha,
                        mdp.gamma(),
                        beta,
                        beta_dc.expect("dbs rule has a schedule"),
                    )?);
                }
                model.theta = sgd_step(&model.theta, &grad, cfg.alpha)?;
                loss_sum += loss;
                loss_count += 1;
                if model.max_abs_param() > DIVERGENCE_BOUND {
                    return Err(Error::Diverged(format!(
                        "parameter magnitude {} exceeded {DIVERGENCE_BOUND} at step {global_step}",
                        model.max_abs_param()
                    )));
                }
            }

            if let Some(m) = meta {
                c_trajectory.push(m.c);
            }
            if global_step % cfg.target_sync_every == 0 {
                target.sync(&model);
                target_syncs += 1;
            }

            total_reward += reward;
            state = next;
            if terminal {
                reached_goal = true;
                break;
            }
        }

        episodes.push(DqnEpisodeStats {
            episode,
            steps,
            total_reward,
            reached_goal,
            epsilon,
            c: meta.map(|m| m.c),
            loss_mean: (loss_count > 0).then(|| loss_sum / loss_count as f64),
        });
        if let Some(every) = cfg.snapshot_every {
            if episode % every == 0 {
                snapshots.push((episode, model.theta.clone()));
            }
        }
    }

    Ok(DqnRunRecord {
        episodes,
        c_trajectory,
        step_log,
        snapshots,
        target_syncs,
        final_model: model,
    })
}
