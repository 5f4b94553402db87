//! A laboratory for dynamic Boltzmann softmax (DBS) value estimation in
//! reinforcement learning.
//!
//! The hard max makes value iteration converge but commits fully to current
//! estimates; a fixed-temperature softmax is smoother but is not a
//! non-expansion, so plain softmax backups can leave a persistent value
//! error. Driving the inverse temperature to infinity over time keeps the
//! smoothing early and recovers exact convergence late. This crate implements
//! that operator family and everything needed to study it end to end:
//!
//! * [`operators`] — numerically stable max / softmax / log-sum-exp kernels,
//!   their analytic derivatives, and temperature schedules;
//! * [`mdp`], [`gridworld`], [`value_iteration`] — a finite MDP model, map
//!   parsing, an exact oracle solver, and value iteration with a pluggable
//!   summary operator;
//! * [`bounds`] — closed-form loss bounds and step-count guarantees;
//! * [`qlearning`] — tabular Q-learning with the same pluggable operator in
//!   its TD target;
//! * [`bias`] — a Monte Carlo bench for the overestimation ordering
//!   `softmax <= max <= log-sum-exp`;
//! * [`dqn`] — a desk-scale DQN with explicit gradients, replay, a target
//!   network, and meta-gradient adaptation of the schedule coefficient;
//! * [`harness`] — seeded experiment suites writing deterministic CSVs.
//!
//! Start with the `examples/` directory: each major capability has a
//! runnable example, and the `dbs-lab` binary exposes the same suites as CLI
//! subcommands.

pub mod bias;
pub mod bounds;
pub mod dqn;
pub mod error;
pub mod gridworld;
pub mod harness;
pub mod mdp;
pub mod operators;
pub mod qlearning;
pub mod value_iteration;

pub use error::{Error, Result};
pub use operators::{
    boltz, boltz_weights, dboltz_dbeta, entropy_gap, grad_boltz, log_sum_exp, max_op,
    BetaSchedule, OperatorKind,
};
