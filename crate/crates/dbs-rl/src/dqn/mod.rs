//! Desk-scale deep Q-learning with softmax TD targets on a growing
//! temperature schedule, and online meta-adaptation of the schedule
//! coefficient.

pub mod grad;
pub mod meta;
pub mod model;
pub mod replay;
pub mod snapshot;
pub mod train;

pub use grad::{loss_and_grad, sgd_step, td_target, TargetOp};
pub use meta::{c_update, dtheta_dc, dtheta_dc_batch, meta_grad_c, MetaState, C_MIN};
pub use model::{target_sync, ApproxModel, Architecture, FeatureMap, TargetModel};
pub use replay::{Experience, ReplayBuffer};
pub use snapshot::{read_snapshot, snapshot_bytes, write_snapshot};
pub use train::{
    train_dqn, DqnConfig, DqnEpisodeStats, DqnRunRecord, TargetRule, DIVERGENCE_BOUND,
    SCHEDULE_POWER,
};
