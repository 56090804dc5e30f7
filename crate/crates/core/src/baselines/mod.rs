//! Split-learning baselines with deadline policies.

pub mod splitnn;

pub use splitnn::{
    run_splitnn_epoch, splitnn_backward_step, splitnn_forward_step, BackwardReport, EpochStats,
    Forward, SplitNnSystem, TimeoutPolicy,
};
