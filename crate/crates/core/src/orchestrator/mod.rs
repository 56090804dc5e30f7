//! Experiment driver: configuration, scheduling, evaluation, and sweeps.

pub mod config;
pub mod cost;
pub mod data;
pub mod dvfl;
pub mod evaluate;
pub mod gradcheck;
pub mod metrics;
pub mod splitnn;
pub mod sweep;

pub use config::{
    DatasetConfig, EarlyStopping, Epochs, ExperimentConfig, OptimSettings, Strategy, DATA_DIR_ENV,
};
pub use cost::{comm_bits, comm_cost, communication_epochs, is_communication_epoch};
pub use data::{load_bundle, synthetic, training_ids, DataBundle, TrainingIds};
pub use dvfl::{run_dvfl, DvflSession};
pub use evaluate::{accuracy, holdout_split, EarlyStopper, Verdict};
pub use gradcheck::{check_architectures, ShapeCheck};
pub use metrics::{runs_csv_string, write_json, write_runs_csv, Outcome, RunMetrics, CSV_HEADER};
pub use splitnn::{build_splitnn, run_splitnn, run_splitnn_detailed};
pub use sweep::{
    median, sample_std, sweep, sweep_with, CellSummary, GridAxis, GridSpec, SweepResult,
};

use crate::error::Result;

/// Dispatches on the configured strategy.
pub fn run_experiment(cfg: &ExperimentConfig, bundle: &DataBundle) -> Result<RunMetrics> {
    match cfg.strategy {
        Strategy::Dvfl => run_dvfl(cfg, bundle),
        _ => run_splitnn(cfg, bundle),
    }
}

/// Loads the configured dataset, then runs.
pub fn run(cfg: &ExperimentConfig) -> Result<RunMetrics> {
    cfg.validate()?;
    run_experiment(cfg, &load_bundle(&cfg.dataset)?)
}
