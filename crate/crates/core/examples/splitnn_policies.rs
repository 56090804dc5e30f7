//! SplitNN under a lossy guest-host connection with each timeout policy:
//! `wait` halts at the first fault, `skip` drops batches, `zeros` imputes.
//!
//! Uses MNIST from `$DVFL_DATA_DIR` (or `data/mnist`). Pass `quick` to train
//! on 6000 samples for 5 epochs.

use dvfl::orchestrator::{load_bundle, run_splitnn, ExperimentConfig};

fn main() -> dvfl::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let quick = std::env::args().any(|a| a == "quick");
    let mut set = vec![
        "hosts=1",
        "faults.connection.down=0.3",
        "faults.connection.up=0.5",
    ];
    if quick {
        set.extend(["dataset.train_limit=6000", "epochs.splitnn=5"]);
    }
    let base = ExperimentConfig::default().with_overrides(&set)?;
    let bundle = load_bundle(&base.dataset)?;
    for strategy in ["splitnn", "splitnn-skip", "splitnn-zeros"] {
        let cfg = base.with_overrides(&[format!("strategy={strategy}")])?;
        let m = run_splitnn(&cfg, &bundle)?;
        println!(
            "{strategy:<14} {:>10}  epochs {:>3}  skipped batches {:>6}  imputed slices {:>6}  halted in epoch {:?}",
            m.accuracy_cell(),
            m.supervised_epochs,
            m.skipped_batches,
            m.imputed_slices,
            m.halted_epoch
        );
    }
    Ok(())
}
