//! Host redundancy: DVFL accuracy for one to four hosts when every
//! guest-host connection fails often (down 0.6, up 0.5).
//!
//! Uses MNIST from `$DVFL_DATA_DIR` (or `data/mnist`). Pass `quick` for a
//! reduced run on 6000 samples.

use dvfl::orchestrator::{load_bundle, run_dvfl, ExperimentConfig};

fn main() -> dvfl::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let quick = std::env::args().any(|a| a == "quick");
    let mut set = vec!["faults.connection.down=0.6", "faults.connection.up=0.5"];
    if quick {
        set.extend([
            "dataset.train_limit=6000",
            "epochs.guest=5",
            "epochs.host=10",
            "epochs.owner=20",
        ]);
    }
    let base = ExperimentConfig::default().with_overrides(&set)?;
    let bundle = load_bundle(&base.dataset)?;
    for hosts in 1..=4 {
        let cfg = base.with_overrides(&[format!("hosts={hosts}")])?;
        let m = run_dvfl(&cfg, &bundle)?;
        println!(
            "|H| = {hosts}: accuracy {:>8}  delivered {:>12} of {:>12} bits per guest",
            m.accuracy_cell(),
            m.bits_delivered / cfg.guests as u64,
            m.bits_per_guest
        );
    }
    Ok(())
}
