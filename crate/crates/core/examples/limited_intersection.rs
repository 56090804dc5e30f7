//! Few labeled, aligned samples: DVFL guests and hosts also learn from each
//! guest's private unlabeled window, while SplitNN can only use the
//! intersection.
//!
//! Uses MNIST from `$DVFL_DATA_DIR` (or `data/mnist`). Optional argument: the
//! labeled count (default 128).

use dvfl::orchestrator::{load_bundle, run_experiment, training_ids, ExperimentConfig};

fn main() -> dvfl::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let labeled: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(128);
    let base = ExperimentConfig::default().with_overrides(&[
        format!("labeled_count={labeled}"),
        "epochs.owner=160".into(),
        "epochs.splitnn=160".into(),
    ])?;
    let bundle = load_bundle(&base.dataset)?;
    let ids = training_ids(&bundle.train, Some(labeled), base.guests, base.seed)?;
    println!(
        "{} labeled entities; each guest trains on {} ({} private)",
        ids.labeled.len(),
        ids.local[0].len(),
        ids.local[0].len() - ids.labeled.len()
    );
    for set in [
        ["strategy=dvfl", "hosts=4"],
        ["strategy=splitnn", "hosts=1"],
    ] {
        let cfg = base.with_overrides(&set)?;
        let m = run_experiment(&cfg, &bundle)?;
        println!("{:<8} accuracy {}", cfg.strategy, m.accuracy_cell());
    }
    Ok(())
}
