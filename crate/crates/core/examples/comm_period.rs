//! Communication period `K`: bits each guest sends for the MNIST setup, and
//! optionally the accuracy of a run per period.
//!
//! `cargo run --release --example comm_period` prints the cost table only;
//! add `train` to also run DVFL on MNIST for each period (slow).

use dvfl::orchestrator::{comm_cost, load_bundle, run_dvfl, ExperimentConfig};

fn main() -> dvfl::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let train = std::env::args().any(|a| a == "train");
    let base = ExperimentConfig::default();
    let bundle = if train {
        Some(load_bundle(&base.dataset)?)
    } else {
        None
    };
    println!(
        "{:>3} {:>14} {:>8} {:>10}",
        "K", "bits/guest", "GB", "accuracy"
    );
    for k in [1, 5, 10, 15, 20] {
        let cfg = base.with_overrides(&[format!("comm_period={k}")])?;
        let bits = comm_cost(&cfg, 60_000);
        let acc = match &bundle {
            Some(b) => run_dvfl(&cfg, b)?.accuracy_cell(),
            None => "-".into(),
        };
        println!("{k:>3} {bits:>14} {:>8.3} {acc:>10}", bits as f64 / 8e9);
    }
    Ok(())
}
