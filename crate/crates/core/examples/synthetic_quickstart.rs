//! DVFL against the three SplitNN policies on a small synthetic task,
//! fault-free and with lossy connections. Runs in seconds.

use dvfl::orchestrator::{
    run_experiment, runs_csv_string, synthetic, DataBundle, ExperimentConfig,
};

fn main() -> dvfl::Result<()> {
    let (train, test) = synthetic(2000, 500, 64, 5, 0.45, 3)?;
    let bundle = DataBundle::new(train, test)?;
    let base = ExperimentConfig::default().with_overrides(&[
        "guests=4",
        "arch.guest_width=32",
        "arch.host_width=16",
        "arch.owner_hidden=8",
        "epochs.guest=4",
        "epochs.host=8",
        "epochs.owner=20",
        "epochs.splitnn=20",
    ])?;
    let lossy = ["faults.connection.down=0.3", "faults.connection.up=0.1"];
    let mut runs = Vec::new();
    for faults in [&[][..], &lossy[..]] {
        for strategy in ["dvfl", "splitnn", "splitnn-skip", "splitnn-zeros"] {
            let hosts = if strategy == "dvfl" {
                "hosts=2"
            } else {
                "hosts=1"
            };
            let mut set = vec![format!("strategy={strategy}"), hosts.to_string()];
            set.extend(faults.iter().map(|s| s.to_string()));
            let cfg = base.with_overrides(&set)?;
            let m = run_experiment(&cfg, &bundle)?;
            println!(
                "{:<14} conn down {:<4} -> {}",
                strategy,
                cfg.faults.connection.down,
                m.accuracy_cell()
            );
            runs.push(m);
        }
    }
    println!();
    print!("{}", runs_csv_string(&runs)?);
    Ok(())
}
