//! Full DVFL pipeline on MNIST with four guests and four hosts.
//!
//! Needs the IDX files in `$DVFL_DATA_DIR` (or `data/mnist`). Optional
//! arguments: a seed, then extra `key=value` overrides, e.g.
//! `cargo run --release --example dvfl_mnist -- 1 faults.guest.down=0.3 faults.guest.up=0.1`.

use dvfl::orchestrator::{load_bundle, runs_csv_string, DvflSession, ExperimentConfig};

fn main() -> dvfl::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut cfg =
        ExperimentConfig::default().with_overrides(&args.iter().skip(1).collect::<Vec<_>>())?;
    cfg.seed = seed;
    let bundle = load_bundle(&cfg.dataset)?;

    let mut s = DvflSession::new(&cfg, &bundle)?;
    println!(
        "{} guests, {} hosts, {} batches per epoch, host budget {} iterations",
        cfg.guests,
        cfg.hosts,
        s.batches_per_epoch(),
        s.host_budget()
    );
    s.unsupervised_phase()?;
    for h in &s.hosts {
        println!("host {}: {} replay entries", h.id, h.replay().len());
    }
    s.supervised_phase()?;
    s.evaluate()?;
    let m = s.finish();
    println!("test accuracy {}", m.accuracy_cell());
    print!("{}", runs_csv_string(&[m])?);
    Ok(())
}
