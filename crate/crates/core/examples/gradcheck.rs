//! Finite-difference check of every network in the default MNIST setup.

use dvfl::orchestrator::{check_architectures, gradcheck::TOLERANCE, ExperimentConfig};

fn main() -> dvfl::Result<()> {
    let t = std::time::Instant::now();
    let checks = check_architectures(&ExperimentConfig::default(), 3, 0)?;
    for c in &checks {
        let verdict = if c.passed(TOLERANCE) { "ok" } else { "FAIL" };
        println!(
            "{:<24} {:>8} params  max rel err {:.2e}  {verdict}",
            c.name, c.params, c.max_rel_error
        );
    }
    println!(
        "{} shapes in {:.1}s",
        checks.len(),
        t.elapsed().as_secs_f64()
    );
    Ok(())
}
