//! DVFL on a tabular CSV dataset. Writes a small two-class problem to a
//! temporary directory, then loads it through the CSV path (min-max scaled
//! with the training ranges) and runs with three guests.

use std::fmt::Write as _;

use rand::Rng;

use dvfl::orchestrator::{run, ExperimentConfig};
use dvfl::rng::{stream, Domain};

fn write_csv(path: &std::path::Path, n: usize, seed: u64) -> std::io::Result<()> {
    let mut r = stream(seed, Domain::Synthetic, 0);
    let mut text = String::from("f0,f1,f2,f3,f4,f5,label\n");
    for _ in 0..n {
        let x: Vec<f64> = (0..6).map(|_| r.gen_range(-5.0..5.0)).collect();
        let label = usize::from(x[0] + x[2] - x[4] > 0.0);
        for v in &x {
            write!(text, "{v:.4},").unwrap();
        }
        writeln!(text, "{label}").unwrap();
    }
    std::fs::write(path, text)
}

fn main() -> dvfl::Result<()> {
    let dir = std::env::temp_dir().join("dvfl-csv-example");
    std::fs::create_dir_all(&dir).map_err(|e| dvfl::Error::Config(e.to_string()))?;
    let (train, test) = (dir.join("train.csv"), dir.join("test.csv"));
    write_csv(&train, 3000, 1)
        .and_then(|_| write_csv(&test, 1000, 2))
        .map_err(|e| dvfl::Error::Config(e.to_string()))?;

    let toml = format!(
        r#"
strategy = "dvfl"
seed = 0
guests = 3
hosts = 2
batch_size = 32
comm_period = 1

[arch]
guest_width = 12
host_width = 8
owner_hidden = 8

[epochs]
guest = 5
host = 10
owner = 40
splitnn = 40

[dataset]
kind = "csv"
train = "{}"
test = "{}"
options = {{ has_header = true, label_column = 6 }}
"#,
        train.display(),
        test.display()
    );
    let cfg = ExperimentConfig::from_toml_str(&toml)?;
    let m = run(&cfg)?;
    println!("dvfl on csv: accuracy {}", m.accuracy_cell());
    let m = run(&cfg.with_overrides(&["strategy=splitnn", "hosts=1"])?)?;
    println!("splitnn on csv: accuracy {}", m.accuracy_cell());
    Ok(())
}
