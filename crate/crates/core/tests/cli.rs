mod common;

use std::fs;

use dvfl::cli::main_with;
use dvfl::orchestrator::CSV_HEADER;

fn run(args: &[&str]) -> i32 {
    main_with(std::iter::once("dvfl").chain(args.iter().copied()))
}

#[test]
fn run_writes_rfc4180_csv_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::write_tiny_toml(tmp.path());
    let out = tmp.path().join("runs.csv");
    let json = tmp.path().join("runs.json");
    let code = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "faults.connection.down=0.3",
        "--set",
        "faults.connection.up=0.5",
        "--seeds",
        "0..2,7",
        "--out",
        out.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);

    let text = fs::read_to_string(&out).unwrap();
    assert!(text.ends_with('\n'));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    let seeds: Vec<&str> = rows.iter().map(|row| &row[1]).collect();
    assert_eq!(seeds, ["0", "1", "7"]);
    assert!(rows.iter().all(|row| row.len() == CSV_HEADER.len()));

    let runs: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let runs = runs.as_array().unwrap();
    assert_eq!(runs.len(), 3);
    assert_eq!(runs[0]["conn_down"], 0.3);
}

#[test]
fn identical_seeds_give_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::write_tiny_toml(tmp.path());
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = tmp.path().join(name);
        let code = run(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "faults.host.down=0.3",
            "--seeds",
            "4",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        files.push(fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn sweep_writes_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::write_tiny_toml(tmp.path());
    let grid = tmp.path().join("grid.toml");
    fs::write(
        &grid,
        r#"
[[rows]]
label = "DVFL"
set = ["strategy=dvfl"]

[[rows]]
label = "SplitNN, wait"
set = ["strategy=splitnn", "hosts=1"]

[[columns]]
label = "none"
set = []

[[columns]]
label = "guest 1.0"
set = ["faults.guest.down=1.0", "faults.guest.up=0.0"]
"#,
    )
    .unwrap();
    let table = tmp.path().join("table.csv");
    let runs = tmp.path().join("runs.csv");
    let code = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        grid.to_str().unwrap(),
        "--seeds",
        "0,1",
        "--out",
        table.to_str().unwrap(),
        "--runs",
        runs.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&table).unwrap();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][1], "none");
    // The quoted label survives the comma.
    assert_eq!(&rows[2][0], "SplitNN, wait");
    assert_eq!(&rows[2][2], "halted");
    assert!(rows[1][1].contains('±'), "{}", &rows[1][1]);

    let per_run = fs::read_to_string(&runs).unwrap();
    assert_eq!(per_run.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn gradcheck_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::write_tiny_toml(tmp.path());
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["gradcheck", "--config", cfg]), 0);
    assert_eq!(run(&["gradcheck", "--config", cfg, "--tolerance", "0"]), 1);
    assert_eq!(run(&["gradcheck", "--config", "/nonexistent/x.toml"]), 2);
    assert_eq!(run(&["run", "--config", cfg, "--set", "nonsense.key=1"]), 2);
}
