//! Command-line front end: `run`, `sweep`, and `gradcheck`.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::orchestrator::gradcheck::{check_architectures, TOLERANCE};
use crate::orchestrator::{
    load_bundle, run_experiment, sweep, write_json, write_runs_csv, ExperimentConfig, GridSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "dvfl",
    version,
    about = "Decoupled vertical federated learning simulator"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration for each seed; one CSV row per run.
    Run(RunArgs),
    /// Run a grid of configurations and emit a median ± 2σ table.
    Sweep(SweepArgs),
    /// Finite-difference check of every network shape in a configuration.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// TOML experiment file; built-in MNIST defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a key, e.g. `--set faults.connection.down=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        base.with_overrides(&self.set)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Seeds: `0,1,2` or a half-open range `0..3`. Defaults to the config seed.
    #[arg(long)]
    pub seeds: Option<String>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write every run as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// TOML grid with `[[rows]]` and `[[columns]]`, each a `label` and a `set` list.
    #[arg(long)]
    pub grid: PathBuf,
    #[arg(long, default_value = "0,1,2")]
    pub seeds: String,
    /// Table CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-run CSV destination.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Full sweep result (cells and runs) as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Samples in the probe batch.
    #[arg(long, default_value_t = 3)]
    pub rows: usize,
    #[arg(long, default_value_t = TOLERANCE)]
    pub tolerance: f64,
}

/// `0,1,2`, `0..3`, or a mix such as `0..2,7`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    Ok(out)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn create(p: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(p).map_err(|e| Error::io(p, e))?,
    ))
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let seeds = match &args.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![cfg.seed],
    };
    let bundle = load_bundle(&cfg.dataset)?;
    let mut runs = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let mut c = cfg.clone();
        c.seed = seed;
        runs.push(run_experiment(&c, &bundle)?);
    }
    write_runs_csv(sink(args.out.as_deref())?, &runs)?;
    if let Some(p) = &args.json {
        write_json(create(p)?, &runs)?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let grid = GridSpec::load(&args.grid)?;
    let seeds = parse_seeds(&args.seeds)?;
    let result = sweep(&cfg, &grid, &seeds)?;
    result.write_table_csv(sink(args.out.as_deref())?)?;
    if let Some(p) = &args.runs {
        write_runs_csv(create(p)?, &result.runs)?;
    }
    if let Some(p) = &args.json {
        write_json(create(p)?, &result)?;
    }
    Ok(())
}

/// Prints one line per shape; `Ok(false)` if any shape exceeds the tolerance.
pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<bool> {
    let cfg = args.config.load()?;
    let checks = check_architectures(&cfg, args.rows, cfg.seed)?;
    let mut all = true;
    let mut out = io::stdout().lock();
    for c in &checks {
        let ok = c.passed(args.tolerance);
        all &= ok;
        let _ = writeln!(
            out,
            "{:<22} {:<28} max rel err {:.3e}  {}",
            c.name,
            format!("{:?}", c.shape),
            c.max_rel_error,
            if ok { "pass" } else { "FAIL" }
        );
    }
    Ok(all)
}

/// Parses `argv` and runs the command. Returns the process exit code:
/// 0 on success (halted runs included), 1 for a failed gradient check,
/// 2 for configuration or I/O errors.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_lists_and_ranges() {
        assert_eq!(parse_seeds("0,1,2").unwrap(), [0, 1, 2]);
        assert_eq!(parse_seeds("3..6").unwrap(), [3, 4, 5]);
        assert_eq!(parse_seeds("0..2, 9").unwrap(), [0, 1, 9]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("a").is_err());
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "dvfl", "run", "--set", "hosts=2", "--set", "seed=4", "--seeds", "0,1", "--out",
            "x.csv",
        ])
        .unwrap();
        let Command::Run(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.config.set, ["hosts=2", "seed=4"]);
        assert_eq!(a.config.load().unwrap().hosts, 2);
    }

    #[test]
    fn bad_rate_is_exit_two() {
        assert_eq!(
            main_with(["dvfl", "gradcheck", "--set", "faults.host.up=1.3"]),
            2
        );
    }
}
