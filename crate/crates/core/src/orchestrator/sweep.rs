//! Grids of configurations run over several seeds, summarized as
//! median and twice the sample standard deviation.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{DatasetConfig, ExperimentConfig};
use super::data::{load_bundle, DataBundle};
use super::metrics::{Outcome, RunMetrics};
use super::run_experiment;
use crate::error::{Error, Result};

/// One labeled row or column of a grid: the overrides it applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub label: String,
    #[serde(default)]
    pub set: Vec<String>,
}

impl GridAxis {
    pub fn new(label: impl Into<String>, set: &[&str]) -> Self {
        Self {
            label: label.into(),
            set: set.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Rows times columns; each cell applies the row's overrides, then the
/// column's. With no columns there is a single unlabeled one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: Vec<GridAxis>,
    #[serde(default)]
    pub columns: Vec<GridAxis>,
}

impl GridSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn columns(&self) -> Vec<GridAxis> {
        if self.columns.is_empty() {
            vec![GridAxis::new("accuracy", &[])]
        } else {
            self.columns.clone()
        }
    }

    /// Every cell's configuration, row-major, validated up front so a bad
    /// cell fails before any training starts.
    pub fn cells(
        &self,
        base: &ExperimentConfig,
    ) -> Result<Vec<(String, String, ExperimentConfig)>> {
        if self.rows.is_empty() {
            return Err(Error::Config("sweep grid has no rows".into()));
        }
        let mut out = Vec::new();
        for r in &self.rows {
            for c in self.columns() {
                let set: Vec<&String> = r.set.iter().chain(&c.set).collect();
                let cfg = base
                    .with_overrides(&set)
                    .map_err(|e| Error::Config(format!("cell ({}, {}): {e}", r.label, c.label)))?;
                out.push((r.label.clone(), c.label.clone(), cfg));
            }
        }
        Ok(out)
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
pub fn sample_std(values: &[f64]) -> Option<f64> {
    match values.len() {
        0 => None,
        1 => Some(0.0),
        n => {
            let mean = values.iter().sum::<f64>() / n as f64;
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            Some((ss / (n - 1) as f64).sqrt())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub row: String,
    pub column: String,
    pub runs: usize,
    pub median: Option<f64>,
    pub two_sigma: Option<f64>,
    /// `completed`, or the first other outcome seen among the runs.
    pub outcome: Outcome,
}

impl CellSummary {
    pub fn from_runs(row: &str, column: &str, runs: &[RunMetrics]) -> Self {
        let outcome = runs
            .iter()
            .map(|r| r.outcome)
            .find(|o| *o != Outcome::Completed)
            .unwrap_or(Outcome::Completed);
        let acc: Vec<f64> = runs.iter().filter_map(|r| r.accuracy).collect();
        let (median, two_sigma) = if outcome == Outcome::Completed {
            (median(&acc), sample_std(&acc).map(|s| 2.0 * s))
        } else {
            (None, None)
        };
        Self {
            row: row.to_string(),
            column: column.to_string(),
            runs: runs.len(),
            median,
            two_sigma,
            outcome,
        }
    }

    /// `97.30 ± 0.16`, or the outcome name.
    pub fn text(&self) -> String {
        match (self.median, self.two_sigma) {
            (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
            _ => self.outcome.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub seeds: Vec<u64>,
    pub cells: Vec<CellSummary>,
    pub runs: Vec<RunMetrics>,
}

impl SweepResult {
    pub fn cell(&self, row: &str, column: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.row == row && c.column == column)
    }

    /// The table layout: one line per grid row, one column per grid column.
    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.clone()];
            for c in &self.columns {
                rec.push(self.cell(r, c).map(CellSummary::text).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Runs every cell for every seed with `runner`.
pub fn sweep_with<F>(
    base: &ExperimentConfig,
    grid: &GridSpec,
    seeds: &[u64],
    mut runner: F,
) -> Result<SweepResult>
where
    F: FnMut(&ExperimentConfig) -> Result<RunMetrics>,
{
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let cells = grid.cells(base)?;
    let mut result = SweepResult {
        rows: grid.rows.iter().map(|r| r.label.clone()).collect(),
        columns: grid.columns().into_iter().map(|c| c.label).collect(),
        seeds: seeds.to_vec(),
        cells: Vec::new(),
        runs: Vec::new(),
    };
    for (row, col, cfg) in cells {
        let mut runs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut c = cfg.clone();
            c.seed = seed;
            runs.push(runner(&c)?);
        }
        let summary = CellSummary::from_runs(&row, &col, &runs);
        log::info!("cell ({row}, {col}): {}", summary.text());
        result.cells.push(summary);
        result.runs.extend(runs);
    }
    Ok(result)
}

/// Runs the grid, loading each distinct dataset once.
pub fn sweep(base: &ExperimentConfig, grid: &GridSpec, seeds: &[u64]) -> Result<SweepResult> {
    let mut cache: Vec<(DatasetConfig, DataBundle)> = Vec::new();
    sweep_with(base, grid, seeds, |cfg| {
        let i = match cache.iter().position(|(d, _)| *d == cfg.dataset) {
            Some(i) => i,
            None => {
                cache.push((cfg.dataset.clone(), load_bundle(&cfg.dataset)?));
                cache.len() - 1
            }
        };
        run_experiment(cfg, &cache[i].1)
    })
}
