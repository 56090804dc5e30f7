//! Per-run results and their CSV / JSON renderings.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Strategy};
use crate::error::Result;
use crate::faults::FaultCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// SplitNN under `Wait` stopped at its first fault.
    Halted,
    /// No host ever received a complete set of activations.
    ColdStart,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Halted => "halted",
            Outcome::ColdStart => "cold_start",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub strategy: Strategy,
    pub seed: u64,
    pub guests: usize,
    pub hosts: usize,
    pub comm_period: usize,
    pub labeled_count: Option<usize>,
    pub conn_down: f64,
    pub conn_up: f64,
    pub guest_down: f64,
    pub guest_up: f64,
    pub host_down: f64,
    pub host_up: f64,
    pub outcome: Outcome,
    /// Test accuracy in percent; `None` unless the run completed.
    pub accuracy: Option<f64>,
    /// Mean reconstruction loss over the last guest epoch, averaged across guests.
    pub guest_loss: Option<f64>,
    /// Mean reconstruction loss over each host's last `batches_per_epoch`
    /// iterations, averaged across hosts.
    pub host_loss: Option<f64>,
    /// Mean cross-entropy of the final supervised epoch (owner or SplitNN).
    pub train_loss: Option<f64>,
    /// Best held-out loss, the one whose weights were kept.
    pub val_loss: Option<f64>,
    /// Supervised epochs actually run.
    pub supervised_epochs: usize,
    /// Bits each guest is scheduled to send: one message per host per
    /// iteration of every communication epoch.
    pub bits_per_guest: u64,
    /// Bits that reached a register, summed over guests.
    pub bits_delivered: u64,
    pub faults: FaultCounts,
    /// Communication rounds a host skipped because a register was never written.
    pub cold_rounds: u64,
    pub skipped_batches: u64,
    pub imputed_slices: u64,
    pub halted_epoch: Option<usize>,
    pub wall_clock_s: f64,
}

impl RunMetrics {
    /// A record with the configuration columns filled and every result empty.
    pub fn blank(cfg: &ExperimentConfig) -> Self {
        let f = &cfg.faults;
        Self {
            strategy: cfg.strategy,
            seed: cfg.seed,
            guests: cfg.guests,
            hosts: cfg.hosts,
            comm_period: cfg.comm_period,
            labeled_count: cfg.labeled_count,
            conn_down: f.connection.down,
            conn_up: f.connection.up,
            guest_down: f.guest.down,
            guest_up: f.guest.up,
            host_down: f.host.down,
            host_up: f.host.up,
            outcome: Outcome::Completed,
            accuracy: None,
            guest_loss: None,
            host_loss: None,
            train_loss: None,
            val_loss: None,
            supervised_epochs: 0,
            bits_per_guest: 0,
            bits_delivered: 0,
            faults: FaultCounts::default(),
            cold_rounds: 0,
            skipped_batches: 0,
            imputed_slices: 0,
            halted_epoch: None,
            wall_clock_s: 0.0,
        }
    }

    pub fn halted(&self) -> bool {
        self.outcome == Outcome::Halted
    }

    /// The accuracy column: the value, or the outcome name when there is none.
    pub fn accuracy_cell(&self) -> String {
        match (self.outcome, self.accuracy) {
            (Outcome::Completed, Some(a)) => format!("{a:.4}"),
            (o, _) => o.name().to_string(),
        }
    }

    /// One CSV record in `CSV_HEADER` order. Wall-clock time is left out so
    /// that reruns produce identical bytes.
    pub fn csv_record(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        fn loss(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.6}")).unwrap_or_default()
        }
        let c = &self.faults;
        vec![
            self.strategy.name().to_string(),
            self.seed.to_string(),
            self.guests.to_string(),
            self.hosts.to_string(),
            self.comm_period.to_string(),
            opt(self.labeled_count),
            self.conn_down.to_string(),
            self.conn_up.to_string(),
            self.guest_down.to_string(),
            self.guest_up.to_string(),
            self.host_down.to_string(),
            self.host_up.to_string(),
            self.outcome.name().to_string(),
            self.accuracy_cell(),
            (self.bits_per_guest / 8).to_string(),
            self.bits_per_guest.to_string(),
            self.bits_delivered.to_string(),
            self.halted().to_string(),
            loss(self.guest_loss),
            loss(self.host_loss),
            loss(self.train_loss),
            loss(self.val_loss),
            self.supervised_epochs.to_string(),
            c.connection_faults.to_string(),
            c.guest_faults.to_string(),
            c.host_faults.to_string(),
            self.cold_rounds.to_string(),
            self.skipped_batches.to_string(),
            self.imputed_slices.to_string(),
            opt(self.halted_epoch),
        ]
    }
}

pub const CSV_HEADER: [&str; 30] = [
    "strategy",
    "seed",
    "guests",
    "hosts",
    "comm_period",
    "labeled_count",
    "conn_down",
    "conn_up",
    "guest_down",
    "guest_up",
    "host_down",
    "host_up",
    "outcome",
    "accuracy",
    "bytes_per_guest",
    "bits_per_guest",
    "bits_delivered",
    "halted",
    "guest_loss",
    "host_loss",
    "train_loss",
    "val_loss",
    "supervised_epochs",
    "connection_faults",
    "guest_faults",
    "host_faults",
    "cold_rounds",
    "skipped_batches",
    "imputed_slices",
    "halted_epoch",
];

pub fn write_runs_csv<W: Write>(out: W, runs: &[RunMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in runs {
        w.write_record(r.csv_record())?;
    }
    w.flush().map_err(|e| crate::error::Error::io("<csv>", e))?;
    Ok(())
}

pub fn runs_csv_string(runs: &[RunMetrics]) -> Result<String> {
    let mut buf = Vec::new();
    write_runs_csv(&mut buf, runs)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(out, value)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_record_agree() {
        let m = RunMetrics::blank(&ExperimentConfig::default());
        assert_eq!(m.csv_record().len(), CSV_HEADER.len());
    }

    #[test]
    fn halted_runs_render_as_halted() {
        let mut m = RunMetrics::blank(&ExperimentConfig::default());
        m.outcome = Outcome::Halted;
        let text = runs_csv_string(&[m]).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert!(row.contains(",halted,"), "{row}");
    }

    #[test]
    fn json_round_trips() {
        let mut m = RunMetrics::blank(&ExperimentConfig::default());
        m.accuracy = Some(97.25);
        let mut buf = Vec::new();
        write_json(&mut buf, &[m.clone()]).unwrap();
        let back: Vec<RunMetrics> = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, vec![m]);
    }
}
