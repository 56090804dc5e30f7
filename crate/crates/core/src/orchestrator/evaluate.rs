//! Accuracy, held-out splits, and early stopping.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// Percentage of predictions equal to their label.
pub fn accuracy(predicted: &[usize], labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty test set".into()));
    }
    if predicted.len() != labels.len() {
        return Err(Error::dim("accuracy", labels.len(), predicted.len()));
    }
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(100.0 * hits as f64 / labels.len() as f64)
}

/// Splits positions `0..n` into (train, validation). The validation part
/// holds `max(1, floor(fraction * n))` positions when `fraction > 0` and
/// `n >= 2`; otherwise it is empty.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    if fraction <= 0.0 || n < 2 {
        return (idx, Vec::new());
    }
    idx.shuffle(&mut stream(seed, Domain::Holdout, 0));
    let v = ((fraction * n as f64).floor() as usize).clamp(1, n - 1);
    let val = idx[..v].to_vec();
    let mut train = idx[v..].to_vec();
    train.sort_unstable();
    (train, val)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// New best; keep a snapshot.
    Improved,
    Continue,
    Stop,
}

/// Stops after `patience` consecutive epochs without a lower validation
/// loss. Patience 0 never stops.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    stale: usize,
    epoch: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            stale: 0,
            epoch: 0,
        }
    }

    pub fn observe(&mut self, loss: f64) -> Verdict {
        let e = self.epoch;
        self.epoch += 1;
        if loss < self.best {
            self.best = loss;
            self.best_epoch = Some(e);
            self.stale = 0;
            return Verdict::Improved;
        }
        self.stale += 1;
        if self.patience > 0 && self.stale >= self.patience {
            Verdict::Stop
        } else {
            Verdict::Continue
        }
    }

    pub fn best(&self) -> Option<f64> {
        self.best_epoch.map(|_| self.best)
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_basics() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 100.0);
        assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 1, 2, 3]).unwrap(), 25.0);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn holdout_partitions_positions() {
        let (t, v) = holdout_split(95, 0.1, 3);
        assert_eq!(v.len(), 9);
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..95).collect::<Vec<_>>());
        assert_eq!(holdout_split(5, 0.1, 0).1.len(), 1);
        assert!(holdout_split(1, 0.1, 0).1.is_empty());
        assert!(holdout_split(10, 0.0, 0).1.is_empty());
    }

    #[test]
    fn stopper_counts_stale_epochs() {
        let mut s = EarlyStopper::new(2);
        assert_eq!(s.observe(1.0), Verdict::Improved);
        assert_eq!(s.observe(0.5), Verdict::Improved);
        assert_eq!(s.observe(0.6), Verdict::Continue);
        assert_eq!(s.observe(0.5), Verdict::Stop);
        assert_eq!(s.best(), Some(0.5));
        assert_eq!(s.best_epoch(), Some(1));
    }

    #[test]
    fn zero_patience_never_stops() {
        let mut s = EarlyStopper::new(0);
        s.observe(0.1);
        assert!((0..100).all(|_| s.observe(1.0) == Verdict::Continue));
    }
}
