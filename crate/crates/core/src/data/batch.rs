//! Entity-aligned minibatch iteration.

use rand::seq::SliceRandom;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream, Domain};

/// A fixed entity order cut into minibatches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub ordering: Vec<usize>,
}

impl BatchPlan {
    pub fn sequential(ids: &[usize], batch_size: usize) -> Self {
        Self {
            batch_size,
            ordering: ids.to_vec(),
        }
    }

    /// `ids` permuted by the epoch-order stream for `(seed, epoch)`. Two id
    /// lists of equal length receive the same position permutation.
    pub fn shuffled(ids: &[usize], batch_size: usize, seed: u64, epoch: u64) -> Self {
        let mut ordering = ids.to_vec();
        ordering.shuffle(&mut stream(seed, Domain::EpochOrder, epoch));
        Self {
            batch_size,
            ordering,
        }
    }

    pub fn batch_count(&self) -> usize {
        if self.batch_size == 0 {
            0
        } else {
            self.ordering.len().div_ceil(self.batch_size)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<usize>,
    /// Row indices into the dataset the batch was planned against.
    pub rows: Vec<usize>,
}

/// Cuts the plan into batches of `batch_size`; the last one may be short.
pub fn make_batches(plan: &BatchPlan, d: &Dataset) -> Result<Vec<Batch>> {
    if plan.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let rows = d.rows_for(&plan.ordering)?;
    Ok(plan
        .ordering
        .chunks(plan.batch_size)
        .zip(rows.chunks(plan.batch_size))
        .map(|(ids, rows)| Batch {
            ids: ids.to_vec(),
            rows: rows.to_vec(),
        })
        .collect())
}
