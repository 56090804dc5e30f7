//! Vanilla split learning: guest encoders feed one host network and
//! receive split-layer gradients back.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::faults::{Entity, LinkState};
use crate::nn::{cross_entropy_loss, Matrix, Mlp, OptimizerConfig, OptimizerState};

/// What the host does when a guest's forward message misses the deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeoutPolicy {
    /// Block forever: any fault halts training.
    Wait,
    /// Drop the whole batch.
    Skip,
    /// Substitute zeros for missing slices.
    Zeros,
}

impl TimeoutPolicy {
    pub fn name(self) -> &'static str {
        match self {
            TimeoutPolicy::Wait => "wait",
            TimeoutPolicy::Skip => "skip",
            TimeoutPolicy::Zeros => "zeros",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitNnSystem {
    pub guests: Vec<Mlp>,
    pub host: Mlp,
    guest_opts: Vec<OptimizerState>,
    host_opt: OptimizerState,
}

/// Result of the forward half of a step.
#[derive(Debug, Clone)]
pub enum Forward {
    Ready {
        logits: Matrix,
        /// Which guests delivered their slice.
        present: Vec<bool>,
    },
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackwardReport {
    /// `None` when the host was down and nobody updated.
    pub loss: Option<f64>,
    pub guest_updated: Vec<bool>,
}

impl SplitNnSystem {
    pub fn new(
        guests: Vec<Mlp>,
        host: Mlp,
        guest_opt: &OptimizerConfig,
        host_opt: &OptimizerConfig,
    ) -> Result<Self> {
        let width: usize = guests.iter().map(Mlp::output_dim).sum();
        if width != host.input_dim() {
            return Err(Error::dim("SplitNnSystem::new", host.input_dim(), width));
        }
        guest_opt.validate()?;
        host_opt.validate()?;
        Ok(Self {
            guest_opts: guests.iter().map(|_| guest_opt.build()).collect(),
            guests,
            host,
            host_opt: host_opt.build(),
        })
    }

    /// Fault-free inference through the composed network.
    pub fn predict(&self, parts: &[&Matrix]) -> Result<Matrix> {
        let outs = self
            .guests
            .iter()
            .zip(parts)
            .map(|(g, x)| g.predict(x))
            .collect::<Result<Vec<_>>>()?;
        self.host
            .predict(&Matrix::hcat(&outs.iter().collect::<Vec<_>>())?)
    }

    pub fn checksum(&self) -> u64 {
        self.guests
            .iter()
            .chain(std::iter::once(&self.host))
            .fold(0u64, |acc, m| acc.rotate_left(7) ^ m.checksum())
    }
}

fn halted(what: String) -> Error {
    Error::Halted(what)
}

/// Every guest and its connection are polled. Missing slices are handled
/// by `policy`.
pub fn splitnn_forward_step(
    sys: &mut SplitNnSystem,
    parts: &[&Matrix],
    link: &mut LinkState,
    policy: TimeoutPolicy,
) -> Result<Forward> {
    if parts.len() != sys.guests.len() {
        return Err(Error::dim(
            "splitnn forward parts",
            sys.guests.len(),
            parts.len(),
        ));
    }
    let mut present = Vec::with_capacity(parts.len());
    for i in 0..parts.len() {
        let guest = link.poll(Entity::Guest(i))?;
        let conn = link.poll(Entity::Connection { guest: i, host: 0 })?;
        present.push(guest && conn);
    }
    if let Some(i) = present.iter().position(|p| !p) {
        match policy {
            TimeoutPolicy::Wait => {
                return Err(halted(format!(
                    "guest {i} never delivered its forward pass"
                )))
            }
            TimeoutPolicy::Skip => return Ok(Forward::Skipped),
            TimeoutPolicy::Zeros => {}
        }
    }
    let rows = parts.first().map_or(0, |p| p.rows());
    let mut outs = Vec::with_capacity(parts.len());
    for (i, x) in parts.iter().enumerate() {
        outs.push(if present[i] {
            sys.guests[i].forward(x)?
        } else {
            Matrix::zeros(rows, sys.guests[i].output_dim())
        });
    }
    let joined = Matrix::hcat(&outs.iter().collect::<Vec<_>>())?;
    let logits = sys.host.forward(&joined)?;
    Ok(Forward::Ready { logits, present })
}

/// The host is polled first; a down host computes no gradients at all.
/// Each contributing guest is then polled again with its connection to
/// receive its slice of the split-layer gradient.
pub fn splitnn_backward_step(
    sys: &mut SplitNnSystem,
    logits: &Matrix,
    present: &[bool],
    labels: &[usize],
    link: &mut LinkState,
    policy: TimeoutPolicy,
) -> Result<BackwardReport> {
    let n = sys.guests.len();
    if !link.poll(Entity::Host(0))? {
        if policy == TimeoutPolicy::Wait {
            return Err(halted("host failed before computing gradients".into()));
        }
        return Ok(BackwardReport {
            loss: None,
            guest_updated: vec![false; n],
        });
    }
    let (loss, g) = cross_entropy_loss(logits, labels)?;
    let (g_in, host_grads) = sys.host.backward(&g)?;
    sys.host_opt.step(&mut sys.host, &host_grads)?;

    let mut guest_updated = vec![false; n];
    let mut offset = 0;
    for i in 0..n {
        let w = sys.guests[i].output_dim();
        if present[i] {
            let guest = link.poll(Entity::Guest(i))?;
            let conn = link.poll(Entity::Connection { guest: i, host: 0 })?;
            if guest && conn {
                let slice = g_in.columns(offset, w)?;
                let grads = sys.guests[i].backward_params(&slice)?;
                sys.guest_opts[i].step(&mut sys.guests[i], &grads)?;
                guest_updated[i] = true;
            } else if policy == TimeoutPolicy::Wait {
                return Err(halted(format!("guest {i} lost its backward pass")));
            }
        }
        offset += w;
    }
    Ok(BackwardReport {
        loss: Some(loss),
        guest_updated,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub batches: u64,
    /// Batches with no update at all: skipped forward or host down.
    pub skipped: u64,
    pub imputed_slices: u64,
    pub guest_updates: u64,
    pub host_updates: u64,
    pub mean_loss: f64,
    /// Batch index (within the epoch) at which a `Wait` run halted.
    pub halted_at: Option<u64>,
}

/// One pass over `order` (row indices shared by all guest datasets).
/// A halt under `Wait` ends the epoch and is reported, not raised.
pub fn run_splitnn_epoch(
    sys: &mut SplitNnSystem,
    data: &[Dataset],
    labels: &[usize],
    order: &[usize],
    batch_size: usize,
    link: &mut LinkState,
    policy: TimeoutPolicy,
) -> Result<EpochStats> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut stats = EpochStats::default();
    let mut loss_sum = 0.0;
    let mut loss_n = 0u64;
    for (b, rows) in order.chunks(batch_size).enumerate() {
        stats.batches += 1;
        let xs = data
            .iter()
            .map(|d| d.gather_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        let y: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
        let refs: Vec<&Matrix> = xs.iter().collect();
        let step = splitnn_forward_step(sys, &refs, link, policy).and_then(|fwd| match fwd {
            Forward::Skipped => Ok(None),
            Forward::Ready { logits, present } => {
                let imputed = present.iter().filter(|p| !**p).count() as u64;
                splitnn_backward_step(sys, &logits, &present, &y, link, policy)
                    .map(|r| Some((r, imputed)))
            }
        });
        match step {
            Err(Error::Halted(_)) => {
                stats.halted_at = Some(b as u64);
                break;
            }
            Err(e) => return Err(e),
            Ok(None) => stats.skipped += 1,
            Ok(Some((report, imputed))) => {
                stats.imputed_slices += imputed;
                stats.guest_updates += report.guest_updated.iter().filter(|u| **u).count() as u64;
                match report.loss {
                    Some(l) => {
                        stats.host_updates += 1;
                        loss_sum += l;
                        loss_n += 1;
                    }
                    None => stats.skipped += 1,
                }
            }
        }
    }
    stats.mean_loss = if loss_n == 0 {
        f64::NAN
    } else {
        loss_sum / loss_n as f64
    };
    Ok(stats)
}
