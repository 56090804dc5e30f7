//! The decoupled pipeline: guest and host autoencoders, then the owner's
//! transfer head, then fault-free evaluation.

use std::time::Instant;

use log::{debug, info};

use super::config::{ExperimentConfig, Strategy};
use super::cost::is_communication_epoch;
use super::data::{training_ids, DataBundle, TrainingIds};
use super::evaluate::{accuracy, holdout_split, EarlyStopper, Verdict};
use super::metrics::{Outcome, RunMetrics};
use crate::agents::{
    encode_entity, guest_train_round, host_ingest, host_train_round, owner_loss, owner_train_epoch,
    predict, Guest, Host, HostRound, Ingest, Owner,
};
use crate::data::{vertical_split, BatchPlan, Dataset};
use crate::error::{Error, Result};
use crate::faults::LinkState;
use crate::nn::{Matrix, Mlp};
use crate::rng::{stream, Domain};

const ENCODE_CHUNK: usize = 4096;

/// Frozen guest and host encoders applied to `ids`, in order.
pub fn encode_ids(
    guests: &[&Mlp],
    hosts: &[&Mlp],
    parts: &[&Dataset],
    ids: &[usize],
) -> Result<Matrix> {
    let width: usize = hosts.iter().map(|h| h.output_dim()).sum();
    let mut data = Vec::with_capacity(ids.len() * width);
    for chunk in ids.chunks(ENCODE_CHUNK) {
        let xs = parts
            .iter()
            .map(|d| d.gather_rows(&d.rows_for(chunk)?))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Matrix> = xs.iter().collect();
        data.extend_from_slice(encode_entity(guests, hosts, &refs)?.as_slice());
    }
    Matrix::from_vec(ids.len(), width, data)
}

/// A DVFL run split into its phases so callers can inspect the parties in
/// between.
pub struct DvflSession<'a> {
    cfg: ExperimentConfig,
    bundle: &'a DataBundle,
    pub guests: Vec<Guest>,
    pub hosts: Vec<Host>,
    pub owner: Owner,
    link: LinkState,
    ids: TrainingIds,
    batches_per_epoch: usize,
    host_iters: Vec<usize>,
    /// Guest parameter checksums after every guest epoch.
    pub guest_trace: Vec<Vec<u64>>,
    metrics: RunMetrics,
    started: Instant,
}

impl<'a> DvflSession<'a> {
    pub fn new(cfg: &ExperimentConfig, bundle: &'a DataBundle) -> Result<Self> {
        cfg.validate()?;
        if cfg.strategy != Strategy::Dvfl {
            return Err(Error::Config(format!(
                "run_dvfl given strategy {}",
                cfg.strategy
            )));
        }
        let started = Instant::now();
        let g_count = cfg.guests;
        let parts = vertical_split(&bundle.train, &bundle.partition(g_count)?)?;
        let ids = training_ids(&bundle.train, cfg.labeled_count, g_count, cfg.seed)?;
        let arch = &cfg.arch;

        let mut guests = Vec::with_capacity(g_count);
        for (g, part) in parts.into_iter().enumerate() {
            let local = part.select_ids(&ids.local[g])?.without_labels();
            let mut r = stream(cfg.seed, Domain::GuestModel, g as u64);
            let enc = arch.guest_encoder(local.dim(), g_count, &mut r)?;
            let dec = arch.guest_decoder(local.dim(), g_count, &mut r)?;
            guests.push(Guest::new(g, enc, dec, &cfg.optim.guest, local)?);
        }
        let mut hosts = Vec::with_capacity(cfg.hosts);
        for h in 0..cfg.hosts {
            let mut r = stream(cfg.seed, Domain::HostModel, h as u64);
            let enc = arch.host_encoder(&mut r)?;
            let dec = arch.host_decoder(&mut r)?;
            hosts.push(Host::new(h, g_count, enc, dec, &cfg.optim.host)?);
        }
        let mut r = stream(cfg.seed, Domain::OwnerModel, 0);
        let owner = Owner::new(
            arch.owner(cfg.hosts, bundle.classes, &mut r)?,
            &cfg.optim.owner,
        )?;

        let batches_per_epoch = ids.local[0].len().div_ceil(cfg.batch_size);
        Ok(Self {
            link: LinkState::new(cfg.faults, g_count, cfg.hosts, cfg.seed)?,
            host_iters: vec![0; cfg.hosts],
            guest_trace: Vec::with_capacity(cfg.epochs.guest),
            metrics: RunMetrics::blank(cfg),
            cfg: cfg.clone(),
            bundle,
            guests,
            hosts,
            owner,
            ids,
            batches_per_epoch,
            started,
        })
    }

    /// Iterations each host runs in total, online and offline.
    pub fn host_budget(&self) -> usize {
        self.cfg.epochs.host * self.batches_per_epoch
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.batches_per_epoch
    }

    pub fn link(&self) -> &LinkState {
        &self.link
    }

    fn record_host(&mut self, h: usize, round: HostRound, tail: &mut [(f64, usize)]) {
        let budget = self.host_budget();
        let i = self.host_iters[h];
        self.host_iters[h] += 1;
        if let HostRound::Trained { loss } = round {
            if i + self.batches_per_epoch >= budget {
                tail[h].0 += loss;
                tail[h].1 += 1;
            }
        }
    }

    /// Guest epochs, with a communication round after every guest iteration
    /// of a communication epoch, then offline host iterations over the
    /// replay buffer until every host has used its budget.
    pub fn unsupervised_phase(&mut self) -> Result<()> {
        let cfg = &self.cfg;
        let (bs, seed, k, n) = (cfg.batch_size, cfg.seed, cfg.comm_period, cfg.epochs.guest);
        let budget = self.host_budget();
        let mut host_tail = vec![(0.0, 0usize); self.hosts.len()];
        let mut scheduled = vec![0u64; self.guests.len()];
        let mut guest_loss = None;

        for epoch in 0..n {
            let communicate = is_communication_epoch(epoch, n, k);
            let rows = self
                .guests
                .iter()
                .map(|g| {
                    let plan = BatchPlan::shuffled(&self.ids.local[g.id], bs, seed, epoch as u64);
                    g.data().rows_for(&plan.ordering)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sums = vec![(0.0, 0usize); self.guests.len()];
            for b in 0..self.batches_per_epoch {
                for (g, guest) in self.guests.iter_mut().enumerate() {
                    let chunk = rows[g].chunks(bs).nth(b).unwrap_or(&[]);
                    let r = guest_train_round(
                        guest,
                        chunk,
                        communicate,
                        &mut self.hosts,
                        &mut self.link,
                    )?;
                    if let Some(l) = r.loss {
                        sums[g].0 += l;
                        sums[g].1 += 1;
                    }
                    scheduled[g] += r.attempted_bits;
                    self.metrics.bits_delivered += r.delivered_bits;
                }
                if communicate {
                    for h in 0..self.hosts.len() {
                        match host_ingest(&mut self.hosts[h])? {
                            Ingest::Cold => self.metrics.cold_rounds += 1,
                            Ingest::Appended if self.host_iters[h] < budget => {
                                let round =
                                    host_train_round(&mut self.hosts[h], &mut self.link, true)?;
                                self.record_host(h, round, &mut host_tail);
                            }
                            Ingest::Appended => {}
                        }
                    }
                }
            }
            self.guest_trace.push(
                self.guests
                    .iter()
                    .map(|g| g.encoder.checksum() ^ g.decoder.checksum().rotate_left(1))
                    .collect(),
            );
            let means: Vec<f64> = sums
                .iter()
                .filter(|s| s.1 > 0)
                .map(|s| s.0 / s.1 as f64)
                .collect();
            guest_loss =
                (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);
            debug!("guest epoch {epoch}: loss {guest_loss:?}, communicate {communicate}");
        }
        self.metrics.guest_loss = guest_loss;
        self.metrics.bits_per_guest = scheduled.iter().copied().max().unwrap_or(0);

        for h in 0..self.hosts.len() {
            if self.hosts[h].replay().is_empty() {
                debug!("host {h} never received input");
                continue;
            }
            while self.host_iters[h] < budget {
                let round = host_train_round(&mut self.hosts[h], &mut self.link, false)?;
                self.record_host(h, round, &mut host_tail);
            }
        }
        let means: Vec<f64> = host_tail
            .iter()
            .filter(|t| t.1 > 0)
            .map(|t| t.0 / t.1 as f64)
            .collect();
        self.metrics.host_loss =
            (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64);
        if self.hosts.iter().all(|h| h.replay().is_empty()) {
            self.metrics.outcome = Outcome::ColdStart;
        }
        self.metrics.faults = self.link.counts();
        info!(
            "unsupervised phase done: guest loss {:?}, host loss {:?}, outcome {}",
            self.metrics.guest_loss,
            self.metrics.host_loss,
            self.metrics.outcome.name()
        );
        Ok(())
    }

    fn encode(&self, parts: &[&Dataset], ids: &[usize]) -> Result<Matrix> {
        let g: Vec<&Mlp> = self.guests.iter().map(|g| &g.encoder).collect();
        let h: Vec<&Mlp> = self.hosts.iter().map(|h| &h.encoder).collect();
        encode_ids(&g, &h, parts, ids)
    }

    /// Trains the owner head on frozen encodings of the labeled set, with
    /// early stopping on a held-out slice. No-op after a cold start.
    pub fn supervised_phase(&mut self) -> Result<()> {
        if self.metrics.outcome != Outcome::Completed {
            return Ok(());
        }
        let parts: Vec<&Dataset> = self.guests.iter().map(Guest::data).collect();
        let encoded = self.encode(&parts, &self.ids.labeled)?;
        let train = &self.bundle.train;
        let labels = train.labels_at(&train.rows_for(&self.ids.labeled)?)?;

        let (fit_pos, val_pos) =
            holdout_split(labels.len(), self.cfg.early_stopping.holdout, self.cfg.seed);
        let val_x = encoded.select_rows(&val_pos)?;
        let val_y: Vec<usize> = val_pos.iter().map(|&p| labels[p]).collect();
        let mut stopper = EarlyStopper::new(self.cfg.early_stopping.patience);
        let mut best: Option<Owner> = None;
        let mut last = None;
        let mut epochs = 0;
        for epoch in 0..self.cfg.epochs.owner {
            let mut order = fit_pos.clone();
            rand::seq::SliceRandom::shuffle(
                &mut order[..],
                &mut stream(self.cfg.seed, Domain::OwnerOrder, epoch as u64),
            );
            last = Some(owner_train_epoch(
                &mut self.owner,
                &encoded,
                &labels,
                &order,
                self.cfg.batch_size,
            )?);
            epochs += 1;
            if val_pos.is_empty() {
                continue;
            }
            let v = owner_loss(&self.owner, &val_x, &val_y)?;
            debug!("owner epoch {epoch}: train {last:?}, val {v}");
            match stopper.observe(v) {
                Verdict::Improved => best = Some(self.owner.clone()),
                Verdict::Continue => {}
                Verdict::Stop => break,
            }
        }
        if let Some(b) = best {
            self.owner = b;
        }
        self.metrics.train_loss = last;
        self.metrics.val_loss = stopper.best();
        self.metrics.supervised_epochs = epochs;
        Ok(())
    }

    /// Fault-free accuracy on the whole test set.
    pub fn evaluate(&mut self) -> Result<Option<f64>> {
        if self.metrics.outcome != Outcome::Completed {
            return Ok(None);
        }
        let test = &self.bundle.test;
        let parts = vertical_split(test, &self.bundle.partition(self.cfg.guests)?)?;
        let refs: Vec<&Dataset> = parts.iter().collect();
        let encoded = self.encode(&refs, test.entity_ids())?;
        let labels = test
            .labels()
            .ok_or_else(|| Error::Config("test set has no labels".into()))?;
        let acc = accuracy(&predict(&self.owner, &encoded)?, labels)?;
        self.metrics.accuracy = Some(acc);
        Ok(Some(acc))
    }

    pub fn finish(mut self) -> RunMetrics {
        self.metrics.faults = self.link.counts();
        self.metrics.wall_clock_s = self.started.elapsed().as_secs_f64();
        self.metrics
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }
}

pub fn run_dvfl(cfg: &ExperimentConfig, bundle: &DataBundle) -> Result<RunMetrics> {
    let mut s = DvflSession::new(cfg, bundle)?;
    s.unsupervised_phase()?;
    s.supervised_phase()?;
    s.evaluate()?;
    let m = s.finish();
    info!(
        "dvfl seed {}: {} in {:.1}s",
        m.seed,
        m.accuracy_cell(),
        m.wall_clock_s
    );
    Ok(m)
}
