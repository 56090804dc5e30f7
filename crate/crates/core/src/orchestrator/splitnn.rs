//! End-to-end split learning under the same fault model.

use std::time::Instant;

use log::{debug, info};
use rand::seq::SliceRandom;

use super::config::ExperimentConfig;
use super::data::{training_ids, DataBundle};
use super::evaluate::{accuracy, holdout_split, EarlyStopper, Verdict};
use super::metrics::{Outcome, RunMetrics};
use crate::baselines::{run_splitnn_epoch, SplitNnSystem};
use crate::data::{vertical_split, Dataset};
use crate::error::{Error, Result};
use crate::faults::LinkState;
use crate::nn::{argmax_rows, cross_entropy_loss, Matrix};
use crate::rng::{stream, Domain};

/// Guest encoders drawn from the same streams as the DVFL guests, and a
/// host network stacking the host encoder on a single-host owner head.
pub fn build_splitnn(cfg: &ExperimentConfig, bundle: &DataBundle) -> Result<SplitNnSystem> {
    let spec = bundle.partition(cfg.guests)?;
    let guests = spec
        .features
        .iter()
        .enumerate()
        .map(|(g, cols)| {
            let mut r = stream(cfg.seed, Domain::GuestModel, g as u64);
            cfg.arch.guest_encoder(cols.len(), cfg.guests, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut r = stream(cfg.seed, Domain::SplitNnHost, 0);
    let host = cfg.arch.splitnn_host(bundle.classes, &mut r)?;
    SplitNnSystem::new(
        guests,
        host,
        &cfg.optim.splitnn_guest,
        &cfg.optim.splitnn_host,
    )
}

fn gather(parts: &[Dataset], rows: &[usize]) -> Result<Vec<Matrix>> {
    parts.iter().map(|d| d.gather_rows(rows)).collect()
}

fn refs(xs: &[Matrix]) -> Vec<&Matrix> {
    xs.iter().collect()
}

/// Runs a SplitNN strategy and also returns the trained system (`None` when
/// the run halted).
pub fn run_splitnn_detailed(
    cfg: &ExperimentConfig,
    bundle: &DataBundle,
) -> Result<(RunMetrics, Option<SplitNnSystem>)> {
    cfg.validate()?;
    let policy = cfg
        .strategy
        .policy()
        .ok_or_else(|| Error::Config(format!("run_splitnn given strategy {}", cfg.strategy)))?;
    let started = Instant::now();
    let mut metrics = RunMetrics::blank(cfg);
    let train = &bundle.train;
    let parts = vertical_split(train, &bundle.partition(cfg.guests)?)?;
    let labels = train
        .labels()
        .ok_or_else(|| Error::Config("training set has no labels".into()))?;
    let labeled = training_ids(train, cfg.labeled_count, cfg.guests, cfg.seed)?.labeled;
    let labeled_rows = train.rows_for(&labeled)?;
    let (fit_pos, val_pos) =
        holdout_split(labeled_rows.len(), cfg.early_stopping.holdout, cfg.seed);
    let fit_rows: Vec<usize> = fit_pos.iter().map(|&p| labeled_rows[p]).collect();
    let val_rows: Vec<usize> = val_pos.iter().map(|&p| labeled_rows[p]).collect();
    let val_x = gather(&parts, &val_rows)?;
    let val_y: Vec<usize> = val_rows.iter().map(|&r| labels[r]).collect();

    let mut sys = build_splitnn(cfg, bundle)?;
    let mut link = LinkState::new(cfg.faults, cfg.guests, 1, cfg.seed)?;
    let mut stopper = EarlyStopper::new(cfg.early_stopping.patience);
    let mut best: Option<SplitNnSystem> = None;

    for epoch in 0..cfg.epochs.splitnn {
        let mut order = fit_rows.clone();
        order.shuffle(&mut stream(cfg.seed, Domain::SplitNnOrder, epoch as u64));
        let stats = run_splitnn_epoch(
            &mut sys,
            &parts,
            labels,
            &order,
            cfg.batch_size,
            &mut link,
            policy,
        )?;
        metrics.skipped_batches += stats.skipped;
        metrics.imputed_slices += stats.imputed_slices;
        metrics.supervised_epochs += 1;
        if stats.halted_at.is_some() {
            metrics.outcome = Outcome::Halted;
            metrics.halted_epoch = Some(epoch);
            info!(
                "{} halted in epoch {epoch} at batch {:?}",
                cfg.strategy, stats.halted_at
            );
            break;
        }
        metrics.train_loss = stats.mean_loss.is_finite().then_some(stats.mean_loss);
        if val_rows.is_empty() {
            continue;
        }
        let v = cross_entropy_loss(&sys.predict(&refs(&val_x))?, &val_y)?.0;
        debug!(
            "splitnn epoch {epoch}: train {}, val {v}, skipped {}",
            stats.mean_loss, stats.skipped
        );
        match stopper.observe(v) {
            Verdict::Improved => best = Some(sys.clone()),
            Verdict::Continue => {}
            Verdict::Stop => break,
        }
    }
    metrics.faults = link.counts();
    metrics.val_loss = stopper.best();
    if metrics.outcome == Outcome::Halted {
        metrics.wall_clock_s = started.elapsed().as_secs_f64();
        return Ok((metrics, None));
    }
    if let Some(b) = best {
        sys = b;
    }
    let test = &bundle.test;
    let test_parts = vertical_split(test, &bundle.partition(cfg.guests)?)?;
    let test_labels = test
        .labels()
        .ok_or_else(|| Error::Config("test set has no labels".into()))?;
    let all: Vec<usize> = (0..test.len()).collect();
    let mut predicted = Vec::with_capacity(test.len());
    for chunk in all.chunks(4096) {
        let xs = gather(&test_parts, chunk)?;
        predicted.extend(argmax_rows(&sys.predict(&refs(&xs))?));
    }
    metrics.accuracy = Some(accuracy(&predicted, test_labels)?);
    metrics.wall_clock_s = started.elapsed().as_secs_f64();
    info!(
        "{} seed {}: {} in {:.1}s",
        cfg.strategy,
        cfg.seed,
        metrics.accuracy_cell(),
        metrics.wall_clock_s
    );
    Ok((metrics, Some(sys)))
}

pub fn run_splitnn(cfg: &ExperimentConfig, bundle: &DataBundle) -> Result<RunMetrics> {
    Ok(run_splitnn_detailed(cfg, bundle)?.0)
}
