//! Finite-difference checks over every network a configuration builds.

use rand::Rng;
use serde::Serialize;

use super::config::{DatasetConfig, ExperimentConfig};
use super::data::load_bundle;
use crate::data::VerticalPartitionSpec;
use crate::error::Result;
use crate::nn::gradcheck::finite_diff_check;
use crate::nn::{init_mlp, LossKind, LossTarget, Matrix};
use crate::rng::{stream, Domain, SimRng};

pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeCheck {
    pub name: String,
    pub shape: Vec<usize>,
    pub params: usize,
    pub max_rel_error: f64,
}

impl ShapeCheck {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Feature count and class count without loading MNIST or synthetic data.
pub fn dataset_shape(d: &DatasetConfig) -> Result<(usize, usize)> {
    match d {
        DatasetConfig::Mnist { .. } => Ok((784, 10)),
        DatasetConfig::Synthetic {
            features, classes, ..
        } => Ok((*features, *classes)),
        DatasetConfig::Csv { .. } => {
            let b = load_bundle(d)?;
            Ok((b.dim(), b.classes))
        }
    }
}

fn uniform(rows: usize, cols: usize, r: &mut SimRng) -> Result<Matrix> {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| r.gen::<f64>()).collect(),
    )
}

/// Checks every guest, host, and SplitNN shape of `cfg`, and the owner head
/// for each host count up to `cfg.hosts`, on a random
/// batch of `rows` samples. Reconstruction nets use MSE against a random
/// target, classifiers use softmax cross-entropy.
pub fn check_architectures(
    cfg: &ExperimentConfig,
    rows: usize,
    seed: u64,
) -> Result<Vec<ShapeCheck>> {
    let (dim, classes) = dataset_shape(&cfg.dataset)?;
    cfg.arch.validate(cfg.guests)?;
    let bands = VerticalPartitionSpec::contiguous_bands(dim, cfg.guests)?;
    let inputs: Vec<usize> = bands.features.iter().map(Vec::len).collect();
    let mut shapes = Vec::new();
    for hosts in 1..=cfg.hosts {
        for s in cfg.arch.all_shapes(&inputs, hosts, classes) {
            if !shapes.iter().any(|t: &(String, _, _)| t.0 == s.0) {
                shapes.push(s);
            }
        }
    }
    let mut out = Vec::new();
    for (i, (name, shape, acts)) in shapes.into_iter().enumerate() {
        let mut r = stream(seed, Domain::Synthetic, 1000 + i as u64);
        let net = init_mlp(&shape, &acts, &mut r)?;
        let x = uniform(rows, net.input_dim(), &mut r)?;
        let out_dim = net.output_dim();
        let classifier = name.starts_with("owner") || name.starts_with("splitnn");
        let err = if classifier {
            let labels: Vec<usize> = (0..rows).map(|_| r.gen_range(0..classes)).collect();
            finite_diff_check(
                &net,
                &x,
                LossKind::CrossEntropyWithSoftmax,
                LossTarget::Classes(&labels),
            )?
        } else {
            let t = uniform(rows, out_dim, &mut r)?;
            finite_diff_check(&net, &x, LossKind::Mse, LossTarget::Values(&t))?
        };
        out.push(ShapeCheck {
            name,
            params: net.param_count(),
            shape,
            max_rel_error: err,
        });
    }
    Ok(out)
}
