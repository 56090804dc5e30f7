//! Loading a train/test pair and cutting it into guest slices.

use std::path::PathBuf;

use rand::Rng;

use super::config::{DatasetConfig, DATA_DIR_ENV};
use crate::data::{
    build_intersection_split, load_csv_raw, load_mnist_dir, Dataset, IntersectionSpec,
    MinMaxScaler, MnistSplit, VerticalPartitionSpec,
};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::{stream, Domain};

/// A labeled train/test pair with the same feature layout.
#[derive(Debug, Clone)]
pub struct DataBundle {
    pub train: Dataset,
    pub test: Dataset,
    pub classes: usize,
}

impl DataBundle {
    pub fn new(train: Dataset, test: Dataset) -> Result<Self> {
        if train.labels().is_none() || test.labels().is_none() {
            return Err(Error::Config("train and test sets must be labeled".into()));
        }
        if train.dim() != test.dim() {
            return Err(Error::dim(
                "DataBundle test features",
                train.dim(),
                test.dim(),
            ));
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::Config(
                "train and test sets must be non-empty".into(),
            ));
        }
        let classes = train.class_count().max(test.class_count());
        Ok(Self {
            train,
            test,
            classes,
        })
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    /// Contiguous feature bands, one per guest. For 28x28 images and four
    /// guests each band is seven pixel rows.
    pub fn partition(&self, guests: usize) -> Result<VerticalPartitionSpec> {
        VerticalPartitionSpec::contiguous_bands(self.dim(), guests)
    }
}

/// `dir`, else `$DVFL_DATA_DIR`, else `data/mnist` under the working
/// directory.
pub fn resolve_mnist_dir(dir: Option<&PathBuf>) -> PathBuf {
    if let Some(d) = dir {
        return d.clone();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from("data").join("mnist"),
    }
}

fn head(d: Dataset, limit: Option<usize>) -> Result<Dataset> {
    match limit {
        Some(n) if n < d.len() => {
            let ids = d.entity_ids()[..n].to_vec();
            d.select_ids(&ids)
        }
        _ => Ok(d),
    }
}

pub fn load_bundle(cfg: &DatasetConfig) -> Result<DataBundle> {
    match cfg {
        DatasetConfig::Mnist {
            dir,
            train_limit,
            test_limit,
        } => {
            let dir = resolve_mnist_dir(dir.as_ref());
            let train = head(load_mnist_dir(&dir, MnistSplit::Train)?, *train_limit)?;
            let test = head(load_mnist_dir(&dir, MnistSplit::Test)?, *test_limit)?;
            DataBundle::new(train, test)
        }
        DatasetConfig::Csv {
            train,
            test,
            options,
        } => {
            let tr = load_csv_raw(train, options)?;
            let te = load_csv_raw(test, options)?;
            let scaler = MinMaxScaler::fit(tr.features());
            let scale = |d: &Dataset| -> Result<Dataset> {
                Dataset::new(
                    scaler.transform(d.features())?,
                    d.labels().map(<[usize]>::to_vec),
                    d.entity_ids().to_vec(),
                )
            };
            DataBundle::new(scale(&tr)?, scale(&te)?)
        }
        DatasetConfig::Synthetic {
            train,
            test,
            features,
            classes,
            noise,
            data_seed,
        } => {
            let (tr, te) = synthetic(*train, *test, *features, *classes, *noise, *data_seed)?;
            DataBundle::new(tr, te)
        }
    }
}

/// Class prototypes drawn uniformly from `[0, 1]^features`; each sample is
/// its prototype plus uniform noise in `[-noise, noise]`, clamped to `[0, 1]`.
pub fn synthetic(
    train: usize,
    test: usize,
    features: usize,
    classes: usize,
    noise: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if classes == 0 || features == 0 {
        return Err(Error::Config(
            "synthetic data needs features and classes".into(),
        ));
    }
    let mut r = stream(seed, Domain::Synthetic, 0);
    let protos: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..features).map(|_| r.gen::<f64>()).collect())
        .collect();
    let draw = |n: usize, index: u64| -> Result<Dataset> {
        let mut r = stream(seed, Domain::Synthetic, index);
        let mut x = Vec::with_capacity(n * features);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            // Cycle the classes so small sets still cover all of them.
            let c = i % classes;
            y.push(c);
            for &p in &protos[c] {
                x.push((p + noise * (2.0 * r.gen::<f64>() - 1.0)).clamp(0.0, 1.0));
            }
        }
        Dataset::with_sequential_ids(Matrix::from_vec(n, features, x)?, Some(y))
    };
    Ok((draw(train, 1)?, draw(test, 2)?))
}

/// Which training entities are labeled and which each guest trains on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingIds {
    /// The labeled intersection, in dataset order.
    pub labeled: Vec<usize>,
    /// Per-guest unsupervised training ids; equal lengths across guests.
    pub local: Vec<Vec<usize>>,
}

/// Without a labeled count every guest sees the whole training set and all
/// of it is labeled. With one, the first `labeled_count` entities form the
/// intersection and each guest adds a private window of the rest.
pub fn training_ids(
    train: &Dataset,
    labeled_count: Option<usize>,
    guests: usize,
    seed: u64,
) -> Result<TrainingIds> {
    match labeled_count {
        None => Ok(TrainingIds {
            labeled: train.entity_ids().to_vec(),
            local: vec![train.entity_ids().to_vec(); guests],
        }),
        Some(l) => {
            let split = build_intersection_split(
                train,
                &IntersectionSpec {
                    labeled_count: l,
                    guests,
                    seed,
                },
            )?;
            Ok(TrainingIds {
                local: (0..guests).map(|g| split.local_ids(g)).collect(),
                labeled: split.aligned,
            })
        }
    }
}
