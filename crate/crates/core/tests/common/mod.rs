#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dvfl::orchestrator::{load_bundle, DataBundle, DatasetConfig, ExperimentConfig};

/// Two guests, narrow networks, a few hundred synthetic samples: a full
/// run takes milliseconds.
pub const TINY: [&str; 12] = [
    "guests=2",
    "hosts=2",
    "batch_size=16",
    "arch.guest_width=8",
    "arch.guest_hidden=12",
    "arch.host_width=6",
    "arch.owner_hidden=5",
    "epochs.guest=3",
    "epochs.host=5",
    "epochs.owner=6",
    "epochs.splitnn=6",
    "early_stopping.patience=0",
];

pub fn tiny_dataset() -> DatasetConfig {
    DatasetConfig::Synthetic {
        train: 192,
        test: 90,
        features: 16,
        classes: 3,
        noise: 0.3,
        data_seed: 5,
    }
}

pub fn tiny<S: AsRef<str>>(extra: &[S]) -> ExperimentConfig {
    let cfg = ExperimentConfig {
        dataset: tiny_dataset(),
        ..Default::default()
    };
    let mut set: Vec<String> = TINY.iter().map(|s| s.to_string()).collect();
    set.extend(extra.iter().map(|s| s.as_ref().to_string()));
    cfg.with_overrides(&set).unwrap()
}

pub fn tiny_bundle() -> DataBundle {
    load_bundle(&tiny_dataset()).unwrap()
}

pub fn write_tiny_toml(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.toml");
    std::fs::write(&path, tiny::<&str>(&[]).to_toml_string().unwrap()).unwrap();
    path
}
