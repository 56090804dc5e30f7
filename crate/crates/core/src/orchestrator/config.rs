//! Experiment configuration: a TOML document with dotted-key overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::ArchConfig;
use crate::baselines::TimeoutPolicy;
use crate::data::CsvOptions;
use crate::error::{Error, Result};
use crate::faults::FaultConfig;
use crate::nn::OptimizerConfig;

/// Environment variable naming the MNIST directory when a config leaves
/// `dataset.dir` unset.
pub const DATA_DIR_ENV: &str = "DVFL_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "dvfl")]
    Dvfl,
    #[serde(rename = "splitnn", alias = "splitnn-wait")]
    SplitNnWait,
    #[serde(rename = "splitnn-skip")]
    SplitNnSkip,
    #[serde(rename = "splitnn-zeros")]
    SplitNnZeros,
}

impl Strategy {
    pub fn policy(self) -> Option<TimeoutPolicy> {
        match self {
            Strategy::Dvfl => None,
            Strategy::SplitNnWait => Some(TimeoutPolicy::Wait),
            Strategy::SplitNnSkip => Some(TimeoutPolicy::Skip),
            Strategy::SplitNnZeros => Some(TimeoutPolicy::Zeros),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Dvfl => "dvfl",
            Strategy::SplitNnWait => "splitnn",
            Strategy::SplitNnSkip => "splitnn-skip",
            Strategy::SplitNnZeros => "splitnn-zeros",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// IDX files in `dir`, or in `$DVFL_DATA_DIR` when unset.
    Mnist {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dir: Option<PathBuf>,
        /// Keep only the first `n` training samples.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        train_limit: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_limit: Option<usize>,
    },
    /// Numeric CSV files; features are min-max scaled with the training
    /// file's ranges.
    Csv {
        train: PathBuf,
        test: PathBuf,
        #[serde(default)]
        options: CsvOptions,
    },
    /// Noisy class prototypes in `[0, 1]^features`.
    Synthetic {
        train: usize,
        test: usize,
        features: usize,
        classes: usize,
        #[serde(default = "default_noise")]
        noise: f64,
        #[serde(default)]
        data_seed: u64,
    },
}

fn default_noise() -> f64 {
    0.35
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Mnist {
            dir: None,
            train_limit: None,
            test_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Epochs {
    pub guest: usize,
    pub host: usize,
    pub owner: usize,
    pub splitnn: usize,
}

impl Default for Epochs {
    fn default() -> Self {
        Self {
            guest: 20,
            host: 40,
            owner: 60,
            splitnn: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimSettings {
    pub guest: OptimizerConfig,
    pub host: OptimizerConfig,
    pub owner: OptimizerConfig,
    pub splitnn_guest: OptimizerConfig,
    pub splitnn_host: OptimizerConfig,
}

impl Default for OptimSettings {
    fn default() -> Self {
        let adam = OptimizerConfig::adam(1e-3, 1e-5);
        let sgd = OptimizerConfig::sgd(1e-2, 0.5);
        Self {
            guest: adam,
            host: adam,
            owner: sgd,
            splitnn_guest: sgd,
            splitnn_host: adam,
        }
    }
}

/// Validation-loss early stopping for the owner and the SplitNN host.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopping {
    /// Epochs without improvement before stopping; 0 disables stopping.
    pub patience: usize,
    /// Fraction of the labeled set held out for validation.
    pub holdout: f64,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        Self {
            patience: 10,
            holdout: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub seed: u64,
    pub guests: usize,
    pub hosts: usize,
    pub batch_size: usize,
    /// Guest epochs between communication epochs (`K`).
    pub comm_period: usize,
    /// Size of the labeled intersection; all training samples when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeled_count: Option<usize>,
    #[serde(default)]
    pub arch: ArchConfig,
    #[serde(default)]
    pub epochs: Epochs,
    #[serde(default)]
    pub faults: FaultConfig,
    #[serde(default)]
    pub optim: OptimSettings,
    #[serde(default)]
    pub early_stopping: EarlyStopping,
    #[serde(default)]
    pub dataset: DatasetConfig,
}

impl Default for ExperimentConfig {
    /// The MNIST setup: four guests, four hosts, `W_g = 320`, `W_h = 160`.
    fn default() -> Self {
        Self {
            strategy: Strategy::Dvfl,
            seed: 0,
            guests: 4,
            hosts: 4,
            batch_size: 64,
            comm_period: 1,
            labeled_count: None,
            arch: ArchConfig::default(),
            epochs: Epochs::default(),
            faults: FaultConfig::none(),
            optim: OptimSettings::default(),
            early_stopping: EarlyStopping::default(),
            dataset: DatasetConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("guests", self.guests),
            ("hosts", self.hosts),
            ("batch_size", self.batch_size),
            ("comm_period", self.comm_period),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{k} must be at least 1")));
            }
        }
        if self.labeled_count == Some(0) {
            return Err(Error::Config("labeled_count must be positive".into()));
        }
        if self.strategy != Strategy::Dvfl && self.hosts != 1 {
            return Err(Error::Config(format!(
                "split learning uses exactly one host, got hosts = {}",
                self.hosts
            )));
        }
        self.arch.validate(self.guests)?;
        self.faults.validate()?;
        for (k, o) in [
            ("optim.guest", self.optim.guest),
            ("optim.host", self.optim.host),
            ("optim.owner", self.optim.owner),
            ("optim.splitnn_guest", self.optim.splitnn_guest),
            ("optim.splitnn_host", self.optim.splitnn_host),
        ] {
            o.validate()
                .map_err(|e| Error::Config(format!("{k}: {e}")))?;
        }
        let h = self.early_stopping.holdout;
        if !(0.0..1.0).contains(&h) {
            return Err(Error::Config(format!(
                "early_stopping.holdout = {h} is outside [0, 1)"
            )));
        }
        if let DatasetConfig::Synthetic {
            train,
            test,
            features,
            classes,
            noise,
            ..
        } = self.dataset
        {
            if train == 0
                || test == 0
                || features == 0
                || classes < 2
                || noise.is_nan()
                || noise < 0.0
            {
                return Err(Error::Config(
                    "synthetic dataset needs positive sizes and >= 2 classes".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Applies `key=value` overrides with dotted keys, e.g.
    /// `faults.connection.down=0.3` or `strategy="splitnn-skip"`.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let pairs = overrides
            .iter()
            .map(|s| parse_override(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.with_values(&pairs)
    }

    /// Like `with_overrides` with already-parsed values.
    pub fn with_values(&self, pairs: &[(String, toml::Value)]) -> Result<Self> {
        let mut tree = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in pairs {
            set_dotted(&mut tree, k, v.clone())?;
        }
        let cfg: ExperimentConfig = tree
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Splits `key=value`. The value is read as a TOML literal, falling back to
/// a bare string (so `strategy=dvfl` works without quotes).
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(Error::Config(format!("override {s:?} has an empty key")));
    }
    Ok((k.to_string(), parse_value(v.trim())))
}

pub fn parse_value(v: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Wrap {
        v: toml::Value,
    }
    toml::from_str::<Wrap>(&format!("v = {v}"))
        .map(|w| w.v)
        .unwrap_or_else(|_| toml::Value::String(v.to_string()))
}

fn set_dotted(tree: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Config(format!("{key}: {} is not a table", parts[..i].join(".")))
        })?;
        if i + 1 == parts.len() {
            table.insert((*part).to_string(), value);
            return Ok(());
        }
        node = table
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}
