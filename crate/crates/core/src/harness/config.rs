use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetConfig, Provenance};
use crate::error::{Error, Result};
use crate::net::{Network, NetworkConfig};
use crate::quat::Quaternion;
use crate::train::{TrainOptions, DEFAULT_LR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Qlstm,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Qlstm, ModelKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Qlstm => "qlstm",
            ModelKind::Lstm => "lstm",
        }
    }

    /// Input elements per frame for `features` filterbank channels.
    pub fn input_width(self, provenance: Provenance, features: usize) -> usize {
        match (self, provenance) {
            (ModelKind::Qlstm, _) => features,
            (ModelKind::Lstm, Provenance::FourMic) => 4 * features,
            (ModelKind::Lstm, _) => features,
        }
    }

    pub fn count_parameters(self, config: &NetworkConfig, input: usize) -> usize {
        match self {
            ModelKind::Qlstm => Network::<Quaternion>::count_parameters(config, input),
            ModelKind::Lstm => Network::<f64>::count_parameters(config, input),
        }
    }
}

fn default_epochs() -> usize {
    24
}
fn default_lr() -> f64 {
    DEFAULT_LR
}
fn default_batch() -> usize {
    8
}
fn default_clip() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub provenance: Provenance,
    /// Dataset directory written by `gen-data`.
    pub dataset: PathBuf,
    /// Output directory; the `--out` flag overrides it.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub initial_lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Global gradient-norm clip; 0 disables clipping.
    #[serde(default = "default_clip")]
    pub clip_norm: f64,
    pub network: NetworkConfig,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if !(self.clip_norm >= 0.0) {
            return Err(Error::invalid("clip_norm", "must be >= 0"));
        }
        self.options().validate()
    }

    pub fn options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.epochs,
            batch_size: self.batch_size,
            initial_lr: self.initial_lr,
            clip_norm: (self.clip_norm != 0.0).then_some(self.clip_norm),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LstmSizing {
    /// Use `lstm.hidden` for every cell.
    Fixed,
    /// Per cell, choose the LSTM width whose parameter count is closest to
    /// the QLSTM of the same cell.
    MatchQlstm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// One training run per seed and cell.
    pub seeds: Vec<u64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub initial_lr: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_clip")]
    pub clip_norm: f64,
    pub lstm_sizing: LstmSizing,
    pub qlstm: NetworkConfig,
    pub lstm: NetworkConfig,
}

impl AblationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::invalid("seeds", "need at least one seed"));
        }
        self.qlstm.validate()?;
        self.lstm.validate()?;
        self.cell_config(ModelKind::Qlstm, Provenance::FourMic, 1, 40).validate()
    }

    /// Training config of one cell and seed.
    pub fn cell_config(&self, model: ModelKind, provenance: Provenance, seed: u64, features: usize) -> TrainConfig {
        let network = match model {
            ModelKind::Qlstm => self.qlstm.clone(),
            ModelKind::Lstm => match self.lstm_sizing {
                LstmSizing::Fixed => self.lstm.clone(),
                LstmSizing::MatchQlstm => {
                    let target = ModelKind::Qlstm.count_parameters(&self.qlstm, features);
                    let input = ModelKind::Lstm.input_width(provenance, features);
                    NetworkConfig {
                        hidden: matched_hidden(&self.lstm, input, target),
                        ..self.lstm.clone()
                    }
                }
            },
        };
        TrainConfig {
            model,
            provenance,
            dataset: self.dataset.clone(),
            out: None,
            epochs: self.epochs,
            initial_lr: self.initial_lr,
            batch_size: self.batch_size,
            seed,
            clip_norm: self.clip_norm,
            network,
        }
    }
}

/// LSTM width whose parameter count is closest to `target`.
pub fn matched_hidden(base: &NetworkConfig, input: usize, target: usize) -> usize {
    let count = |h| ModelKind::Lstm.count_parameters(&NetworkConfig { hidden: h, ..base.clone() }, input);
    let mut best = 1;
    for h in 1..=8192 {
        let c = count(h);
        if c.abs_diff(target) < count(best).abs_diff(target) {
            best = h;
        }
        if c > target {
            break;
        }
    }
    best
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_dataset_config(path: &Path) -> Result<DatasetConfig> {
    let cfg: DatasetConfig = load_toml(path)?;
    cfg.validate()?;
    Ok(cfg)
}
