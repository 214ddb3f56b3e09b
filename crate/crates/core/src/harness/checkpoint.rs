//! Checkpoints: a named-array container whose header is JSON.
//!
//! `best.ckpt` holds the parameters with the lowest validation loss.
//! `state.ckpt` additionally holds the optimizer accumulators
//! (`optim.acc`), the best parameters (prefixed `best/`) and, in the header,
//! the schedule and epoch history, which is everything needed to resume.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ModelKind, TrainConfig};
use crate::container::{Container, NamedArray};
use crate::data::{Normalizer, Provenance};
use crate::error::{Error, Result};
use crate::net::{Element, Network, NetworkConfig};
use crate::train::{BestModel, EpochRecord, LrSchedule, RmsProp, TrainState};

pub const FORMAT: &str = "qlstm-checkpoint/1";
const BEST_PREFIX: &str = "best/";
const ACC: &str = "optim.acc";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub model: ModelKind,
    pub provenance: Provenance,
    pub input: usize,
    pub network: NetworkConfig,
    pub normalizer: Normalizer,
    pub epoch: usize,
    pub val_loss: f64,
    pub val_frame_accuracy: f64,
    /// Present in resumable checkpoints only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume: Option<ResumeState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResumeState {
    pub train_config: TrainConfig,
    pub epochs_done: usize,
    pub schedule: LrSchedule,
    pub decay: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_val_loss: f64,
    pub best_val_frame_accuracy: f64,
}

/// Writes the best parameters of `state`.
pub fn save_best<E: Element>(
    path: &Path,
    model: ModelKind,
    provenance: Provenance,
    normalizer: &Normalizer,
    best: &BestModel<E>,
) -> Result<()> {
    let header = CheckpointHeader {
        format: FORMAT.into(),
        model,
        provenance,
        input: best.net.input,
        network: best.net.config.clone(),
        normalizer: normalizer.clone(),
        epoch: best.epoch,
        val_loss: best.val_loss,
        val_frame_accuracy: best.val_frame_accuracy,
        resume: None,
    };
    write(path, &header, best.net.to_named_arrays())
}

pub fn save_state<E: Element>(
    path: &Path,
    cfg: &TrainConfig,
    normalizer: &Normalizer,
    state: &TrainState<E>,
) -> Result<()> {
    let last = state.history.last();
    let header = CheckpointHeader {
        format: FORMAT.into(),
        model: cfg.model,
        provenance: cfg.provenance,
        input: state.net.input,
        network: state.net.config.clone(),
        normalizer: normalizer.clone(),
        epoch: state.epochs_done,
        val_loss: last.map_or(f64::NAN, |r| r.val_loss),
        val_frame_accuracy: last.map_or(f64::NAN, |r| r.val_frame_accuracy),
        resume: Some(ResumeState {
            train_config: cfg.clone(),
            epochs_done: state.epochs_done,
            schedule: state.schedule.clone(),
            decay: state.optimizer.decay,
            epsilon: state.optimizer.epsilon,
            learning_rate: state.optimizer.learning_rate,
            history: state.history.clone(),
            best_epoch: state.best.as_ref().map(|b| b.epoch),
            best_val_loss: state.best.as_ref().map_or(f64::NAN, |b| b.val_loss),
            best_val_frame_accuracy: state.best.as_ref().map_or(f64::NAN, |b| b.val_frame_accuracy),
        }),
    };
    let mut arrays = state.net.to_named_arrays();
    arrays.push(NamedArray::real(ACC, &[state.optimizer.accumulators.len()], state.optimizer.accumulators.clone()));
    if let Some(b) = &state.best {
        arrays.extend(b.net.to_named_arrays().into_iter().map(|mut a| {
            a.name = format!("{BEST_PREFIX}{}", a.name);
            a
        }));
    }
    write(path, &header, arrays)
}

fn write(path: &Path, header: &CheckpointHeader, arrays: Vec<NamedArray>) -> Result<()> {
    let header = serde_json::to_string(header).map_err(|e| Error::format(path, e.to_string()))?;
    Container { header, arrays }.write(path)
}

pub fn read_header(path: &Path) -> Result<(CheckpointHeader, Container)> {
    let c = Container::read(path)?;
    let h: CheckpointHeader = serde_json::from_str(&c.header).map_err(|e| Error::format(path, e.to_string()))?;
    if h.format != FORMAT {
        return Err(Error::format(path, format!("unsupported checkpoint format {:?}", h.format)));
    }
    Ok((h, c))
}

fn network_from<E: Element>(h: &CheckpointHeader, arrays: &[NamedArray]) -> Result<Network<E>> {
    let mut net = Network::zeros(h.network.clone(), h.input)?;
    net.load_named_arrays(arrays)?;
    Ok(net)
}

/// Parameters stored in a checkpoint.
pub fn load_network<E: Element>(path: &Path) -> Result<(CheckpointHeader, Network<E>)> {
    let (h, c) = read_header(path)?;
    let net = network_from(&h, &c.arrays)?;
    Ok((h, net))
}

/// Full training state from a resumable checkpoint.
pub fn load_state<E: Element>(path: &Path) -> Result<(CheckpointHeader, TrainState<E>)> {
    let (h, c) = read_header(path)?;
    let r = h
        .resume
        .clone()
        .ok_or_else(|| Error::format(path, "checkpoint is not resumable"))?;
    let net: Network<E> = network_from(&h, &c.arrays)?;
    let acc = c.get(ACC).ok_or_else(|| Error::format(path, "missing optimizer state"))?;
    let optimizer = RmsProp {
        decay: r.decay,
        epsilon: r.epsilon,
        learning_rate: r.learning_rate,
        accumulators: acc.data.clone(),
    };
    if optimizer.accumulators.len() != net.flatten().len() {
        return Err(Error::format(path, "optimizer state does not match parameters"));
    }
    let best = match r.best_epoch {
        None => None,
        Some(epoch) => {
            let arrays: Vec<NamedArray> = c
                .arrays
                .iter()
                .filter_map(|a| {
                    a.name.strip_prefix(BEST_PREFIX).map(|n| NamedArray { name: n.to_string(), ..a.clone() })
                })
                .collect();
            Some(BestModel {
                epoch,
                val_loss: r.best_val_loss,
                val_frame_accuracy: r.best_val_frame_accuracy,
                net: network_from(&h, &arrays)?,
            })
        }
    };
    let state = TrainState {
        net,
        optimizer,
        schedule: r.schedule,
        epochs_done: r.epochs_done,
        history: r.history,
        best,
    };
    Ok((h, state))
}
