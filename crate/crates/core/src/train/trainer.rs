use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backward::{backward, clip_global_norm, Sequence};
use super::optim::{LrSchedule, RmsProp, DEFAULT_LR};
use crate::error::{Error, Result};
use crate::net::{cross_entropy_sum, Element, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub initial_lr: f64,
    /// Global-norm gradient clipping threshold; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 24,
            batch_size: 8,
            initial_lr: DEFAULT_LR,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::invalid("initial_lr", "must be positive"));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::invalid("clip_norm", "must be positive"));
        }
        Ok(())
    }
}

/// One line of the metrics log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_frame_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub frame_accuracy: f64,
    pub frames: u64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn evaluate<E: Element>(net: &Network<E>, data: &[Sequence<E>]) -> Result<Evaluation> {
    let k = net.config.num_classes;
    let mut confusion = vec![vec![0u64; k]; k];
    let mut total = 0.0;
    let mut frames = 0u64;
    let mut correct = 0u64;
    for seq in data {
        let logits = net.forward(&seq.frames, None)?;
        total += cross_entropy_sum(&logits, &seq.labels)?.0;
        for (z, &y) in logits.iter().zip(&seq.labels) {
            let p = argmax(z);
            confusion[y][p] += 1;
            correct += u64::from(p == y);
            frames += 1;
        }
    }
    if frames == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(Evaluation {
        loss: total / frames as f64,
        frame_accuracy: correct as f64 / frames as f64,
        frames,
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestModel<E> {
    pub epoch: usize,
    pub val_loss: f64,
    pub val_frame_accuracy: f64,
    pub net: Network<E>,
}

/// Everything needed to continue training from the end of an epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<E> {
    pub net: Network<E>,
    pub optimizer: RmsProp,
    pub schedule: LrSchedule,
    pub epochs_done: usize,
    pub history: Vec<EpochRecord>,
    pub best: Option<BestModel<E>>,
}

impl<E: Element> TrainState<E> {
    pub fn new(net: Network<E>, opts: &TrainOptions) -> Self {
        let n = net.flatten().len();
        TrainState {
            net,
            optimizer: RmsProp::new(n, opts.initial_lr),
            schedule: LrSchedule::new(opts.initial_lr),
            epochs_done: 0,
            history: Vec::new(),
            best: None,
        }
    }
}

/// SplitMix64 finalizer over a combination of stream identifiers.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs one epoch of minibatch RMSProp followed by validation and the
/// learning-rate update.
pub fn train_epoch<E: Element>(
    state: &mut TrainState<E>,
    train: &[Sequence<E>],
    valid: &[Sequence<E>],
    opts: &TrainOptions,
) -> Result<EpochRecord> {
    let epoch = state.epochs_done + 1;
    let lr = state.schedule.current_lr;
    state.optimizer.learning_rate = lr;

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(opts.seed, epoch as u64, 0)));

    let mut loss_sum = 0.0;
    let mut frame_sum = 0usize;
    for (b, chunk) in order.chunks(opts.batch_size).enumerate() {
        let batch: Vec<Sequence<E>> = chunk.iter().map(|&i| train[i].clone()).collect();
        let seeds: Vec<u64> = chunk
            .iter()
            .map(|&i| mix_seed(opts.seed, epoch as u64, (b as u64) << 32 | i as u64))
            .collect();
        let (loss, grads) = backward(&state.net, &batch, Some(&seeds))?;
        let frames: usize = batch.iter().map(Sequence::len).sum();
        loss_sum += loss * frames as f64;
        frame_sum += frames;

        let mut g = grads.flatten();
        if let Some(c) = opts.clip_norm {
            clip_global_norm(&mut g, c);
        }
        let mut theta = state.net.flatten();
        state.optimizer.step(&mut theta, &g)?;
        state.net.unflatten(&theta)?;
    }

    let val = evaluate(&state.net, valid)?;
    state.schedule.step(val.loss);
    state.epochs_done = epoch;
    let record = EpochRecord {
        epoch,
        lr,
        train_loss: loss_sum / frame_sum as f64,
        val_loss: val.loss,
        val_frame_accuracy: val.frame_accuracy,
    };
    if state.best.as_ref().map_or(true, |b| val.loss < b.val_loss) {
        state.best = Some(BestModel {
            epoch,
            val_loss: val.loss,
            val_frame_accuracy: val.frame_accuracy,
            net: state.net.clone(),
        });
    }
    state.history.push(record.clone());
    Ok(record)
}

/// Trains until `opts.epochs` epochs are complete, calling `on_epoch` after
/// each one. Starting from a restored state continues where it stopped.
pub fn train_loop<E: Element>(
    state: &mut TrainState<E>,
    train: &[Sequence<E>],
    valid: &[Sequence<E>],
    opts: &TrainOptions,
    mut on_epoch: impl FnMut(&TrainState<E>, &EpochRecord) -> Result<()>,
) -> Result<()> {
    opts.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::invalid("dataset", "train and valid splits must be nonempty"));
    }
    while state.epochs_done < opts.epochs {
        let record = train_epoch(state, train, valid, opts)?;
        on_epoch(state, &record)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{GateProduct, NetworkConfig};
    use crate::quat::Quaternion;
    use rand::Rng;

    fn toy(n: usize, seed: u64) -> Vec<Sequence<Quaternion>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let labels: Vec<usize> = (0..6).map(|_| rng.gen_range(0..2)).collect();
                let frames = labels
                    .iter()
                    .map(|&y| {
                        let s = if y == 1 { 1.0 } else { -1.0 };
                        vec![Quaternion::new(
                            s + 0.3 * rng.gen::<f64>(),
                            s,
                            s,
                            s + 0.3 * rng.gen::<f64>(),
                        )]
                    })
                    .collect();
                Sequence { frames, labels }
            })
            .collect()
    }

    fn cfg() -> NetworkConfig {
        NetworkConfig {
            num_layers: 1,
            hidden: 2,
            bidirectional: true,
            dropout: 0.2,
            num_classes: 2,
            gate_product: GateProduct::Componentwise,
        }
    }

    #[test]
    fn two_epochs_two_records() {
        let opts = TrainOptions {
            epochs: 2,
            batch_size: 4,
            ..TrainOptions::default()
        };
        let mut st = TrainState::new(Network::init(cfg(), 1, 0).unwrap(), &opts);
        let data = toy(10, 1);
        train_loop(&mut st, &data, &data[..3], &opts, |_, _| Ok(())).unwrap();
        assert_eq!(st.history.len(), 2);
        assert!(st.history.iter().all(|r| r.train_loss.is_finite() && r.val_loss.is_finite()));
    }

    #[test]
    fn deterministic_and_resumable() {
        let opts = TrainOptions {
            epochs: 3,
            batch_size: 3,
            initial_lr: 1e-2,
            ..TrainOptions::default()
        };
        let data = toy(9, 2);
        let run = || {
            let mut st = TrainState::new(Network::init(cfg(), 1, 4).unwrap(), &opts);
            train_loop(&mut st, &data, &data, &opts, |_, _| Ok(())).unwrap();
            st
        };
        let a = run();
        assert_eq!(a, run());

        let mut part = TrainState::new(Network::init(cfg(), 1, 4).unwrap(), &opts);
        let two = TrainOptions { epochs: 2, ..opts.clone() };
        train_loop(&mut part, &data, &data, &two, |_, _| Ok(())).unwrap();
        let mut resumed = part.clone();
        train_loop(&mut resumed, &data, &data, &opts, |_, _| Ok(())).unwrap();
        assert_eq!(resumed, a);
    }

    #[test]
    fn learns_separable_toy() {
        let opts = TrainOptions {
            epochs: 5,
            batch_size: 4,
            initial_lr: 1e-2,
            ..TrainOptions::default()
        };
        let data = toy(40, 3);
        let mut st = TrainState::new(Network::init(cfg(), 1, 1).unwrap(), &opts);
        train_loop(&mut st, &data, &data[..10], &opts, |_, _| Ok(())).unwrap();
        let losses: Vec<f64> = st.history.iter().map(|r| r.train_loss).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn rejects_bad_options() {
        let mut st = TrainState::new(Network::init(cfg(), 1, 0).unwrap(), &TrainOptions::default());
        let data = toy(2, 0);
        let bad = TrainOptions { batch_size: 0, ..TrainOptions::default() };
        assert!(train_loop(&mut st, &data, &data, &bad, |_, _| Ok(())).is_err());
        assert!(train_loop(&mut st, &[], &data, &TrainOptions::default(), |_, _| Ok(())).is_err());
    }

    #[test]
    fn confusion_sums_to_frames() {
        let net = Network::init(cfg(), 1, 0).unwrap();
        let data = toy(5, 9);
        let e = evaluate(&net, &data).unwrap();
        let total: u64 = e.confusion.iter().flatten().sum();
        assert_eq!(total, e.frames);
        assert_eq!(e.frames, 30);
    }
}
