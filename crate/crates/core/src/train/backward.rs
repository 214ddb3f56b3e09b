use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::net::{cross_entropy_sum, Element, Network};

/// One labelled sequence in a network's element type.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<E> {
    pub frames: Vec<Vec<E>>,
    pub labels: Vec<usize>,
}

impl<E> Sequence<E> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Forward and backward pass for one sequence.
///
/// Adds `scale · d(Σ_t loss_t)/dθ` into `grads` and returns the summed
/// (unscaled) frame loss.
pub fn sequence_gradients<E: Element>(
    net: &Network<E>,
    seq: &Sequence<E>,
    scale: f64,
    train_rng: Option<&mut ChaCha8Rng>,
    grads: &mut Network<E>,
) -> Result<f64> {
    let (logits, tape) = net.forward_with_tape(&seq.frames, train_rng)?;
    let (loss, _, mut dlogits) = cross_entropy_sum(&logits, &seq.labels)?;
    for g in dlogits.iter_mut().flatten() {
        *g *= scale;
    }
    net.backward(&tape, &dlogits, grads);
    Ok(loss)
}

/// Mean frame cross-entropy over a batch and its exact gradient with respect
/// to every real parameter.
///
/// Sequences are processed one at a time and need no padding; the mean runs
/// over all frames of the batch. When `dropout_seeds` is given, sequence `k`
/// uses a dropout generator seeded with `dropout_seeds[k]`.
pub fn backward<E: Element>(
    net: &Network<E>,
    batch: &[Sequence<E>],
    dropout_seeds: Option<&[u64]>,
) -> Result<(f64, Network<E>)> {
    let frames: usize = batch.iter().map(Sequence::len).sum();
    if frames == 0 {
        return Err(Error::EmptySequence);
    }
    let scale = 1.0 / frames as f64;
    let mut grads = net.zeros_like();
    let mut total = 0.0;
    for (k, seq) in batch.iter().enumerate() {
        let mut rng = dropout_seeds.map(|s| ChaCha8Rng::seed_from_u64(s[k]));
        total += sequence_gradients(net, seq, scale, rng.as_mut(), &mut grads)?;
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok((loss, grads))
}

/// Mean frame loss without gradients (dropout off).
pub fn batch_loss<E: Element>(net: &Network<E>, batch: &[Sequence<E>]) -> Result<f64> {
    let mut total = 0.0;
    let mut frames = 0;
    for seq in batch {
        let logits = net.forward(&seq.frames, None)?;
        total += cross_entropy_sum(&logits, &seq.labels)?.0;
        frames += seq.len();
    }
    if frames == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(total / frames as f64)
}

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}
