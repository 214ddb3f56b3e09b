use rand::Rng;

use crate::error::{Error, Result};
use crate::quat::QuaternionTensor;

/// Inverted-dropout scales: 0 with probability `rate`, else `1/(1-rate)`.
pub(crate) fn dropout_scales<R: Rng + ?Sized>(rng: &mut R, n: usize, rate: f64) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..n)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Drops whole quaternions: all four components of a dropped element are
/// zeroed together, survivors are rescaled. Identity when not training.
pub fn quaternion_dropout<R: Rng + ?Sized>(
    x: &QuaternionTensor,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<QuaternionTensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid("dropout rate", format!("{rate} not in [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let scales = dropout_scales(rng, x.len(), rate);
    let mut out = x.clone();
    for (i, s) in scales.iter().enumerate() {
        out.set(i, x.get(i).scale(*s));
    }
    Ok(out)
}
