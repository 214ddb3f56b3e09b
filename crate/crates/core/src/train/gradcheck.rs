//! Central finite-difference verification of analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::backward::{backward, batch_loss, Sequence};
use crate::error::Result;
use crate::net::{Element, GateProduct, Network, NetworkConfig};
use crate::quat::Quaternion;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Named array holding the worst entry.
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
    pub pass: bool,
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central differences of the mean batch loss for every real parameter.
pub fn numeric_gradient<E: Element>(net: &Network<E>, batch: &[Sequence<E>], step: f64) -> Result<Vec<f64>> {
    let base = net.flatten();
    let mut probe = net.clone();
    let mut theta = base.clone();
    let mut out = Vec::with_capacity(base.len());
    for j in 0..base.len() {
        theta[j] = base[j] + step;
        probe.unflatten(&theta)?;
        let plus = batch_loss(&probe, batch)?;
        theta[j] = base[j] - step;
        probe.unflatten(&theta)?;
        let minus = batch_loss(&probe, batch)?;
        theta[j] = base[j];
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

/// Compares a supplied analytic gradient (flattened in [`Network::flatten`]
/// order) against central differences.
pub fn check_gradient<E: Element>(
    net: &Network<E>,
    batch: &[Sequence<E>],
    analytic: &[f64],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let numeric = numeric_gradient(net, batch, step)?;
    let names: Vec<(String, usize)> = net
        .to_named_arrays()
        .into_iter()
        .map(|a| (a.name, a.data.len()))
        .collect();
    let mut worst = (0.0f64, 0usize);
    for (j, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let e = relative_error(*a, *n);
        if e > worst.0 || e.is_nan() {
            worst = (e, j);
        }
    }
    let mut offset = 0;
    let mut worst_param = String::new();
    for (name, len) in names {
        if worst.1 < offset + len {
            worst_param = name;
            break;
        }
        offset += len;
    }
    Ok(GradCheckReport {
        max_rel_error: worst.0,
        worst_param,
        worst_index: worst.1,
        checked: numeric.len(),
        pass: worst.0 <= tolerance,
    })
}

/// Full check: analytic gradients from [`backward`] (dropout off) against
/// central differences.
pub fn grad_check<E: Element>(
    net: &Network<E>,
    batch: &[Sequence<E>],
    tolerance: f64,
    step: f64,
) -> Result<GradCheckReport> {
    let (_, grads) = backward(net, batch, None)?;
    check_gradient(net, batch, &grads.flatten(), step, tolerance)
}

/// Small networks whose every parameter can be differenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradCheckPreset {
    /// QLSTM with 2 input quaternions, 3 hidden quaternions, 5 frames, 3 classes.
    TinyQlstm,
    /// Real LSTM with 8 inputs, 3 hidden units, 5 frames, 3 classes.
    TinyLstm,
}

impl std::str::FromStr for GradCheckPreset {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny-qlstm" => Ok(GradCheckPreset::TinyQlstm),
            "tiny-lstm" => Ok(GradCheckPreset::TinyLstm),
            other => Err(crate::error::Error::invalid(
                "preset",
                format!("unknown preset {other:?} (expected tiny-qlstm or tiny-lstm)"),
            )),
        }
    }
}

pub fn tiny_config(gate_product: GateProduct) -> NetworkConfig {
    NetworkConfig {
        num_layers: 1,
        hidden: 3,
        bidirectional: true,
        dropout: 0.0,
        num_classes: 3,
        gate_product,
    }
}

/// Tiny QLSTM (I=2, H=3, T=5, K=3) and one random sequence.
pub fn tiny_qlstm(seed: u64, gate_product: GateProduct) -> (Network<Quaternion>, Vec<Sequence<Quaternion>>) {
    let net = Network::init(tiny_config(gate_product), 2, seed).expect("valid preset");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let frames = (0..5)
        .map(|_| {
            (0..2)
                .map(|_| {
                    Quaternion::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                })
                .collect()
        })
        .collect();
    let labels = (0..5).map(|_| rng.gen_range(0..3)).collect();
    (net, vec![Sequence { frames, labels }])
}

/// Tiny real LSTM over the same input width (8 reals), H=3, T=5, K=3.
pub fn tiny_lstm(seed: u64) -> (Network<f64>, Vec<Sequence<f64>>) {
    let net = Network::init(tiny_config(GateProduct::Componentwise), 8, seed).expect("valid preset");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let frames = (0..5)
        .map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels = (0..5).map(|_| rng.gen_range(0..3)).collect();
    (net, vec![Sequence { frames, labels }])
}

pub fn run_preset(preset: GradCheckPreset, seed: u64, tolerance: f64, step: f64) -> Result<GradCheckReport> {
    match preset {
        GradCheckPreset::TinyQlstm => {
            let (net, batch) = tiny_qlstm(seed, GateProduct::Componentwise);
            grad_check(&net, &batch, tolerance, step)
        }
        GradCheckPreset::TinyLstm => {
            let (net, batch) = tiny_lstm(seed);
            grad_check(&net, &batch, tolerance, step)
        }
    }
}
