//! Recurrent networks: the QLSTM, the real LSTM baseline, dropout and the
//! classification loss.
//!
//! Both models share one implementation generic over [`Element`]; the QLSTM
//! is `Network<Quaternion>` and the LSTM is `Network<f64>`.

mod cell;
mod dropout;
mod element;
mod loss;
mod stack;

use rand_chacha::ChaCha8Rng;

pub use cell::{CellParams, CellState, StepCache, GATES};
pub use dropout::quaternion_dropout;
pub use element::{Element, GateProduct};
pub use loss::{softmax, softmax_cross_entropy, CrossEntropy};
pub use stack::{derive_rng, Head, LayerParams, Network, NetworkConfig, Tape};

pub(crate) use loss::cross_entropy_sum;

use crate::error::{Error, Result};
use crate::quat::{Quaternion, QuaternionTensor};

pub type QLSTMParams = CellParams<Quaternion>;
pub type QLSTMState = CellState<Quaternion>;
pub type RealLSTMParams = CellParams<f64>;
pub type QLSTMNetwork = Network<Quaternion>;
pub type RealLSTMNetwork = Network<f64>;

/// One QLSTM time step.
pub fn qlstm_cell_step(
    p: &QLSTMParams,
    x_t: &[Quaternion],
    s: &QLSTMState,
    mode: GateProduct,
) -> Result<QLSTMState> {
    let cache = p.step(x_t, s, mode)?;
    if !cache.h.iter().chain(&cache.c).all(|q| q.is_finite()) {
        return Err(Error::NonFinite("qlstm state"));
    }
    Ok(CellState {
        h: cache.h,
        c: cache.c,
    })
}

/// Splits a `[T, I]` quaternion tensor into per-frame vectors.
pub fn quaternion_frames(x: &QuaternionTensor) -> Result<Vec<Vec<Quaternion>>> {
    let &[t, i] = x.shape() else {
        return Err(Error::shape("quaternion sequence", "[T, I]", format!("{:?}", x.shape())));
    };
    Ok((0..t)
        .map(|r| (0..i).map(|c| x.get(r * i + c)).collect())
        .collect())
}

/// Logits `[T][num_classes]` of a QLSTM stack on a `[T, I]` sequence.
pub fn qlstm_sequence_forward(
    net: &QLSTMNetwork,
    x: &QuaternionTensor,
    train_rng: Option<&mut ChaCha8Rng>,
) -> Result<Vec<Vec<f64>>> {
    net.forward(&quaternion_frames(x)?, train_rng)
}

pub fn real_lstm_forward(
    net: &RealLSTMNetwork,
    x: &[Vec<f64>],
    train_rng: Option<&mut ChaCha8Rng>,
) -> Result<Vec<Vec<f64>>> {
    net.forward(x, train_rng)
}
