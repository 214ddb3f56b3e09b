//! Quaternion LSTM networks for multi-channel sequence classification.
//!
//! The crate is layered bottom-up:
//!
//! - [`quat`]: quaternion numbers, Hamilton products and batched tensors.
//! - [`layers`]: quaternion dense layers, split activations, polar init.
//! - [`net`]: QLSTM and real LSTM stacks, dropout, softmax cross-entropy.
//! - [`train`]: backpropagation through time, gradient checking, RMSProp,
//!   learning-rate schedule and the training loop.
//! - [`data`]: synthetic four-microphone scenes, filterbank features,
//!   quaternion packing, delay-and-sum beamforming and dataset storage.
//! - [`harness`]: experiment configs and the commands behind the `qlstm`
//!   binary.

pub mod container;
pub mod data;
pub mod error;
pub mod harness;
pub mod layers;
pub mod net;
pub mod quat;
pub mod train;

pub use error::{Error, Result};
pub use quat::{hamilton, Quaternion, QuaternionTensor};
