//! Backpropagation through time, gradient verification, optimization.

mod backward;
pub mod gradcheck;
mod optim;
mod trainer;

pub use backward::{backward, batch_loss, clip_global_norm, sequence_gradients, Sequence};
pub use gradcheck::{grad_check, GradCheckPreset, GradCheckReport};
pub use optim::{LrSchedule, RmsProp, DEFAULT_DECAY, DEFAULT_EPS, DEFAULT_LR};
pub use trainer::{
    argmax, evaluate, mix_seed, train_epoch, train_loop, BestModel, EpochRecord, Evaluation,
    TrainOptions, TrainState,
};
