use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LR: f64 = 1.6e-3;
pub const DEFAULT_DECAY: f64 = 0.99;
pub const DEFAULT_EPS: f64 = 1e-8;

/// RMSProp without momentum or weight decay.
///
/// `acc ← decay·acc + (1−decay)·g²`, `θ ← θ − lr·g / (√acc + ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub decay: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub accumulators: Vec<f64>,
}

impl RmsProp {
    pub fn new(n: usize, learning_rate: f64) -> Self {
        RmsProp {
            decay: DEFAULT_DECAY,
            epsilon: DEFAULT_EPS,
            learning_rate,
            accumulators: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.accumulators.len() || grads.len() != params.len() {
            return Err(Error::shape(
                "rmsprop step",
                self.accumulators.len(),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        let (d, lr, eps) = (self.decay, self.learning_rate, self.epsilon);
        for ((p, g), acc) in params.iter_mut().zip(grads).zip(&mut self.accumulators) {
            *acc = d * *acc + (1.0 - d) * g * g;
            *p -= lr * g / (acc.sqrt() + eps);
        }
        Ok(())
    }
}

/// Halves the learning rate whenever the validation loss goes up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial_lr: f64,
    pub current_lr: f64,
    pub prev_val_loss: Option<f64>,
    pub halvings: u32,
}

impl LrSchedule {
    pub fn new(initial_lr: f64) -> Self {
        LrSchedule {
            initial_lr,
            current_lr: initial_lr,
            prev_val_loss: None,
            halvings: 0,
        }
    }

    pub fn step(&mut self, val_loss: f64) {
        if matches!(self.prev_val_loss, Some(prev) if val_loss > prev) {
            self.halvings += 1;
            self.current_lr = self.initial_lr / 2f64.powi(self.halvings as i32);
        }
        self.prev_val_loss = Some(val_loss);
    }
}
