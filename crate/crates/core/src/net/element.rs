use std::fmt::Debug;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::container::NamedArray;
use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, init_sigma, sample_polar_weight, InitCriterion};
use crate::quat::{hamilton, Quaternion};

/// How gate activations multiply the values they gate (`f ⊙ C`, `i ⊙ C̃`,
/// `o ⊙ tanh C`). Irrelevant for real networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateProduct {
    #[default]
    Componentwise,
    Hamilton,
}

/// Scalar type of a recurrent network: `f64` for the real LSTM, [`Quaternion`]
/// for the QLSTM.
///
/// `weight_mul` is the product used inside affine maps; its gradient follows
/// from the left-multiplication matrix being orthogonal up to scale, giving
/// `dW = dy ⊗ x*` and `dx = W* ⊗ dy`.
pub trait Element: Copy + Debug + PartialEq + Default + Send + Sync + 'static {
    /// Real scalars per element.
    const WIDTH: usize;
    const ZERO: Self;

    fn add(self, rhs: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn map(self, f: impl Fn(f64) -> f64) -> Self;
    fn zip_map(self, rhs: Self, f: impl Fn(f64, f64) -> f64) -> Self;
    fn is_finite(self) -> bool;

    fn weight_mul(w: Self, x: Self) -> Self;
    /// Returns `(dw, dx)` for `y = w·x` given `dy`.
    fn weight_mul_grad(w: Self, x: Self, dy: Self) -> (Self, Self);

    fn gate(g: Self, v: Self, mode: GateProduct) -> Self;
    /// Returns `(dg, dv)`.
    fn gate_grad(g: Self, v: Self, dy: Self, mode: GateProduct) -> (Self, Self);

    fn component(self, k: usize) -> f64;
    fn set_component(&mut self, k: usize, v: f64);

    /// Initial weights for a `[fan_out, fan_in]` matrix.
    fn init_weights<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Vec<Self>;
}

impl Element for f64 {
    const WIDTH: usize = 1;
    const ZERO: Self = 0.0;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        f(self)
    }
    #[inline]
    fn zip_map(self, rhs: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        f(self, rhs)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn weight_mul(w: Self, x: Self) -> Self {
        w * x
    }
    #[inline]
    fn weight_mul_grad(w: Self, x: Self, dy: Self) -> (Self, Self) {
        (dy * x, w * dy)
    }
    #[inline]
    fn gate(g: Self, v: Self, _mode: GateProduct) -> Self {
        g * v
    }
    #[inline]
    fn gate_grad(g: Self, v: Self, dy: Self, _mode: GateProduct) -> (Self, Self) {
        (dy * v, g * dy)
    }
    #[inline]
    fn component(self, _k: usize) -> f64 {
        self
    }
    #[inline]
    fn set_component(&mut self, _k: usize, v: f64) {
        *self = v;
    }
    fn init_weights<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Vec<Self> {
        glorot_uniform(rng, fan_in, fan_out, fan_in * fan_out)
    }
}

impl Element for Quaternion {
    const WIDTH: usize = 4;
    const ZERO: Self = Quaternion::ZERO;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        Quaternion::scale(self, s)
    }
    #[inline]
    fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Quaternion::map(self, f)
    }
    #[inline]
    fn zip_map(self, rhs: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Quaternion::zip_map(self, rhs, f)
    }
    #[inline]
    fn is_finite(self) -> bool {
        Quaternion::is_finite(self)
    }
    #[inline]
    fn weight_mul(w: Self, x: Self) -> Self {
        hamilton(w, x)
    }
    #[inline]
    fn weight_mul_grad(w: Self, x: Self, dy: Self) -> (Self, Self) {
        (hamilton(dy, x.conj()), hamilton(w.conj(), dy))
    }
    #[inline]
    fn gate(g: Self, v: Self, mode: GateProduct) -> Self {
        match mode {
            GateProduct::Componentwise => g.zip_map(v, |a, b| a * b),
            GateProduct::Hamilton => hamilton(g, v),
        }
    }
    #[inline]
    fn gate_grad(g: Self, v: Self, dy: Self, mode: GateProduct) -> (Self, Self) {
        match mode {
            GateProduct::Componentwise => (dy.zip_map(v, |a, b| a * b), dy.zip_map(g, |a, b| a * b)),
            GateProduct::Hamilton => (hamilton(dy, v.conj()), hamilton(g.conj(), dy)),
        }
    }
    #[inline]
    fn component(self, k: usize) -> f64 {
        self.to_array()[k]
    }
    #[inline]
    fn set_component(&mut self, k: usize, v: f64) {
        match k {
            0 => self.a = v,
            1 => self.b = v,
            2 => self.c = v,
            _ => self.d = v,
        }
    }
    fn init_weights<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Vec<Self> {
        let sigma = init_sigma(InitCriterion::Glorot, fan_in, fan_out);
        (0..fan_in * fan_out)
            .map(|_| sample_polar_weight(rng, sigma))
            .collect()
    }
}

/// Serializes elements plane-major: component 0 of every element, then
/// component 1, and so on.
pub fn to_named<E: Element>(name: String, shape: &[usize], values: &[E]) -> NamedArray {
    let n = values.len();
    let mut data = vec![0.0; n * E::WIDTH];
    for (i, v) in values.iter().enumerate() {
        for k in 0..E::WIDTH {
            data[k * n + i] = v.component(k);
        }
    }
    NamedArray {
        name,
        shape: shape.to_vec(),
        planes: E::WIDTH,
        data,
    }
}

pub fn from_named<E: Element>(array: &NamedArray, shape: &[usize]) -> Result<Vec<E>> {
    if array.planes != E::WIDTH || array.shape != shape {
        return Err(Error::shape(
            "checkpoint array",
            format!("{} with {} planes, shape {:?}", array.name, E::WIDTH, shape),
            format!("{} planes, shape {:?}", array.planes, array.shape),
        ));
    }
    let n = array.numel();
    Ok((0..n)
        .map(|i| {
            let mut e = E::ZERO;
            for k in 0..E::WIDTH {
                e.set_component(k, array.data[k * n + i]);
            }
            e
        })
        .collect())
}

/// Interleaved reals of a slice of elements.
pub fn flatten_elements<E: Element>(values: &[E], out: &mut Vec<f64>) {
    for v in values {
        for k in 0..E::WIDTH {
            out.push(v.component(k));
        }
    }
}
