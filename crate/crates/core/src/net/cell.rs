//! One recurrent cell: forward step and its exact reverse-mode step.

use rand::Rng;

use super::element::{from_named, to_named, Element, GateProduct};
use crate::container::NamedArray;
use crate::error::{Error, Result};
use crate::layers::sigmoid;

/// Gate order used by every per-gate array.
pub const GATES: [&str; 4] = ["f", "i", "C", "o"];
const F: usize = 0;
const I: usize = 1;
const G: usize = 2;
const O: usize = 3;

/// Weights and biases of one LSTM cell over element type `E`.
///
/// `w_x[g]` is `[hidden × input]`, `w_h[g]` is `[hidden × hidden]`, both
/// row-major; gate `g` follows [`GATES`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellParams<E> {
    pub input: usize,
    pub hidden: usize,
    pub w_x: [Vec<E>; 4],
    pub w_h: [Vec<E>; 4],
    pub bias: [Vec<E>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellState<E> {
    pub h: Vec<E>,
    pub c: Vec<E>,
}

impl<E: Element> CellState<E> {
    pub fn zeros(hidden: usize) -> Self {
        CellState {
            h: vec![E::ZERO; hidden],
            c: vec![E::ZERO; hidden],
        }
    }
}

/// Everything the reverse step needs from a forward step.
#[derive(Debug, Clone)]
pub struct StepCache<E> {
    pub x: Vec<E>,
    pub h_prev: Vec<E>,
    pub c_prev: Vec<E>,
    /// Post-activation gates f, i, C̃, o.
    pub gates: [Vec<E>; 4],
    pub c: Vec<E>,
    pub tanh_c: Vec<E>,
    pub h: Vec<E>,
}

#[inline]
fn matvec_acc<E: Element>(w: &[E], cols: usize, x: &[E], out: &mut [E]) {
    for (o, acc) in out.iter_mut().enumerate() {
        let row = &w[o * cols..(o + 1) * cols];
        let mut s = *acc;
        for (wi, xi) in row.iter().zip(x) {
            s = s.add(E::weight_mul(*wi, *xi));
        }
        *acc = s;
    }
}

#[inline]
fn matvec_backward<E: Element>(w: &[E], cols: usize, x: &[E], dy: &[E], dw: &mut [E], dx: &mut [E]) {
    for (o, &g) in dy.iter().enumerate() {
        let row = o * cols..(o + 1) * cols;
        for ((wi, dwi), (xi, dxi)) in w[row.clone()]
            .iter()
            .zip(dw[row].iter_mut())
            .zip(x.iter().zip(dx.iter_mut()))
        {
            let (gw, gx) = E::weight_mul_grad(*wi, *xi, g);
            *dwi = dwi.add(gw);
            *dxi = dxi.add(gx);
        }
    }
}

impl<E: Element> CellParams<E> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let mx = || vec![E::ZERO; hidden * input];
        let mh = || vec![E::ZERO; hidden * hidden];
        let b = || vec![E::ZERO; hidden];
        CellParams {
            input,
            hidden,
            w_x: [mx(), mx(), mx(), mx()],
            w_h: [mh(), mh(), mh(), mh()],
            bias: [b(), b(), b(), b()],
        }
    }

    /// Random weights (Glorot-scaled for the element type), zero biases.
    pub fn init<R: Rng + ?Sized>(rng: &mut R, input: usize, hidden: usize) -> Self {
        let mut p = Self::zeros(input, hidden);
        for g in 0..4 {
            p.w_x[g] = E::init_weights(rng, input, hidden);
            p.w_h[g] = E::init_weights(rng, hidden, hidden);
        }
        p
    }

    /// Real scalars: `4·(H·H + H·I + H)` elements of width `E::WIDTH`.
    pub fn parameter_count(&self) -> usize {
        E::WIDTH * 4 * (self.hidden * self.hidden + self.hidden * self.input + self.hidden)
    }

    pub fn step(&self, x: &[E], state: &CellState<E>, mode: GateProduct) -> Result<StepCache<E>> {
        if x.len() != self.input || state.h.len() != self.hidden || state.c.len() != self.hidden {
            return Err(Error::shape(
                "cell step",
                format!("input {} / hidden {}", self.input, self.hidden),
                format!("input {} / hidden {}", x.len(), state.h.len()),
            ));
        }
        Ok(self.step_unchecked(x, &state.h, &state.c, mode))
    }

    pub(crate) fn step_unchecked(&self, x: &[E], h_prev: &[E], c_prev: &[E], mode: GateProduct) -> StepCache<E> {
        let gates: [Vec<E>; 4] = std::array::from_fn(|g| {
            let mut pre = self.bias[g].clone();
            matvec_acc(&self.w_h[g], self.hidden, h_prev, &mut pre);
            matvec_acc(&self.w_x[g], self.input, x, &mut pre);
            if g == G {
                pre.iter().map(|v| v.map(f64::tanh)).collect()
            } else {
                pre.iter().map(|v| v.map(sigmoid)).collect()
            }
        });
        let c: Vec<E> = (0..self.hidden)
            .map(|k| {
                E::gate(gates[F][k], c_prev[k], mode).add(E::gate(gates[I][k], gates[G][k], mode))
            })
            .collect();
        let tanh_c: Vec<E> = c.iter().map(|v| v.map(f64::tanh)).collect();
        let h: Vec<E> = (0..self.hidden)
            .map(|k| E::gate(gates[O][k], tanh_c[k], mode))
            .collect();
        debug_assert!(
            h.iter().chain(c.iter()).all(|v| v.is_finite()),
            "non-finite recurrent state"
        );
        StepCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates,
            c,
            tanh_c,
            h,
        }
    }

    /// Reverse of [`step`](Self::step).
    ///
    /// `dh` is the loss gradient flowing into `h_t`, `dc_next` the gradient
    /// flowing into `C_t` from step `t+1`. Parameter gradients accumulate into
    /// `grads`; input gradients accumulate into `dx`. Returns the gradients
    /// for `h_{t-1}` and `C_{t-1}`.
    pub fn step_backward(
        &self,
        cache: &StepCache<E>,
        dh: &[E],
        dc_next: &[E],
        mode: GateProduct,
        grads: &mut CellParams<E>,
        dx: &mut [E],
    ) -> (Vec<E>, Vec<E>) {
        let n = self.hidden;
        let [gf, gi, gg, go] = &cache.gates;
        let mut dpre: [Vec<E>; 4] = std::array::from_fn(|_| vec![E::ZERO; n]);
        let mut dc_prev = vec![E::ZERO; n];
        for k in 0..n {
            let (d_o, d_tc) = E::gate_grad(go[k], cache.tanh_c[k], dh[k], mode);
            let dc = dc_next[k].add(d_tc.zip_map(cache.tanh_c[k], |d, t| d * (1.0 - t * t)));
            let (d_f, d_cp) = E::gate_grad(gf[k], cache.c_prev[k], dc, mode);
            let (d_i, d_g) = E::gate_grad(gi[k], gg[k], dc, mode);
            dc_prev[k] = d_cp;
            dpre[F][k] = d_f.zip_map(gf[k], |d, s| d * s * (1.0 - s));
            dpre[I][k] = d_i.zip_map(gi[k], |d, s| d * s * (1.0 - s));
            dpre[G][k] = d_g.zip_map(gg[k], |d, t| d * (1.0 - t * t));
            dpre[O][k] = d_o.zip_map(go[k], |d, s| d * s * (1.0 - s));
        }
        let mut dh_prev = vec![E::ZERO; n];
        for g in 0..4 {
            for (b, d) in grads.bias[g].iter_mut().zip(&dpre[g]) {
                *b = b.add(*d);
            }
            matvec_backward(&self.w_h[g], n, &cache.h_prev, &dpre[g], &mut grads.w_h[g], &mut dh_prev);
            matvec_backward(&self.w_x[g], self.input, &cache.x, &dpre[g], &mut grads.w_x[g], dx);
        }
        (dh_prev, dc_prev)
    }

    pub fn to_named_arrays(&self, prefix: &str) -> Vec<NamedArray> {
        let mut out = Vec::with_capacity(12);
        for (g, name) in GATES.iter().enumerate() {
            out.push(to_named(format!("{prefix}.W_{name}x"), &[self.hidden, self.input], &self.w_x[g]));
            out.push(to_named(format!("{prefix}.W_{name}h"), &[self.hidden, self.hidden], &self.w_h[g]));
            out.push(to_named(format!("{prefix}.b_{name}"), &[self.hidden], &self.bias[g]));
        }
        out
    }

    pub fn load_named_arrays(&mut self, prefix: &str, arrays: &[NamedArray]) -> Result<()> {
        let find = |name: String| {
            arrays
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| Error::Config(format!("missing array {name}")))
        };
        for (g, name) in GATES.iter().enumerate() {
            self.w_x[g] = from_named(find(format!("{prefix}.W_{name}x"))?, &[self.hidden, self.input])?;
            self.w_h[g] = from_named(find(format!("{prefix}.W_{name}h"))?, &[self.hidden, self.hidden])?;
            self.bias[g] = from_named(find(format!("{prefix}.b_{name}"))?, &[self.hidden])?;
        }
        Ok(())
    }
}
