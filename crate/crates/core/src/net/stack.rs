//! Multi-layer (optionally bidirectional) recurrent stacks with a real
//! linear output head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::{CellParams, CellState, StepCache};
use super::dropout::dropout_scales;
use super::element::{flatten_elements, Element, GateProduct};
use crate::container::NamedArray;
use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, ParameterCount};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub num_layers: usize,
    /// Quaternion units for the QLSTM, real units for the LSTM.
    pub hidden: usize,
    pub bidirectional: bool,
    pub dropout: f64,
    pub num_classes: usize,
    #[serde(default)]
    pub gate_product: GateProduct,
}

impl NetworkConfig {
    /// Four bidirectional layers of 128 quaternion units, dropout 0.2.
    pub fn full_qlstm(num_classes: usize) -> Self {
        NetworkConfig {
            num_layers: 4,
            hidden: 128,
            bidirectional: true,
            dropout: 0.2,
            num_classes,
            gate_product: GateProduct::Componentwise,
        }
    }

    /// Four bidirectional layers of 290 real units, dropout 0.2.
    pub fn full_lstm(num_classes: usize) -> Self {
        NetworkConfig {
            hidden: 290,
            ..Self::full_qlstm(num_classes)
        }
    }

    pub fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::invalid("num_layers", "must be at least 1"));
        }
        if self.hidden == 0 {
            return Err(Error::invalid("hidden", "must be at least 1"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("num_classes", "must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid("dropout", format!("{} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<E> {
    pub forward: CellParams<E>,
    pub backward: Option<CellParams<E>>,
}

/// Real-valued linear classifier over the interleaved components of the top
/// layer's output.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub classes: usize,
    pub features: usize,
    /// `[classes × features]`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Head {
    fn zeros(classes: usize, features: usize) -> Self {
        Head {
            classes,
            features,
            weight: vec![0.0; classes * features],
            bias: vec![0.0; classes],
        }
    }

    fn apply(&self, z: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|k| {
                let row = &self.weight[k * self.features..(k + 1) * self.features];
                self.bias[k] + row.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<E> {
    pub config: NetworkConfig,
    /// Input elements per frame.
    pub input: usize,
    pub layers: Vec<LayerParams<E>>,
    pub head: Head,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Tape<E> {
    layers: Vec<LayerTape<E>>,
    head_input: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct LayerTape<E> {
    forward: Vec<StepCache<E>>,
    /// In scan order: entry `s` is frame `T-1-s`.
    backward: Vec<StepCache<E>>,
    /// Per-element dropout scale, `[T][dirs·H]`.
    mask: Option<Vec<Vec<f64>>>,
    output: Vec<Vec<E>>,
}

impl<E> Tape<E> {
    /// Output sequence of layer `l` (after dropout).
    pub fn layer_output(&self, l: usize) -> &[Vec<E>] {
        &self.layers[l].output
    }
}

impl<E: Element> Network<E> {
    pub fn zeros(config: NetworkConfig, input: usize) -> Result<Self> {
        config.validate()?;
        if input == 0 {
            return Err(Error::invalid("input", "must be at least 1"));
        }
        let dirs = config.directions();
        let layers = (0..config.num_layers)
            .map(|l| {
                let n_in = if l == 0 { input } else { dirs * config.hidden };
                LayerParams {
                    forward: CellParams::zeros(n_in, config.hidden),
                    backward: config
                        .bidirectional
                        .then(|| CellParams::zeros(n_in, config.hidden)),
                }
            })
            .collect();
        let head = Head::zeros(config.num_classes, dirs * config.hidden * E::WIDTH);
        Ok(Network {
            config,
            input,
            layers,
            head,
        })
    }

    /// Random initialization, deterministic for a given seed.
    pub fn init(config: NetworkConfig, input: usize, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(config, input)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let (n_in, h) = (layer.forward.input, layer.forward.hidden);
            layer.forward = CellParams::init(&mut rng, n_in, h);
            if let Some(b) = &mut layer.backward {
                *b = CellParams::init(&mut rng, n_in, h);
            }
        }
        net.head.weight = glorot_uniform(&mut rng, net.head.features, net.head.classes, net.head.weight.len());
        Ok(net)
    }

    /// Real parameter count for a configuration, without allocating.
    pub fn count_parameters(config: &NetworkConfig, input: usize) -> usize {
        let (h, dirs) = (config.hidden, config.directions());
        let cells: usize = (0..config.num_layers)
            .map(|l| {
                let n_in = if l == 0 { input } else { dirs * h };
                dirs * E::WIDTH * 4 * (h * h + h * n_in + h)
            })
            .sum();
        cells + config.num_classes * (dirs * h * E::WIDTH + 1)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone(), self.input).expect("config already validated")
    }

    fn check_input(&self, x: &[Vec<E>]) -> Result<()> {
        if x.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(bad) = x.iter().find(|f| f.len() != self.input) {
            return Err(Error::shape("network input frame", self.input, bad.len()));
        }
        Ok(())
    }

    /// Logits `[T][num_classes]`. Dropout is active iff `train_rng` is given.
    pub fn forward(&self, x: &[Vec<E>], train_rng: Option<&mut ChaCha8Rng>) -> Result<Vec<Vec<f64>>> {
        self.forward_with_tape(x, train_rng).map(|(logits, _)| logits)
    }

    pub fn forward_with_tape(
        &self,
        x: &[Vec<E>],
        mut train_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Vec<Vec<f64>>, Tape<E>)> {
        self.check_input(x)?;
        let t_len = x.len();
        let mode = self.config.gate_product;
        let rate = self.config.dropout;
        let mut tapes = Vec::with_capacity(self.layers.len());
        let mut current: Vec<Vec<E>> = x.to_vec();
        for layer in &self.layers {
            let forward = scan(&layer.forward, current.iter(), mode);
            let backward = layer
                .backward
                .as_ref()
                .map(|cell| scan(cell, current.iter().rev(), mode))
                .unwrap_or_default();
            let mut output: Vec<Vec<E>> = (0..t_len)
                .map(|t| {
                    let mut frame = forward[t].h.clone();
                    if !backward.is_empty() {
                        frame.extend_from_slice(&backward[t_len - 1 - t].h);
                    }
                    frame
                })
                .collect();
            let mask = match train_rng.as_deref_mut() {
                Some(rng) if rate > 0.0 => {
                    let mask: Vec<Vec<f64>> = output
                        .iter()
                        .map(|f| dropout_scales(rng, f.len(), rate))
                        .collect();
                    for (frame, m) in output.iter_mut().zip(&mask) {
                        for (v, s) in frame.iter_mut().zip(m) {
                            *v = v.scale(*s);
                        }
                    }
                    Some(mask)
                }
                _ => None,
            };
            current = output.clone();
            tapes.push(LayerTape {
                forward,
                backward,
                mask,
                output,
            });
        }
        let head_input: Vec<Vec<f64>> = current
            .iter()
            .map(|f| {
                let mut z = Vec::with_capacity(self.head.features);
                flatten_elements(f, &mut z);
                z
            })
            .collect();
        let logits = head_input.iter().map(|z| self.head.apply(z)).collect();
        Ok((
            logits,
            Tape {
                layers: tapes,
                head_input,
            },
        ))
    }

    /// Accumulates into `grads` the gradient of a loss whose derivative with
    /// respect to the logits is `dlogits`.
    pub fn backward(&self, tape: &Tape<E>, dlogits: &[Vec<f64>], grads: &mut Network<E>) {
        let t_len = dlogits.len();
        let width = E::WIDTH;
        let d = self.head.features;
        // Head.
        let mut d_current: Vec<Vec<E>> = Vec::with_capacity(t_len);
        for (z, dl) in tape.head_input.iter().zip(dlogits) {
            let mut dz = vec![0.0; d];
            for (k, &g) in dl.iter().enumerate() {
                grads.head.bias[k] += g;
                let row = k * d..(k + 1) * d;
                for ((gw, w), (dzj, zj)) in grads.head.weight[row.clone()]
                    .iter_mut()
                    .zip(&self.head.weight[row])
                    .zip(dz.iter_mut().zip(z))
                {
                    *gw += g * zj;
                    *dzj += g * w;
                }
            }
            let frame = dz
                .chunks(width)
                .map(|c| {
                    let mut e = E::ZERO;
                    for (k, v) in c.iter().enumerate() {
                        e.set_component(k, *v);
                    }
                    e
                })
                .collect();
            d_current.push(frame);
        }
        let mode = self.config.gate_product;
        let hidden = self.config.hidden;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let lt = &tape.layers[l];
            if let Some(mask) = &lt.mask {
                for (frame, m) in d_current.iter_mut().zip(mask) {
                    for (v, s) in frame.iter_mut().zip(m) {
                        *v = v.scale(*s);
                    }
                }
            }
            let n_in = layer.forward.input;
            let mut d_in: Vec<Vec<E>> = vec![vec![E::ZERO; n_in]; t_len];
            let gl = &mut grads.layers[l];
            // Forward direction: frames were visited 0..T.
            scan_backward(
                &layer.forward,
                &lt.forward,
                (0..t_len).rev().map(|t| (t, t)),
                &d_current,
                0..hidden,
                &mut d_in,
                mode,
                &mut gl.forward,
            );
            if let (Some(cell), Some(gcell)) = (&layer.backward, gl.backward.as_mut()) {
                scan_backward(
                    cell,
                    &lt.backward,
                    (0..t_len).rev().map(|s| (s, t_len - 1 - s)),
                    &d_current,
                    hidden..2 * hidden,
                    &mut d_in,
                    mode,
                    gcell,
                );
            }
            d_current = d_in;
        }
    }

    pub fn to_named_arrays(&self) -> Vec<NamedArray> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            out.extend(layer.forward.to_named_arrays(&format!("layer{l}.fwd")));
            if let Some(b) = &layer.backward {
                out.extend(b.to_named_arrays(&format!("layer{l}.bwd")));
            }
        }
        out.push(NamedArray::real(
            "head.weight",
            &[self.head.classes, self.head.features],
            self.head.weight.clone(),
        ));
        out.push(NamedArray::real("head.bias", &[self.head.classes], self.head.bias.clone()));
        out
    }

    pub fn load_named_arrays(&mut self, arrays: &[NamedArray]) -> Result<()> {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer.forward.load_named_arrays(&format!("layer{l}.fwd"), arrays)?;
            if let Some(b) = &mut layer.backward {
                b.load_named_arrays(&format!("layer{l}.bwd"), arrays)?;
            }
        }
        for (name, dst, len) in [
            ("head.weight", &mut self.head.weight, self.head.classes * self.head.features),
            ("head.bias", &mut self.head.bias, self.head.classes),
        ] {
            let a = arrays
                .iter()
                .find(|a| a.name == name)
                .ok_or_else(|| Error::Config(format!("missing array {name}")))?;
            if a.planes != 1 || a.data.len() != len {
                return Err(Error::shape("head array", len, a.data.len()));
            }
            dst.copy_from_slice(&a.data);
        }
        Ok(())
    }

    /// All real parameters in named-array order.
    pub fn flatten(&self) -> Vec<f64> {
        self.to_named_arrays().into_iter().flat_map(|a| a.data).collect()
    }

    pub fn unflatten(&mut self, values: &[f64]) -> Result<()> {
        let mut arrays = self.to_named_arrays();
        let total: usize = arrays.iter().map(|a| a.data.len()).sum();
        if total != values.len() {
            return Err(Error::shape("unflatten", total, values.len()));
        }
        let mut pos = 0;
        for a in &mut arrays {
            let n = a.data.len();
            a.data.copy_from_slice(&values[pos..pos + n]);
            pos += n;
        }
        self.load_named_arrays(&arrays)
    }
}

impl<E: Element> ParameterCount for Network<E> {
    fn parameter_count(&self) -> usize {
        let cells: usize = self
            .layers
            .iter()
            .map(|l| {
                l.forward.parameter_count() + l.backward.as_ref().map_or(0, |b| b.parameter_count())
            })
            .sum();
        cells + self.head.weight.len() + self.head.bias.len()
    }
}

fn scan<'a, E: Element>(
    cell: &CellParams<E>,
    frames: impl Iterator<Item = &'a Vec<E>>,
    mode: GateProduct,
) -> Vec<StepCache<E>> {
    let mut state = CellState::zeros(cell.hidden);
    let mut caches = Vec::new();
    for x in frames {
        let cache = cell.step_unchecked(x, &state.h, &state.c, mode);
        state.h.clone_from(&cache.h);
        state.c.clone_from(&cache.c);
        caches.push(cache);
    }
    caches
}

/// Walks `order` (pairs of cache index and frame index, latest step first)
/// carrying the recurrent gradients.
#[allow(clippy::too_many_arguments)]
fn scan_backward<E: Element>(
    cell: &CellParams<E>,
    caches: &[StepCache<E>],
    order: impl Iterator<Item = (usize, usize)>,
    d_out: &[Vec<E>],
    slot: std::ops::Range<usize>,
    d_in: &mut [Vec<E>],
    mode: GateProduct,
    grads: &mut CellParams<E>,
) {
    let h = cell.hidden;
    let mut dh_carry = vec![E::ZERO; h];
    let mut dc_carry = vec![E::ZERO; h];
    for (s, t) in order {
        let dh: Vec<E> = d_out[t][slot.clone()]
            .iter()
            .zip(&dh_carry)
            .map(|(a, b)| a.add(*b))
            .collect();
        let (dh_prev, dc_prev) = cell.step_backward(&caches[s], &dh, &dc_carry, mode, grads, &mut d_in[t]);
        dh_carry = dh_prev;
        dc_carry = dc_prev;
    }
}

/// Draws an independent generator for a sub-task from a parent seed.
pub fn derive_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
