//! Recurrent cells against straight-line reference implementations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qlstm::net::{qlstm_cell_step, CellParams, CellState, GateProduct, Network, NetworkConfig, QLSTMParams};
use qlstm::quat::Quaternion;

type Q = [f64; 4];

/// Product in scalar/vector form: `(s₁s₂ − v₁·v₂, s₁v₂ + s₂v₁ + v₁×v₂)`.
fn qmul(x: Q, y: Q) -> Q {
    let (s1, v1) = (x[0], [x[1], x[2], x[3]]);
    let (s2, v2) = (y[0], [y[1], y[2], y[3]]);
    let dot = v1[0] * v2[0] + v1[1] * v2[1] + v1[2] * v2[2];
    let cross = [
        v1[1] * v2[2] - v1[2] * v2[1],
        v1[2] * v2[0] - v1[0] * v2[2],
        v1[0] * v2[1] - v1[1] * v2[0],
    ];
    [
        s1 * s2 - dot,
        s1 * v2[0] + s2 * v1[0] + cross[0],
        s1 * v2[1] + s2 * v1[1] + cross[1],
        s1 * v2[2] + s2 * v1[2] + cross[2],
    ]
}

fn qadd(x: Q, y: Q) -> Q {
    [x[0] + y[0], x[1] + y[1], x[2] + y[2], x[3] + y[3]]
}

fn qmap(x: Q, f: fn(f64) -> f64) -> Q {
    x.map(f)
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gate_mul(g: Q, v: Q, hamilton: bool) -> Q {
    if hamilton {
        qmul(g, v)
    } else {
        [g[0] * v[0], g[1] * v[1], g[2] * v[2], g[3] * v[3]]
    }
}

/// Straight-line QLSTM step. Weight arrays are `[hidden][cols]`.
struct RefCell {
    wx: [Vec<Vec<Q>>; 4],
    wh: [Vec<Vec<Q>>; 4],
    b: [Vec<Q>; 4],
}

impl RefCell {
    fn from(p: &QLSTMParams) -> Self {
        let rows = |w: &[Quaternion], cols: usize| -> Vec<Vec<Q>> {
            w.chunks(cols).map(|r| r.iter().map(|q| q.to_array()).collect()).collect()
        };
        RefCell {
            wx: std::array::from_fn(|g| rows(&p.w_x[g], p.input)),
            wh: std::array::from_fn(|g| rows(&p.w_h[g], p.hidden)),
            b: std::array::from_fn(|g| p.bias[g].iter().map(|q| q.to_array()).collect()),
        }
    }

    fn pre(&self, g: usize, k: usize, x: &[Q], h: &[Q]) -> Q {
        let mut acc = self.b[g][k];
        for (w, v) in self.wx[g][k].iter().zip(x) {
            acc = qadd(acc, qmul(*w, *v));
        }
        for (w, v) in self.wh[g][k].iter().zip(h) {
            acc = qadd(acc, qmul(*w, *v));
        }
        acc
    }

    fn step(&self, x: &[Q], h: &[Q], c: &[Q], hamilton: bool) -> (Vec<Q>, Vec<Q>) {
        let n = h.len();
        let mut h_new = Vec::with_capacity(n);
        let mut c_new = Vec::with_capacity(n);
        for k in 0..n {
            let f = qmap(self.pre(0, k, x, h), sig);
            let i = qmap(self.pre(1, k, x, h), sig);
            let cand = qmap(self.pre(2, k, x, h), f64::tanh);
            let o = qmap(self.pre(3, k, x, h), sig);
            let ck = qadd(gate_mul(f, c[k], hamilton), gate_mul(i, cand, hamilton));
            h_new.push(gate_mul(o, qmap(ck, f64::tanh), hamilton));
            c_new.push(ck);
        }
        (h_new, c_new)
    }
}

fn rand_q(rng: &mut ChaCha8Rng, s: f64) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-s..s),
        rng.gen_range(-s..s),
        rng.gen_range(-s..s),
        rng.gen_range(-s..s),
    )
}

fn random_qcell(rng: &mut ChaCha8Rng, input: usize, hidden: usize) -> QLSTMParams {
    let mut p: QLSTMParams = CellParams::init(rng, input, hidden);
    for b in p.bias.iter_mut() {
        b.iter_mut().for_each(|q| *q = rand_q(rng, 0.5));
    }
    p
}

fn qlstm_matches_reference(mode: GateProduct) {
    let (input, hidden, steps) = (2, 3, 5);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_qcell(&mut rng, input, hidden);
        let reference = RefCell::from(&p);
        let mut state = CellState::zeros(hidden);
        let (mut h, mut c) = (vec![[0.0; 4]; hidden], vec![[0.0; 4]; hidden]);
        for _ in 0..steps {
            let x: Vec<Quaternion> = (0..input).map(|_| rand_q(&mut rng, 1.5)).collect();
            let xr: Vec<Q> = x.iter().map(|q| q.to_array()).collect();
            state = qlstm_cell_step(&p, &x, &state, mode).unwrap();
            (h, c) = reference.step(&xr, &h, &c, mode == GateProduct::Hamilton);
            for (got, want) in state.h.iter().zip(&h).chain(state.c.iter().zip(&c)) {
                for (a, b) in got.to_array().iter().zip(want) {
                    assert!((a - b).abs() <= 1e-12, "seed {seed}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn qlstm_step_matches_straight_line_reference() {
    qlstm_matches_reference(GateProduct::Componentwise);
}

#[test]
fn qlstm_hamilton_gates_match_straight_line_reference() {
    qlstm_matches_reference(GateProduct::Hamilton);
}

#[test]
fn real_cell_matches_textbook_lstm() {
    let (input, hidden) = (4, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut p: CellParams<f64> = CellParams::init(&mut rng, input, hidden);
    for b in p.bias.iter_mut() {
        b.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
    }
    let mut state = CellState::zeros(hidden);
    let (mut h, mut c) = (vec![0.0; hidden], vec![0.0; hidden]);
    for _ in 0..8 {
        let x: Vec<f64> = (0..input).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cache = p.step(&x, &state, GateProduct::Componentwise).unwrap();
        let affine = |g: usize, k: usize| {
            p.bias[g][k]
                + (0..input).map(|j| p.w_x[g][k * input + j] * x[j]).sum::<f64>()
                + (0..hidden).map(|j| p.w_h[g][k * hidden + j] * h[j]).sum::<f64>()
        };
        let mut h_new = vec![0.0; hidden];
        for k in 0..hidden {
            let f = sig(affine(0, k));
            let i = sig(affine(1, k));
            let g = affine(2, k).tanh();
            let o = sig(affine(3, k));
            c[k] = f * c[k] + i * g;
            h_new[k] = o * c[k].tanh();
        }
        h = h_new;
        for k in 0..hidden {
            assert!((cache.h[k] - h[k]).abs() <= 1e-12);
            assert!((cache.c[k] - c[k]).abs() <= 1e-12);
        }
        state = CellState { h: cache.h, c: cache.c };
    }
}

#[test]
fn cell_rejects_wrong_input_width() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = random_qcell(&mut rng, 2, 3);
    let bad = vec![Quaternion::ONE; 3];
    assert!(qlstm_cell_step(&p, &bad, &CellState::zeros(3), GateProduct::Componentwise).is_err());
}

/// QLSTM whose weights, biases and inputs are real, next to the real LSTM
/// holding the same numbers.
fn real_twins(seed: u64, layers: usize, hidden: usize, input: usize) -> (Network<Quaternion>, Network<f64>) {
    let config = NetworkConfig {
        num_layers: layers,
        hidden,
        bidirectional: true,
        dropout: 0.0,
        num_classes: 3,
        gate_product: GateProduct::Componentwise,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Network<Quaternion> = Network::zeros(config.clone(), input).unwrap();
    let mut r: Network<f64> = Network::zeros(config, input).unwrap();
    for (ql, rl) in q.layers.iter_mut().zip(r.layers.iter_mut()) {
        let cells = std::iter::once((&mut ql.forward, &mut rl.forward)).chain(ql.backward.as_mut().zip(rl.backward.as_mut()));
        for (qc, rc) in cells {
            for g in 0..4 {
                let pairs = [
                    (&mut qc.w_x[g], &mut rc.w_x[g]),
                    (&mut qc.w_h[g], &mut rc.w_h[g]),
                    (&mut qc.bias[g], &mut rc.bias[g]),
                ];
                for (qs, rs) in pairs {
                    for (qv, rv) in qs.iter_mut().zip(rs.iter_mut()) {
                        *rv = rng.gen_range(-0.8..0.8);
                        *qv = Quaternion::real(*rv);
                    }
                }
            }
        }
    }
    for k in 0..r.head.classes {
        for j in 0..r.head.features {
            let w = rng.gen_range(-1.0..1.0);
            r.head.weight[k * r.head.features + j] = w;
            q.head.weight[k * q.head.features + 4 * j] = w;
            // Imaginary head columns see zeros; give them weight anyway.
            for m in 1..4 {
                q.head.weight[k * q.head.features + 4 * j + m] = rng.gen_range(-1.0..1.0);
            }
        }
        r.head.bias[k] = rng.gen_range(-0.5..0.5);
        q.head.bias[k] = r.head.bias[k];
    }
    (q, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn real_embedded_qlstm_follows_real_lstm(
        seed in any::<u64>(),
        layers in 1usize..3,
        hidden in 1usize..5,
        input in 1usize..4,
        xs in prop::collection::vec(-3.0f64..3.0, 40),
    ) {
        let (q, r) = real_twins(seed, layers, hidden, input);
        let xr: Vec<Vec<f64>> = (0..10).map(|t| (0..input).map(|i| xs[(t * input + i) % xs.len()]).collect()).collect();
        let xq: Vec<Vec<Quaternion>> = xr.iter().map(|f| f.iter().map(|&v| Quaternion::real(v)).collect()).collect();
        let (ql, qt) = q.forward_with_tape(&xq, None).unwrap();
        let (rl, rt) = r.forward_with_tape(&xr, None).unwrap();
        for l in 0..layers {
            for (qf, rf) in qt.layer_output(l).iter().zip(rt.layer_output(l)) {
                for (a, b) in qf.iter().zip(rf) {
                    prop_assert!((a.a - b).abs() <= 1e-10);
                    prop_assert!(a.b.abs() <= 1e-10 && a.c.abs() <= 1e-10 && a.d.abs() <= 1e-10);
                }
            }
        }
        for (a, b) in ql.iter().flatten().zip(rl.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
