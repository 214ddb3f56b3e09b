//! Quaternion dense layers, split activations and polar-form initialization.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::container::NamedArray;
use crate::error::{Error, Result};
use crate::quat::{qmat_vec, Quaternion, QuaternionTensor};

/// Number of real scalars held by a parameter container.
pub trait ParameterCount {
    fn parameter_count(&self) -> usize;
}

/// Real activation applied independently to each quaternion component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitActivation {
    Sigmoid,
    Tanh,
    Relu,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl SplitActivation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            SplitActivation::Sigmoid => sigmoid(x),
            SplitActivation::Tanh => x.tanh(),
            SplitActivation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            SplitActivation::Sigmoid => y * (1.0 - y),
            SplitActivation::Tanh => 1.0 - y * y,
            SplitActivation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn split_activation(kind: SplitActivation, q: &QuaternionTensor) -> QuaternionTensor {
    q.map_components(|v| kind.apply(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitCriterion {
    Glorot,
    He,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitSpec {
    pub criterion: InitCriterion,
    pub seed: u64,
    /// Fan sizes counted in quaternions.
    pub fan_in: usize,
    pub fan_out: usize,
}

impl InitSpec {
    /// Target standard deviation of a single real weight component.
    pub fn sigma(&self) -> f64 {
        init_sigma(self.criterion, self.fan_in, self.fan_out)
    }
}

pub fn init_sigma(criterion: InitCriterion, fan_in: usize, fan_out: usize) -> f64 {
    match criterion {
        InitCriterion::Glorot => 1.0 / (2.0 * (fan_in + fan_out) as f64).sqrt(),
        InitCriterion::He => 1.0 / (2.0 * fan_in as f64).sqrt(),
    }
}

/// Draws one weight in polar form: `|w|·(cos θ + sin θ·u)` with `θ ~ U(-π, π)`
/// and `u` uniform on the unit 2-sphere of imaginary directions.
///
/// The modulus is Rayleigh with scale `√2·σ`, so `E|w|² = 4σ²` and the
/// per-component variance pooled over a, b, c, d equals `σ²`.
pub fn sample_polar_weight<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Quaternion {
    let scale = std::f64::consts::SQRT_2 * sigma;
    let u: f64 = rng.gen();
    // 1 - u lies in (0, 1], keeping the log finite.
    let modulus = scale * (-2.0 * (1.0 - u).ln()).sqrt();
    let theta = rng.gen_range(-PI..PI);
    let [ub, uc, ud]: [f64; 3] = UnitSphere.sample(rng);
    let (s, c) = theta.sin_cos();
    Quaternion::new(modulus * c, modulus * s * ub, modulus * s * uc, modulus * s * ud)
}

/// Glorot-uniform real weights.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize, n: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
}

/// Quaternion affine layer `y = W ⊛ x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct QLinearParams {
    /// Shape `[n_out, n_in]`.
    pub weights: QuaternionTensor,
    pub bias: Option<QuaternionTensor>,
}

impl QLinearParams {
    pub fn zeros(n_out: usize, n_in: usize, bias: bool) -> Self {
        QLinearParams {
            weights: QuaternionTensor::zeros(&[n_out, n_in]),
            bias: bias.then(|| QuaternionTensor::zeros(&[n_out])),
        }
    }

    pub fn n_out(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn n_in(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn to_named_arrays(&self, prefix: &str) -> Vec<NamedArray> {
        let mut out = vec![NamedArray::from_quaternion_tensor(
            format!("{prefix}.weight"),
            &self.weights,
        )];
        if let Some(b) = &self.bias {
            out.push(NamedArray::from_quaternion_tensor(format!("{prefix}.bias"), b));
        }
        out
    }

    pub fn from_named_arrays(prefix: &str, arrays: &[NamedArray]) -> Result<Self> {
        let find = |name: String| arrays.iter().find(|a| a.name == name);
        let weights = find(format!("{prefix}.weight"))
            .ok_or_else(|| Error::Config(format!("missing array {prefix}.weight")))?
            .to_quaternion_tensor()?;
        if weights.shape().len() != 2 {
            return Err(Error::shape("QLinear weights", "2-d", format!("{:?}", weights.shape())));
        }
        let bias = find(format!("{prefix}.bias"))
            .map(NamedArray::to_quaternion_tensor)
            .transpose()?;
        if let Some(b) = &bias {
            if b.shape() != [weights.shape()[0]] {
                return Err(Error::shape("QLinear bias", weights.shape()[0], format!("{:?}", b.shape())));
            }
        }
        Ok(QLinearParams { weights, bias })
    }
}

impl ParameterCount for QLinearParams {
    fn parameter_count(&self) -> usize {
        4 * self.weights.len() + self.bias.as_ref().map_or(0, |b| 4 * b.len())
    }
}

pub fn qlinear_forward(p: &QLinearParams, x: &QuaternionTensor) -> Result<QuaternionTensor> {
    let mut y = qmat_vec(&p.weights, x)?;
    if let Some(b) = &p.bias {
        for o in 0..y.len() {
            y.set(o, y.get(o) + b.get(o));
        }
    }
    Ok(y)
}

/// Polar-form initialization of a `[n_out, n_in]` layer with zero bias.
pub fn quaternion_init(spec: InitSpec, shape: [usize; 2]) -> Result<QLinearParams> {
    let [n_out, n_in] = shape;
    if n_out == 0 || n_in == 0 {
        return Err(Error::invalid("layer shape", format!("zero dimension in {shape:?}")));
    }
    if spec.fan_in == 0 || spec.fan_out == 0 {
        return Err(Error::invalid("fan", "fan_in and fan_out must be positive"));
    }
    let sigma = spec.sigma();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values: Vec<Quaternion> = (0..n_out * n_in)
        .map(|_| sample_polar_weight(&mut rng, sigma))
        .collect();
    Ok(QLinearParams {
        weights: QuaternionTensor::from_quaternions(&[n_out, n_in], &values)?,
        bias: Some(QuaternionTensor::zeros(&[n_out])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::to_hamilton_matrix;

    fn spec(fan_in: usize, fan_out: usize, seed: u64) -> InitSpec {
        InitSpec {
            criterion: InitCriterion::Glorot,
            seed,
            fan_in,
            fan_out,
        }
    }

    #[test]
    fn identity_layer() {
        let p = QLinearParams {
            weights: QuaternionTensor::from_quaternions(&[1, 1], &[Quaternion::ONE]).unwrap(),
            bias: Some(QuaternionTensor::zeros(&[1])),
        };
        let x = QuaternionTensor::from_quaternions(&[1], &[Quaternion::new(1., -2., 3., 0.5)]).unwrap();
        assert_eq!(qlinear_forward(&p, &x).unwrap(), x);
    }

    #[test]
    fn zero_weights_return_bias() {
        let beta = Quaternion::new(0.1, 0.2, -0.3, 0.4);
        let mut p = QLinearParams::zeros(2, 3, true);
        p.bias = Some(QuaternionTensor::from_quaternions(&[2], &[beta, beta]).unwrap());
        let x = QuaternionTensor::from_quaternions(
            &[3],
            &[Quaternion::new(5., 6., 7., 8.), Quaternion::ONE, Quaternion::K],
        )
        .unwrap();
        let y = qlinear_forward(&p, &x).unwrap();
        assert_eq!(y.to_quaternions(), vec![beta, beta]);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let p = QLinearParams::zeros(2, 3, true);
        let x = QuaternionTensor::zeros(&[4]);
        assert!(matches!(qlinear_forward(&p, &x), Err(Error::Shape { .. })));
    }

    #[test]
    fn matches_expanded_real_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..200 {
            let p = quaternion_init(spec(2, 2, trial), [2, 2]).unwrap();
            let mut p = p;
            let b: Vec<Quaternion> = (0..2).map(|_| sample_polar_weight(&mut rng, 1.0)).collect();
            p.bias = Some(QuaternionTensor::from_quaternions(&[2], &b).unwrap());
            let x: Vec<Quaternion> = (0..2).map(|_| sample_polar_weight(&mut rng, 1.0)).collect();
            let xt = QuaternionTensor::from_quaternions(&[2], &x).unwrap();
            let y = qlinear_forward(&p, &xt).unwrap();
            // 8×8 real oracle
            for o in 0..2 {
                let mut acc = b[o].to_array();
                for (i, xi) in x.iter().enumerate() {
                    let m = to_hamilton_matrix(p.weights.get(o * 2 + i));
                    let r = m.apply(xi.to_array());
                    for k in 0..4 {
                        acc[k] += r[k];
                    }
                }
                for k in 0..4 {
                    assert!((acc[k] - y.get(o).to_array()[k]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn split_activation_examples() {
        let z = QuaternionTensor::zeros(&[1]);
        assert_eq!(
            split_activation(SplitActivation::Sigmoid, &z).get(0),
            Quaternion::new(0.5, 0.5, 0.5, 0.5)
        );
        assert_eq!(split_activation(SplitActivation::Tanh, &z).get(0), Quaternion::ZERO);
        let x = QuaternionTensor::from_quaternions(&[1], &[Quaternion::new(1., -2., 3., -4.)]).unwrap();
        assert_eq!(
            split_activation(SplitActivation::Relu, &x).get(0),
            Quaternion::new(1., 0., 3., 0.)
        );
    }

    #[test]
    fn split_activation_acts_per_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let planes = [0, 1, 2, 3].map(|_| (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<f64>>());
        let t = QuaternionTensor::pack_components(&[2, 3], planes.clone()).unwrap();
        for kind in [SplitActivation::Sigmoid, SplitActivation::Tanh, SplitActivation::Relu] {
            let out = split_activation(kind, &t).unpack_components();
            for k in 0..4 {
                let expect: Vec<f64> = planes[k].iter().map(|&v| kind.apply(v)).collect();
                assert_eq!(out[k], expect);
            }
        }
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(QLinearParams::zeros(128, 128, true).parameter_count(), 66_048);
        assert_eq!(QLinearParams::zeros(3, 2, false).parameter_count(), 24);
    }

    #[test]
    fn weight_sharing_is_four_fold() {
        // 4n real inputs to 4m real outputs: quaternion layer vs unconstrained real layer.
        let (n, m) = (2, 2);
        let q = QLinearParams::zeros(m, n, false).parameter_count();
        let real = (4 * n) * (4 * m);
        assert_eq!(q, 4 * n * m);
        assert_eq!(real, 4 * q);
    }

    #[test]
    fn init_is_deterministic() {
        let a = quaternion_init(spec(7, 5, 42), [5, 7]).unwrap();
        let b = quaternion_init(spec(7, 5, 42), [5, 7]).unwrap();
        assert_eq!(a, b);
        let c = quaternion_init(spec(7, 5, 43), [5, 7]).unwrap();
        assert_ne!(a, c);
        assert!(a.bias.as_ref().unwrap().to_quaternions().iter().all(|q| *q == Quaternion::ZERO));
    }

    #[test]
    fn init_rejects_zero_dims() {
        assert!(quaternion_init(spec(1, 1, 0), [0, 3]).is_err());
        assert!(quaternion_init(spec(0, 1, 0), [1, 3]).is_err());
    }

    #[test]
    fn init_statistics_match_glorot_target() {
        // 128x128 layer drawn repeatedly to pass 10^5 quaternions.
        let target = 1.0 / (2.0f64 * 256.0).sqrt();
        let mut samples: Vec<Quaternion> = Vec::new();
        let mut seed = 0;
        while samples.len() < 100_000 {
            let p = quaternion_init(spec(128, 128, seed), [128, 128]).unwrap();
            samples.extend(p.weights.to_quaternions());
            seed += 1;
        }
        let n = samples.len() as f64;
        let comps: Vec<f64> = samples.iter().flat_map(|q| q.to_array()).collect();
        let var = comps.iter().map(|v| v * v).sum::<f64>() / comps.len() as f64;
        let std = var.sqrt();
        assert!((std - target).abs() / target < 0.05, "std {std} vs {target}");

        for k in 0..4 {
            let xs: Vec<f64> = samples.iter().map(|q| q.to_array()[k]).collect();
            let mean = xs.iter().sum::<f64>() / n;
            let sd = (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 3.0 * sd / n.sqrt(), "component {k} mean {mean}");
        }

        // Unit imaginary direction.
        for q in samples.iter().take(10_000) {
            let v = (q.b * q.b + q.c * q.c + q.d * q.d).sqrt();
            if v > 0.0 {
                assert!(((q.b / v).powi(2) + (q.c / v).powi(2) + (q.d / v).powi(2) - 1.0).abs() < 1e-9);
            }
        }

        // Modulus and angle drawn independently: correlation of |w| with cos²θ ≈ 0.
        let mods: Vec<f64> = samples.iter().map(|q| q.norm()).collect();
        let cos2: Vec<f64> = samples.iter().map(|q| (q.a / q.norm()).powi(2)).collect();
        let corr = correlation(&mods, &cos2);
        assert!(corr.abs() < 0.02, "corr {corr}");
    }

    fn correlation(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / n;
        let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / n).sqrt();
        let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / n).sqrt();
        cov / (sx * sy)
    }
}
