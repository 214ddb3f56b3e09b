use serde::{Deserialize, Serialize};

use super::{hamilton, Quaternion};
use crate::error::{Error, Result};

/// A batch of quaternions stored as four component planes.
///
/// Plane `k` holds component `k` (a, b, c, d in that order) of every element
/// in row-major order, so plane-wise loops see contiguous `f64` data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuaternionTensor {
    shape: Vec<usize>,
    planes: [Vec<f64>; 4],
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl QuaternionTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = numel(shape);
        QuaternionTensor {
            shape: shape.to_vec(),
            planes: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    /// Builds a tensor from four component planes of the given shape.
    pub fn pack_components(shape: &[usize], planes: [Vec<f64>; 4]) -> Result<Self> {
        let n = numel(shape);
        for (k, p) in planes.iter().enumerate() {
            if p.len() != n {
                return Err(Error::shape(
                    "pack_components",
                    format!("{n} elements in every plane (shape {shape:?})"),
                    format!("{} elements in plane {k}", p.len()),
                ));
            }
        }
        Ok(QuaternionTensor {
            shape: shape.to_vec(),
            planes,
        })
    }

    /// Inverse of [`pack_components`](Self::pack_components).
    pub fn unpack_components(self) -> [Vec<f64>; 4] {
        self.planes
    }

    pub fn from_quaternions(shape: &[usize], values: &[Quaternion]) -> Result<Self> {
        let n = numel(shape);
        if values.len() != n {
            return Err(Error::shape(
                "from_quaternions",
                format!("{n} values for shape {shape:?}"),
                values.len(),
            ));
        }
        let mut t = Self::zeros(shape);
        for (i, q) in values.iter().enumerate() {
            t.set(i, *q);
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of quaternions.
    pub fn len(&self) -> usize {
        self.planes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn planes(&self) -> &[Vec<f64>; 4] {
        &self.planes
    }

    pub fn plane(&self, k: usize) -> &[f64] {
        &self.planes[k]
    }

    #[inline]
    pub fn get(&self, i: usize) -> Quaternion {
        Quaternion::new(
            self.planes[0][i],
            self.planes[1][i],
            self.planes[2][i],
            self.planes[3][i],
        )
    }

    #[inline]
    pub fn set(&mut self, i: usize, q: Quaternion) {
        self.planes[0][i] = q.a;
        self.planes[1][i] = q.b;
        self.planes[2][i] = q.c;
        self.planes[3][i] = q.d;
    }

    pub fn to_quaternions(&self) -> Vec<Quaternion> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Same data under a new shape with an equal element count.
    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        if numel(shape) != self.len() {
            return Err(Error::shape("reshape", self.len(), format!("{shape:?}")));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Applies `f` to every real scalar of every plane.
    pub fn map_components(&self, f: impl Fn(f64) -> f64) -> Self {
        let planes = [0, 1, 2, 3].map(|k| self.planes[k].iter().map(|&v| f(v)).collect());
        QuaternionTensor {
            shape: self.shape.clone(),
            planes,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.planes
            .iter()
            .zip(other.planes.iter())
            .flat_map(|(p, q)| p.iter().zip(q.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

fn check_matvec(w: &QuaternionTensor, x: &QuaternionTensor) -> Result<(usize, usize)> {
    let &[n_out, n_in] = w.shape() else {
        return Err(Error::shape("qmat_vec weights", "2-d [n_out, n_in]", format!("{:?}", w.shape())));
    };
    if x.len() != n_in {
        return Err(Error::shape(
            "qmat_vec",
            format!("input of {n_in} quaternions (weights {n_out}x{n_in})"),
            format!("{} quaternions", x.len()),
        ));
    }
    Ok((n_out, n_in))
}

/// Quaternion matrix-vector product `out[o] = Σ_i W[o][i] ⊗ x[i]`.
///
/// Each quaternion weight is applied through its 4×4 left-multiplication
/// block, evaluated plane by plane.
pub fn qmat_vec(w: &QuaternionTensor, x: &QuaternionTensor) -> Result<QuaternionTensor> {
    let (n_out, n_in) = check_matvec(w, x)?;
    let [wa, wb, wc, wd] = &w.planes;
    let [xa, xb, xc, xd] = &x.planes;
    let mut out = QuaternionTensor::zeros(&[n_out]);
    for o in 0..n_out {
        let row = o * n_in..(o + 1) * n_in;
        let (wa, wb, wc, wd) = (&wa[row.clone()], &wb[row.clone()], &wc[row.clone()], &wd[row]);
        let (mut sa, mut sb, mut sc, mut sd) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..n_in {
            sa += wa[i] * xa[i] - wb[i] * xb[i] - wc[i] * xc[i] - wd[i] * xd[i];
            sb += wb[i] * xa[i] + wa[i] * xb[i] - wd[i] * xc[i] + wc[i] * xd[i];
            sc += wc[i] * xa[i] + wd[i] * xb[i] + wa[i] * xc[i] - wb[i] * xd[i];
            sd += wd[i] * xa[i] - wc[i] * xb[i] + wb[i] * xc[i] + wa[i] * xd[i];
        }
        out.set(o, Quaternion::new(sa, sb, sc, sd));
    }
    Ok(out)
}

/// Same product as [`qmat_vec`] via one scalar [`hamilton`] call per weight.
pub fn qmat_vec_looped(w: &QuaternionTensor, x: &QuaternionTensor) -> Result<QuaternionTensor> {
    let (n_out, n_in) = check_matvec(w, x)?;
    let mut out = QuaternionTensor::zeros(&[n_out]);
    for o in 0..n_out {
        let mut acc = Quaternion::ZERO;
        for i in 0..n_in {
            acc = acc + hamilton(w.get(o * n_in + i), x.get(i));
        }
        out.set(o, acc);
    }
    Ok(out)
}
