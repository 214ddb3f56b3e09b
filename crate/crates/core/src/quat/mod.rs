//! Quaternion numbers and the algebra the networks are built on.
//!
//! A quaternion `a + b·i + c·j + d·k` is stored as four `f64` components.
//! Products use the Hamilton rule `i² = j² = k² = ijk = −1`, which is
//! available in two forms: the direct sixteen-term expansion ([`hamilton`])
//! and the left-multiplication matrix ([`HamiltonMatrix`], used by
//! [`hamilton_via_matrix`]). The two are kept independent so each can serve
//! as an oracle for the other.

mod opcount;
mod tensor;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use opcount::{hamilton_op_count, OpCount};
pub use tensor::{qmat_vec, qmat_vec_looped, QuaternionTensor};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Quaternion { a, b, c, d }
    }

    /// Quaternion with zero imaginary part.
    #[inline]
    pub const fn real(a: f64) -> Self {
        Quaternion::new(a, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn from_array(v: [f64; 4]) -> Self {
        Quaternion::new(v[0], v[1], v[2], v[3])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    #[inline]
    pub fn conj(self) -> Self {
        Quaternion::new(self.a, -self.b, -self.c, -self.d)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unit quaternion pointing the same way. Fails on the zero quaternion.
    pub fn normalize(self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scale(1.0 / n))
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Apply `f` to each component independently.
    #[inline]
    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Quaternion::new(f(self.a), f(self.b), f(self.c), f(self.d))
    }

    #[inline]
    pub fn zip_map(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Quaternion::new(
            f(self.a, other.a),
            f(self.b, other.b),
            f(self.c, other.c),
            f(self.d, other.d),
        )
    }

    pub fn to_hamilton_matrix(self) -> HamiltonMatrix {
        HamiltonMatrix::from(self)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}i, {}j, {}k)", self.a, self.b, self.c, self.d)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Quaternion::new(self.a + rhs.a, self.b + rhs.b, self.c + rhs.c, self.d + rhs.d)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Quaternion::new(self.a - rhs.a, self.b - rhs.b, self.c - rhs.c, self.d - rhs.d)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn neg(self) -> Self {
        Quaternion::new(-self.a, -self.b, -self.c, -self.d)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        hamilton(self, rhs)
    }
}

/// Componentwise sum.
#[inline]
pub fn q_add(x: Quaternion, y: Quaternion) -> Quaternion {
    x + y
}

#[inline]
pub fn q_conj(q: Quaternion) -> Quaternion {
    q.conj()
}

#[inline]
pub fn q_norm(q: Quaternion) -> f64 {
    q.norm()
}

pub fn q_normalize(q: Quaternion) -> Result<Quaternion> {
    q.normalize()
}

/// The Hamilton product `x ⊗ y`.
///
/// Sixteen multiplications and twelve additions/subtractions; see
/// [`hamilton_op_count`].
#[inline]
pub fn hamilton(x: Quaternion, y: Quaternion) -> Quaternion {
    Quaternion::from_array(hamilton_expand(x.to_array(), y.to_array()))
}

// Shared by `hamilton` and the op counter so the counted body is the real one.
#[inline(always)]
pub(crate) fn hamilton_expand<T>(x: [T; 4], y: [T; 4]) -> [T; 4]
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let [a1, b1, c1, d1] = x;
    let [a2, b2, c2, d2] = y;
    [
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ]
}

/// Left-multiplication matrix of a quaternion: `x ⊗ y = M(x) · y` with `y`
/// read as the column `(a, b, c, d)`.
///
/// ```text
/// | a -b -c -d |
/// | b  a -d  c |
/// | c  d  a -b |
/// | d -c  b  a |
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonMatrix {
    pub m: [[f64; 4]; 4],
}

impl From<Quaternion> for HamiltonMatrix {
    fn from(q: Quaternion) -> Self {
        let Quaternion { a, b, c, d } = q;
        HamiltonMatrix {
            m: [
                [a, -b, -c, -d],
                [b, a, -d, c],
                [c, d, a, -b],
                [d, -c, b, a],
            ],
        }
    }
}

impl HamiltonMatrix {
    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(self.m.iter()) {
            *o = row.iter().zip(v.iter()).map(|(r, x)| r * x).sum();
        }
        out
    }

    pub fn transpose(&self) -> HamiltonMatrix {
        let mut t = [[0.0; 4]; 4];
        for (r, row) in self.m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                t[c][r] = *v;
            }
        }
        HamiltonMatrix { m: t }
    }

    /// The quaternion this matrix represents (its first column).
    pub fn quaternion(&self) -> Quaternion {
        Quaternion::new(self.m[0][0], self.m[1][0], self.m[2][0], self.m[3][0])
    }
}

pub fn to_hamilton_matrix(q: Quaternion) -> HamiltonMatrix {
    HamiltonMatrix::from(q)
}

/// `x ⊗ y` computed as a 4×4 matrix-vector product.
pub fn hamilton_via_matrix(x: Quaternion, y: Quaternion) -> Quaternion {
    Quaternion::from_array(HamiltonMatrix::from(x).apply(y.to_array()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    #[test]
    fn add_examples() {
        assert_eq!(q_add(q(1., 2., 3., 4.), Quaternion::ZERO), q(1., 2., 3., 4.));
        assert_eq!(q_add(q(1., 2., 3., 4.), q(-1., -2., -3., -4.)), Quaternion::ZERO);
        assert_eq!(q_add(q(1., 0., 1., 0.), q(0., 2., 0., 2.)), q(1., 2., 1., 2.));
    }

    #[test]
    fn conj_examples() {
        assert_eq!(q_conj(q(1., 2., 3., 4.)), q(1., -2., -3., -4.));
        assert_eq!(q_conj(q(5., 0., 0., 0.)), q(5., 0., 0., 0.));
        let x = q(0.5, -1., 2., -3.);
        assert_eq!(q_conj(q_conj(x)), x);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(q_norm(q(0., 3., 0., 4.)), 5.0);
        assert_eq!(q_norm(Quaternion::ZERO), 0.0);
        assert_eq!(q_norm(q(1., 1., 1., 1.)), 2.0);
    }

    #[test]
    fn normalize_examples() {
        let n = q_normalize(q(0., 3., 0., 4.)).unwrap();
        assert!((n - q(0., 0.6, 0., 0.8)).norm() < 1e-15);
        assert_eq!(q_normalize(q(2., 0., 0., 0.)).unwrap(), Quaternion::ONE);
        assert_eq!(q_normalize(q(1., 1., 1., 1.)).unwrap(), q(0.5, 0.5, 0.5, 0.5));
    }

    #[test]
    fn normalize_zero_is_error() {
        let err = q_normalize(Quaternion::ZERO).unwrap_err();
        assert!(matches!(err, Error::ZeroNorm));
        assert_eq!(err.to_string(), "cannot normalize zero quaternion");
    }

    #[test]
    fn hamilton_examples() {
        assert_eq!(hamilton(Quaternion::I, Quaternion::J), Quaternion::K);
        let x = q(0.3, -1.2, 7.0, 2.5);
        assert_eq!(hamilton(Quaternion::ONE, x), x);
        // Hand expansion: a = 5-12-21-32, b = 6+10+24-28, c = 7-16+15+24, d = 8+14-18+20.
        assert_eq!(hamilton(q(1., 2., 3., 4.), q(5., 6., 7., 8.)), q(-60., 12., 30., 24.));
        assert_eq!(
            hamilton_via_matrix(q(1., 2., 3., 4.), q(5., 6., 7., 8.)),
            q(-60., 12., 30., 24.)
        );
    }

    #[test]
    fn basis_table() {
        use Quaternion as Q;
        let minus_one = -Q::ONE;
        assert_eq!(Q::I * Q::I, minus_one);
        assert_eq!(Q::J * Q::J, minus_one);
        assert_eq!(Q::K * Q::K, minus_one);
        assert_eq!(Q::I * Q::J * Q::K, minus_one);
        assert_eq!(Q::I * Q::J, Q::K);
        assert_eq!(Q::J * Q::I, -Q::K);
        assert_eq!(Q::J * Q::K, Q::I);
        assert_eq!(Q::K * Q::J, -Q::I);
        assert_eq!(Q::K * Q::I, Q::J);
        assert_eq!(Q::I * Q::K, -Q::J);
    }

    #[test]
    fn matrix_examples() {
        let id = to_hamilton_matrix(Quaternion::ONE);
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(id.m[r][c], if r == c { 1.0 } else { 0.0 });
            }
        }
        let i = to_hamilton_matrix(Quaternion::I);
        assert_eq!(
            i.m,
            [
                [0., -1., 0., 0.],
                [1., 0., 0., 0.],
                [0., 0., 0., -1.],
                [0., 0., 1., 0.]
            ]
        );
        let m = to_hamilton_matrix(q(1., 2., 3., 4.));
        assert_eq!([m.m[0][0], m.m[1][0], m.m[2][0], m.m[3][0]], [1., 2., 3., 4.]);
        assert_eq!(m.quaternion(), q(1., 2., 3., 4.));

        assert_eq!(
            hamilton_via_matrix(Quaternion::ONE, q(7., 8., 9., 10.)),
            q(7., 8., 9., 10.)
        );
        assert_eq!(hamilton_via_matrix(Quaternion::J, Quaternion::K), Quaternion::I);
    }

    #[test]
    fn matrix_is_skew_plus_diagonal() {
        let m = to_hamilton_matrix(q(0.7, -2., 3.5, 1.25));
        let t = m.transpose();
        for r in 0..4 {
            assert_eq!(m.m[r][r], 0.7);
            for c in 0..4 {
                let expect = if r == c { 1.4 } else { 0.0 };
                assert_eq!(m.m[r][c] + t.m[r][c], expect);
            }
        }
        // Transpose is the conjugate's matrix.
        assert_eq!(t, to_hamilton_matrix(q(0.7, -2., 3.5, 1.25).conj()));
    }

    fn arb_q() -> impl Strategy<Value = Quaternion> {
        prop::array::uniform4(-10.0f64..10.0).prop_map(Quaternion::from_array)
    }

    proptest! {
        #[test]
        fn oracle_equivalence(x in arb_q(), y in arb_q()) {
            let p = hamilton(x, y);
            let m = hamilton_via_matrix(x, y);
            for (u, v) in p.to_array().iter().zip(m.to_array()) {
                prop_assert!((u - v).abs() <= 1e-12);
            }
        }

        #[test]
        fn norm_is_multiplicative(x in arb_q(), y in arb_q()) {
            let lhs = hamilton(x, y).norm();
            let rhs = x.norm() * y.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1e-300));
        }

        #[test]
        fn conj_reverses_products(x in arb_q(), y in arb_q()) {
            let lhs = hamilton(x, y).conj();
            let rhs = hamilton(y.conj(), x.conj());
            prop_assert!((lhs - rhs).to_array().iter().all(|e| e.abs() <= 1e-12));
        }

        #[test]
        fn norm_squared_from_conj(x in arb_q()) {
            let p = hamilton(x, x.conj());
            let n2 = x.norm_sqr();
            prop_assert!((p.a - n2).abs() <= 1e-9 * n2.max(1e-300));
            prop_assert!(p.b.abs() <= 1e-12 && p.c.abs() <= 1e-12 && p.d.abs() <= 1e-12);
        }

        #[test]
        fn conj_involution(x in arb_q()) {
            prop_assert_eq!(x.conj().conj(), x);
        }

        #[test]
        fn normalized_has_unit_norm(x in arb_q()) {
            prop_assume!(x.norm() > 1e-6);
            prop_assert!((x.normalize().unwrap().norm() - 1.0).abs() <= 1e-12);
        }
    }
}
