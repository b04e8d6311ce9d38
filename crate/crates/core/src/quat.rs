//! Scalar arithmetic in the real quaternion algebra.
//!
//! The algebra is generated by `i1`, `i2` subject to
//! `i1² = i2² = -1` and `i1·i2 = -i2·i1 = i3`. Conjugation negates the
//! imaginary coefficients, the norm is Euclidean on the four coefficients,
//! and the norm is multiplicative: `|pq| = |p||q|`.
//!
//! Throughout the library `x/|x|` is defined as `0` at `x = 0`; in
//! particular [`exp_imag`] maps `0` to `1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Element `q = q0 + q1·i1 + q2·i2 + q3·i3` of the real quaternion algebra.
///
/// Serializes as the 4-array `[q0, q1, q2, q3]`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", from = "[f64; 4]")]
pub struct Quaternion {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// Pure imaginary quaternion `x = x1·i1 + x2·i2 + x3·i3`, identified with a
/// point of 3-space.
///
/// Serializes as the 3-array `[x1, x2, x3]`.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 3]", from = "[f64; 3]")]
pub struct ImaginaryQuaternion {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

/// Splitting of a quaternion over the distinguished complex slice.
///
/// `q = z1 + z2·i2` with `z1, z2` complex numbers in the slice generated by
/// `i1` (the canonical choice of slice in this library; any imaginary unit
/// would do). The round trip with [`Quaternion`] is exact:
/// `q0 = Re z1, q1 = Im z1, q2 = Re z2, q3 = Im z2`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ComplexPair {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I1: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const I2: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const I3: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Quaternion { q0, q1, q2, q3 }
    }

    pub const fn from_real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.q0, -self.q1, -self.q2, -self.q3)
    }

    pub fn norm_sq(self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Real coefficient `q0`.
    pub fn re(self) -> f64 {
        self.q0
    }

    /// Imaginary part as a point of 3-space.
    pub fn im(self) -> ImaginaryQuaternion {
        ImaginaryQuaternion::new(self.q1, self.q2, self.q3)
    }

    pub fn scale(self, c: f64) -> Self {
        Quaternion::new(self.q0 * c, self.q1 * c, self.q2 * c, self.q3 * c)
    }

    /// Multiplicative inverse; `0` maps to `0`, consistent with the
    /// library-wide `x/|x| = 0` convention.
    pub fn inverse(self) -> Self {
        let n2 = self.norm_sq();
        if n2 == 0.0 {
            Quaternion::ZERO
        } else {
            self.conj().scale(1.0 / n2)
        }
    }

    pub fn is_finite(self) -> bool {
        self.q0.is_finite() && self.q1.is_finite() && self.q2.is_finite() && self.q3.is_finite()
    }

    pub fn dist(self, other: Quaternion) -> f64 {
        (self - other).norm()
    }

    pub fn to_complex_pair(self) -> ComplexPair {
        ComplexPair {
            z1: Complex64::new(self.q0, self.q1),
            z2: Complex64::new(self.q2, self.q3),
        }
    }
}

impl ImaginaryQuaternion {
    pub const ZERO: ImaginaryQuaternion = ImaginaryQuaternion::new(0.0, 0.0, 0.0);

    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        ImaginaryQuaternion { x1, x2, x3 }
    }

    pub fn norm_sq(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `x/|x|`, with the stipulation that `0` maps to `0`.
    pub fn unit_or_zero(self) -> ImaginaryQuaternion {
        let n = self.norm();
        if n == 0.0 {
            ImaginaryQuaternion::ZERO
        } else {
            self.scale(1.0 / n)
        }
    }

    pub fn scale(self, c: f64) -> Self {
        ImaginaryQuaternion::new(self.x1 * c, self.x2 * c, self.x3 * c)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }
}

impl ComplexPair {
    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::new(self.z1.re, self.z1.im, self.z2.re, self.z2.im)
    }
}

/// `e^x` for pure imaginary `x`: `cos|x| + (x/|x|)·sin|x|`, with value `1`
/// at `x = 0`.
///
/// The result is a unit quaternion and `conj(exp_imag(x)) = exp_imag(-x)`.
pub fn exp_imag(x: ImaginaryQuaternion) -> Quaternion {
    let n = x.norm();
    if n == 0.0 {
        return Quaternion::ONE;
    }
    let s = n.sin() / n;
    Quaternion::new(n.cos(), x.x1 * s, x.x2 * s, x.x3 * s)
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.q0, q.q1, q.q2, q.q3]
    }
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

impl From<ImaginaryQuaternion> for [f64; 3] {
    fn from(x: ImaginaryQuaternion) -> Self {
        [x.x1, x.x2, x.x3]
    }
}

impl From<[f64; 3]> for ImaginaryQuaternion {
    fn from(a: [f64; 3]) -> Self {
        ImaginaryQuaternion::new(a[0], a[1], a[2])
    }
}

impl From<ImaginaryQuaternion> for Quaternion {
    fn from(x: ImaginaryQuaternion) -> Self {
        Quaternion::new(0.0, x.x1, x.x2, x.x3)
    }
}

impl From<Quaternion> for ComplexPair {
    fn from(q: Quaternion) -> Self {
        q.to_complex_pair()
    }
}

impl From<ComplexPair> for Quaternion {
    fn from(p: ComplexPair) -> Self {
        p.to_quaternion()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion::new(
            p.q0 * q.q0 - p.q1 * q.q1 - p.q2 * q.q2 - p.q3 * q.q3,
            p.q0 * q.q1 + p.q1 * q.q0 + p.q2 * q.q3 - p.q3 * q.q2,
            p.q0 * q.q2 - p.q1 * q.q3 + p.q2 * q.q0 + p.q3 * q.q1,
            p.q0 * q.q3 + p.q1 * q.q2 - p.q2 * q.q1 + p.q3 * q.q0,
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.q0 + o.q0, self.q1 + o.q1, self.q2 + o.q2, self.q3 + o.q3)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.q0 - o.q0, self.q1 - o.q1, self.q2 - o.q2, self.q3 - o.q3)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl Add for ImaginaryQuaternion {
    type Output = ImaginaryQuaternion;

    fn add(self, o: ImaginaryQuaternion) -> ImaginaryQuaternion {
        ImaginaryQuaternion::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }
}

impl Neg for ImaginaryQuaternion {
    type Output = ImaginaryQuaternion;

    fn neg(self) -> ImaginaryQuaternion {
        self.scale(-1.0)
    }
}
