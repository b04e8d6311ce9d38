//! Right-linear matrix algebra on quaternionic n-space.
//!
//! Matrices act on column vectors by `(Ax)_i = sum_j a_ij * x_j`; scalars
//! multiply vectors on the right, so every matrix is a right-linear
//! operator. The complex adjoint representation [`chi`] doubles the
//! dimension and turns quaternionic questions (positivity, exponentials,
//! spectral decomposition) into complex Hermitian ones, which are solved by
//! the cyclic Jacobi solver in [`eigen`].

mod eigen;

pub use eigen::{hermitian_eigen, CMatrix, HermitianEigen};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

use crate::quat::Quaternion;

/// Default relative tolerance for operator-shape preconditions
/// (self-adjointness, anti-self-adjointness) when an operation does not take
/// an explicit tolerance.
pub const DEFAULT_OP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not anti-self-adjoint (defect {defect:.3e})")]
    NotAntiSelfAdjoint { defect: f64 },
    #[error("invalid spectral system: {0}")]
    InvalidSpectralSystem(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

/// Square matrix over the quaternions, row-major storage.
///
/// Serializes as row-major nested arrays of quaternion 4-arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 4]>>", into = "Vec<Vec<[f64; 4]>>")]
pub struct QMatrix {
    n: usize,
    entries: Vec<Quaternion>,
}

/// Column vector over the quaternions with the inner product
/// `<x, y> = sum_k conj(y_k) * x_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct QVector {
    entries: Vec<Quaternion>,
}

impl QMatrix {
    pub fn zeros(n: usize) -> Self {
        QMatrix {
            n,
            entries: vec![Quaternion::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, Quaternion::ONE);
        }
        m
    }

    pub fn diagonal(diag: &[Quaternion]) -> Self {
        let mut m = QMatrix::zeros(diag.len());
        for (i, &q) in diag.iter().enumerate() {
            m.set(i, i, q);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Quaternion>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::Numeric("matrix rows must form a square".into()));
        }
        Ok(QMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut m = QMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Entries uniform in `[-1, 1]` per coefficient.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        QMatrix::from_fn(n, |_, _| {
            Quaternion::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
    }

    /// `(B - B*)/2` for random `B`; exactly anti-self-adjoint.
    pub fn random_anti_self_adjoint(n: usize, rng: &mut impl Rng) -> Self {
        let b = QMatrix::random(n, rng);
        (&b - &b.adjoint()).scale(0.5)
    }

    /// `(B + B*)/2` for random `B`; exactly self-adjoint.
    pub fn random_self_adjoint(n: usize, rng: &mut impl Rng) -> Self {
        let b = QMatrix::random(n, rng);
        (&b + &b.adjoint()).scale(0.5)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Quaternion {
        self.entries[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, q: Quaternion) {
        self.entries[i * self.n + j] = q;
    }

    pub fn column(&self, j: usize) -> QVector {
        QVector::new((0..self.n).map(|i| self.get(i, j)).collect())
    }

    /// Conjugate transpose; realizes `<Ax, y> = <x, adjoint(A) y>`.
    pub fn adjoint(&self) -> QMatrix {
        QMatrix::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: f64) -> QMatrix {
        QMatrix {
            n: self.n,
            entries: self.entries.iter().map(|q| q.scale(c)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries.iter().map(|q| q.norm_sq()).sum::<f64>().sqrt()
    }

    /// Largest entry norm of `A - A*`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                d = d.max(self.get(i, j).dist(self.get(j, i).conj()));
            }
        }
        d
    }

    /// Largest entry norm of `A + A*`.
    pub fn anti_self_adjoint_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                d = d.max(self.get(i, j).dist(-self.get(j, i).conj()));
            }
        }
        d
    }

    /// Operator norm (largest singular value), computed through the complex
    /// adjoint representation.
    pub fn operator_norm(&self) -> Result<f64, LinalgError> {
        let m = chi(self);
        let g = m.adjoint().mul(&m);
        let eig = hermitian_eigen(&g, 1e-10 * (1.0 + g.max_abs()))?;
        Ok(eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt())
    }
}

impl QVector {
    pub fn new(entries: Vec<Quaternion>) -> Self {
        QVector { entries }
    }

    pub fn zeros(n: usize) -> Self {
        QVector::new(vec![Quaternion::ZERO; n])
    }

    /// Standard basis vector `e_k`.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = QVector::zeros(n);
        v.entries[k] = Quaternion::ONE;
        v
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        QVector::new(
            (0..n)
                .map(|_| {
                    Quaternion::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, k: usize) -> Quaternion {
        self.entries[k]
    }

    pub fn set(&mut self, k: usize, q: Quaternion) {
        self.entries[k] = q;
    }

    pub fn as_slice(&self) -> &[Quaternion] {
        &self.entries
    }

    /// `<self, other> = sum_k conj(other_k) * self_k`.
    pub fn inner(&self, other: &QVector) -> Quaternion {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let mut acc = Quaternion::ZERO;
        for (x, y) in self.entries.iter().zip(other.entries.iter()) {
            acc += y.conj() * *x;
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|q| q.norm_sq()).sum::<f64>().sqrt()
    }

    /// Right scalar multiplication `x * q` applied componentwise.
    pub fn scale_right(&self, q: Quaternion) -> QVector {
        QVector::new(self.entries.iter().map(|x| *x * q).collect())
    }

    pub fn scale(&self, c: f64) -> QVector {
        QVector::new(self.entries.iter().map(|x| x.scale(c)).collect())
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;

    fn mul(self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = QMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

impl Mul<&QVector> for &QMatrix {
    type Output = QVector;

    fn mul(self, x: &QVector) -> QVector {
        assert_eq!(self.n, x.dim(), "dimension mismatch");
        let mut out = QVector::zeros(self.n);
        for i in 0..self.n {
            let mut acc = Quaternion::ZERO;
            for j in 0..self.n {
                acc += self.get(i, j) * x.get(j);
            }
            out.set(i, acc);
        }
        out
    }
}

impl Add for &QMatrix {
    type Output = QMatrix;

    fn add(self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        QMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

impl Sub for &QMatrix {
    type Output = QMatrix;

    fn sub(self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        QMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

impl Neg for &QMatrix {
    type Output = QMatrix;

    fn neg(self) -> QMatrix {
        self.scale(-1.0)
    }
}

impl Add for &QVector {
    type Output = QVector;

    fn add(self, other: &QVector) -> QVector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        QVector::new(
            self.entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| *a + *b)
                .collect(),
        )
    }
}

impl Sub for &QVector {
    type Output = QVector;

    fn sub(self, other: &QVector) -> QVector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        QVector::new(
            self.entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| *a - *b)
                .collect(),
        )
    }
}

impl From<QMatrix> for Vec<Vec<[f64; 4]>> {
    fn from(m: QMatrix) -> Self {
        (0..m.n)
            .map(|i| (0..m.n).map(|j| m.get(i, j).into()).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<[f64; 4]>>> for QMatrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<[f64; 4]>>) -> Result<Self, String> {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(Quaternion::from).collect())
            .collect();
        QMatrix::from_rows(rows).map_err(|e| e.to_string())
    }
}

/// Complex adjoint representation: each quaternion entry `q = z1 + z2*i2`
/// becomes the 2x2 block `[[z1, z2], [-conj(z2), conj(z1)]]`, doubling the
/// dimension.
///
/// `chi` is a homomorphism of real algebras, `chi(A*) = chi(A)*`, and a
/// quaternionic matrix is PSD exactly when its image is.
pub fn chi(a: &QMatrix) -> CMatrix {
    let n = a.dim();
    let mut m = CMatrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            let p = a.get(i, j).to_complex_pair();
            m.set(2 * i, 2 * j, p.z1);
            m.set(2 * i, 2 * j + 1, p.z2);
            m.set(2 * i + 1, 2 * j, -p.z2.conj());
            m.set(2 * i + 1, 2 * j + 1, p.z1.conj());
        }
    }
    m
}

/// Inverse of [`chi`] on its image. Each 2x2 block is read back through the
/// slice splitting; the two redundant block entries are averaged, so inputs
/// that sit off the image by rounding noise are symmetrized.
pub fn chi_inv(m: &CMatrix) -> Result<QMatrix, LinalgError> {
    if m.dim() % 2 != 0 {
        return Err(LinalgError::Numeric(
            "chi image must have even dimension".into(),
        ));
    }
    let n = m.dim() / 2;
    Ok(QMatrix::from_fn(n, |i, j| {
        let z1 = (m.get(2 * i, 2 * j) + m.get(2 * i + 1, 2 * j + 1).conj()) * 0.5;
        let z2 = (m.get(2 * i, 2 * j + 1) - m.get(2 * i + 1, 2 * j).conj()) * 0.5;
        Quaternion::new(z1.re, z1.im, z2.re, z2.im)
    }))
}

/// Positivity report from [`is_psd`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// Tests a self-adjoint quaternionic matrix for positive semidefiniteness by
/// the minimum eigenvalue of its complex adjoint representation.
///
/// `tol` bounds both the accepted self-adjointness defect and the allowed
/// negative eigenvalue margin.
pub fn is_psd(h: &QMatrix, tol: f64) -> Result<PsdReport, LinalgError> {
    let defect = h.self_adjoint_defect();
    if defect > tol {
        return Err(LinalgError::NotHermitian { defect });
    }
    let eig = hermitian_eigen(&chi(h), tol)?;
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    Ok(PsdReport {
        psd: min >= -tol,
        min_eigenvalue: min,
    })
}

fn require_anti_self_adjoint(a: &QMatrix, tol: f64) -> Result<(), LinalgError> {
    let defect = a.anti_self_adjoint_defect();
    if defect > tol * (1.0 + a.max_abs()) {
        return Err(LinalgError::NotAntiSelfAdjoint { defect });
    }
    Ok(())
}

/// Eigenstructure of `i * chi(A)` for anti-self-adjoint `A`; shared by the
/// exponential and the spectral decomposition. The eigenvalues of `chi(A)`
/// itself are `-i * lambda_k`.
pub(crate) fn asa_eigen(a: &QMatrix, tol: f64) -> Result<HermitianEigen, LinalgError> {
    require_anti_self_adjoint(a, tol)?;
    let h = chi(a).scale(Complex64::I);
    hermitian_eigen(&h, 2.0 * tol * (1.0 + a.max_abs()) + f64::EPSILON)
}

pub(crate) fn expm_from_eigen(eig: &HermitianEigen, t: f64) -> Result<QMatrix, LinalgError> {
    let u = eig.assemble(|lam| Complex64::new(0.0, -t * lam).exp());
    chi_inv(&u)
}

/// `e^{tA}` for anti-self-adjoint `A`, computed by eigendecomposition of the
/// skew-Hermitian `chi(A)` and mapped back through the block structure.
///
/// The result is unitary and `t -> expm_asa(A, t)` is a one-parameter group.
pub fn expm_asa(a: &QMatrix, t: f64) -> Result<QMatrix, LinalgError> {
    let eig = asa_eigen(a, DEFAULT_OP_TOL)?;
    expm_from_eigen(&eig, t)
}

/// Difference quotient `(U(h)x - x)/h` approximating the infinitesimal
/// generator applied to `x`; first-order accurate in `h`.
pub fn generator_fd(u: impl Fn(f64) -> QMatrix, x: &QVector, h: f64) -> QVector {
    assert!(h > 0.0, "step must be positive");
    (&(&u(h) * x) - x).scale(1.0 / h)
}

/// Finite-dimensional spectral system: a finite resolution of identity
/// indexed by radii together with a commuting unitary anti-self-adjoint `J`.
///
/// Invariants (checked by [`SpectralSystemFD::validate`]): the projections
/// are self-adjoint, idempotent, mutually orthogonal and sum to the
/// identity; `J* = -J`, `J*J = I`; `J` commutes with every projection. The
/// radii are ascending and distinct, with `0` first when present.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralSystemFD {
    radii: Vec<f64>,
    projections: Vec<QMatrix>,
    j_op: QMatrix,
}

impl SpectralSystemFD {
    pub fn new(
        radii: Vec<f64>,
        projections: Vec<QMatrix>,
        j_op: QMatrix,
    ) -> Result<Self, LinalgError> {
        if radii.len() != projections.len() {
            return Err(LinalgError::InvalidSpectralSystem(
                "one projection per radius required".into(),
            ));
        }
        Ok(SpectralSystemFD {
            radii,
            projections,
            j_op,
        })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn projections(&self) -> &[QMatrix] {
        &self.projections
    }

    pub fn j_op(&self) -> &QMatrix {
        &self.j_op
    }

    pub fn dim(&self) -> usize {
        self.j_op.dim()
    }

    /// Projection attached to radius `0`, when present.
    pub fn e_zero(&self) -> Option<&QMatrix> {
        (self.radii.first() == Some(&0.0)).then(|| &self.projections[0])
    }

    /// `J_0 = J - J*E({0})`: the part of `J` that acts away from the kernel.
    pub fn j_zero(&self) -> QMatrix {
        match self.e_zero() {
            Some(e0) => &self.j_op - &(&self.j_op * e0),
            None => self.j_op.clone(),
        }
    }

    /// `sum_m s_m * J * E_m`.
    pub fn reconstruct(&self) -> QMatrix {
        let n = self.dim();
        let mut acc = QMatrix::zeros(n);
        for (s, e) in self.radii.iter().zip(self.projections.iter()) {
            acc = &acc + &(&self.j_op * e).scale(*s);
        }
        acc
    }

    /// Checks every structural invariant within `tol` (absolute, since
    /// projections and `J` have unit scale).
    pub fn validate(&self, tol: f64) -> Result<(), LinalgError> {
        let fail = |msg: String| Err(LinalgError::InvalidSpectralSystem(msg));
        let n = self.dim();
        for w in self.radii.windows(2) {
            if !(w[0] < w[1]) {
                return fail("radii must be strictly ascending".into());
            }
        }
        if self.radii.first().is_some_and(|&r| r < 0.0) {
            return fail("radii must be nonnegative".into());
        }
        let mut sum = QMatrix::zeros(n);
        for (m, e) in self.projections.iter().enumerate() {
            if e.dim() != n {
                return fail(format!("projection {m} has mismatched dimension"));
            }
            let d = e.self_adjoint_defect();
            if d > tol {
                return fail(format!("projection {m} not self-adjoint (defect {d:.3e})"));
            }
            let idem = (&(e * e) - e).max_abs();
            if idem > tol {
                return fail(format!("projection {m} not idempotent (defect {idem:.3e})"));
            }
            for (l, f) in self.projections.iter().enumerate().skip(m + 1) {
                let cross = (e * f).max_abs();
                if cross > tol {
                    return fail(format!(
                        "projections {m} and {l} not orthogonal (defect {cross:.3e})"
                    ));
                }
            }
            sum = &sum + e;
        }
        let completeness = (&sum - &QMatrix::identity(n)).max_abs();
        if completeness > tol {
            return fail(format!(
                "projections do not resolve the identity (defect {completeness:.3e})"
            ));
        }
        let anti = self.j_op.anti_self_adjoint_defect();
        if anti > tol {
            return fail(format!("J not anti-self-adjoint (defect {anti:.3e})"));
        }
        let unit = (&(&self.j_op.adjoint() * &self.j_op) - &QMatrix::identity(n)).max_abs();
        if unit > tol {
            return fail(format!("J not unitary (defect {unit:.3e})"));
        }
        for (m, e) in self.projections.iter().enumerate() {
            let comm = (&(&self.j_op * e) - &(e * &self.j_op)).max_abs();
            if comm > tol {
                return fail(format!("J does not commute with E_{m} (defect {comm:.3e})"));
            }
        }
        Ok(())
    }
}

/// Spectral decomposition `A = sum_m s_m * J * E_m` of an anti-self-adjoint
/// operator.
///
/// The radii are the distinct singular values of `A` (eigenvalues of
/// `chi(A)` come in conjugate pairs `±i s`; values within `tol * |A|` are
/// clustered into one radius). On the kernel, where the decomposition does
/// not constrain `J`, it acts as `e -> e * i1` in a computed orthonormal
/// kernel basis.
pub fn spectral_decompose_asa(a: &QMatrix, tol: f64) -> Result<SpectralSystemFD, LinalgError> {
    let n = a.dim();
    let eig = asa_eigen(a, tol)?;
    let lam = &eig.eigenvalues;
    let scale = lam.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let ctol = tol * scale;

    // Partition eigenvalue indices of i*chi(A) into the kernel and clusters
    // of equal |lambda|.
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &j| lam[i].abs().partial_cmp(&lam[j].abs()).unwrap());
    let mut kernel: Vec<usize> = Vec::new();
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for &k in &order {
        let v = lam[k].abs();
        if v <= ctol || scale == 0.0 {
            kernel.push(k);
        } else if let Some((rep, members)) = clusters.last_mut() {
            if v - *rep <= ctol {
                members.push(k);
            } else {
                clusters.push((v, vec![k]));
            }
        } else {
            clusters.push((v, vec![k]));
        }
    }
    if kernel.len() % 2 != 0 || clusters.iter().any(|(_, m)| m.len() % 2 != 0) {
        return Err(LinalgError::Numeric(
            "eigenvalues of chi(A) failed to pair into ±is; widen the clustering tolerance".into(),
        ));
    }

    let spectral_projection = |members: &[usize]| -> Result<QMatrix, LinalgError> {
        let mut p = CMatrix::zeros(2 * n);
        for &k in members {
            for i in 0..2 * n {
                let vi = eig.vectors.get(i, k);
                for j in 0..2 * n {
                    let v = p.get(i, j) + vi * eig.vectors.get(j, k).conj();
                    p.set(i, j, v);
                }
            }
        }
        chi_inv(&p)
    };

    let mut radii = Vec::new();
    let mut projections = Vec::new();
    if !kernel.is_empty() {
        radii.push(0.0);
        projections.push(spectral_projection(&kernel)?);
    }
    for (_, members) in &clusters {
        let mean = members.iter().map(|&k| lam[k].abs()).sum::<f64>() / members.len() as f64;
        radii.push(mean);
        projections.push(spectral_projection(members)?);
    }

    // Away from the kernel J is forced: chi(A) acts as -i*sign(lambda) on
    // each eigenvector of i*chi(A), so chi(J) = sum -i*sign(lambda) v v*.
    let mut jc = CMatrix::zeros(2 * n);
    for &k in order.iter() {
        if lam[k].abs() <= ctol || scale == 0.0 {
            continue;
        }
        let c = Complex64::new(0.0, -lam[k].signum());
        for i in 0..2 * n {
            let vi = eig.vectors.get(i, k);
            for j in 0..2 * n {
                let v = jc.get(i, j) + c * vi * eig.vectors.get(j, k).conj();
                jc.set(i, j, v);
            }
        }
    }
    let mut j_op = chi_inv(&jc)?;
    if !kernel.is_empty() {
        let e0 = &projections[0];
        let basis = orthonormal_range_basis(e0, kernel.len() / 2)?;
        for u in &basis {
            for i in 0..n {
                for j in 0..n {
                    let v = j_op.get(i, j) + u.get(i) * Quaternion::I1 * u.get(j).conj();
                    j_op.set(i, j, v);
                }
            }
        }
    }

    SpectralSystemFD::new(radii, projections, j_op)
}

/// Orthonormal basis of the range of a projection, by modified Gram-Schmidt
/// over the columns in index order (deterministic).
fn orthonormal_range_basis(p: &QMatrix, expected_rank: usize) -> Result<Vec<QVector>, LinalgError> {
    let n = p.dim();
    let mut basis: Vec<QVector> = Vec::new();
    for j in 0..n {
        let mut v = p.column(j);
        for _ in 0..2 {
            for u in &basis {
                let coef = v.inner(u);
                v = &v - &u.scale_right(coef);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v.scale(1.0 / norm));
        }
        if basis.len() == expected_rank {
            break;
        }
    }
    if basis.len() != expected_rank {
        return Err(LinalgError::Numeric(format!(
            "projection rank {} does not match expected {}",
            basis.len(),
            expected_rank
        )));
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::Quaternion as Q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn one_by_one(q: Q) -> QMatrix {
        QMatrix::from_rows(vec![vec![q]]).unwrap()
    }

    #[test]
    fn adjoint_examples() {
        let a = one_by_one(Q::I1);
        assert_eq!(a.adjoint().get(0, 0), -Q::I1);
        let id = QMatrix::identity(3);
        assert_eq!(id.adjoint(), id);
    }

    #[test]
    fn adjoint_moves_across_the_inner_product() {
        let mut r = rng(11);
        let a = QMatrix::random(3, &mut r);
        let x = QVector::random(3, &mut r);
        let y = QVector::random(3, &mut r);
        let lhs = (&a * &x).inner(&y);
        let rhs = x.inner(&(&a.adjoint() * &y));
        assert!(lhs.dist(rhs) <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn inner_product_sesquilinearity() {
        let mut r = rng(12);
        let x = QVector::random(4, &mut r);
        let y = QVector::random(4, &mut r);
        let p = Q::new(0.3, -0.7, 0.2, 0.9);
        assert!(x.scale_right(p).inner(&y).dist(x.inner(&y) * p) <= 1e-13);
        assert!(x.inner(&y.scale_right(p)).dist(p.conj() * x.inner(&y)) <= 1e-13);
        let xx = x.inner(&x);
        assert!(xx.im().norm() <= 1e-13);
        assert!(xx.re() >= 0.0);
    }

    #[test]
    fn chi_examples() {
        let c = chi(&one_by_one(Q::ONE));
        assert!(c.sub(&CMatrix::identity(2)).max_abs() <= 1e-15);

        let c = chi(&one_by_one(Q::I2));
        assert_eq!(c.get(0, 0), Complex64::ZERO);
        assert_eq!(c.get(0, 1), Complex64::ONE);
        assert_eq!(c.get(1, 0), -Complex64::ONE);
        assert_eq!(c.get(1, 1), Complex64::ZERO);

        let prod = chi(&one_by_one(Q::I1)).mul(&chi(&one_by_one(Q::I2)));
        assert!(prod.sub(&chi(&one_by_one(Q::I3))).max_abs() <= 1e-15);
    }

    #[test]
    fn chi_is_a_homomorphism_on_random_pairs() {
        let mut r = rng(13);
        for _ in 0..100 {
            let a = QMatrix::random(3, &mut r);
            let b = QMatrix::random(3, &mut r);
            let lhs = chi(&(&a * &b));
            let rhs = chi(&a).mul(&chi(&b));
            assert!(lhs.sub(&rhs).max_abs() <= 1e-12 * 3.0);
            let sum = chi(&(&a + &b));
            assert!(sum.sub(&chi(&a)).sub(&chi(&b)).max_abs() <= 1e-14);
            assert!(chi(&a.adjoint()).sub(&chi(&a).adjoint()).max_abs() == 0.0);
        }
    }

    #[test]
    fn chi_round_trip() {
        let mut r = rng(14);
        let a = QMatrix::random(5, &mut r);
        let back = chi_inv(&chi(&a)).unwrap();
        assert!((&back - &a).max_abs() == 0.0);
    }

    #[test]
    fn psd_examples() {
        let rep = is_psd(&QMatrix::identity(2), 1e-9).unwrap();
        assert!(rep.psd);

        // [[1, -i1], [i1, 1]]: doubly degenerate eigenvalues 0 and 2.
        let h = QMatrix::from_rows(vec![vec![Q::ONE, -Q::I1], vec![Q::I1, Q::ONE]]).unwrap();
        let eig = hermitian_eigen(&chi(&h), 1e-12).unwrap();
        let want = [0.0, 0.0, 2.0, 2.0];
        for (got, want) in eig.eigenvalues.iter().zip(want.iter()) {
            assert!((got - want).abs() <= 1e-12);
        }
        let rep = is_psd(&h, 1e-9).unwrap();
        assert!(rep.psd);
        assert!(rep.min_eigenvalue.abs() <= 1e-12);

        let m = QMatrix::from_rows(vec![
            vec![Q::from_real(1.0), Q::from_real(-3.0)],
            vec![Q::from_real(-3.0), Q::from_real(1.0)],
        ])
        .unwrap();
        let rep = is_psd(&m, 1e-9).unwrap();
        assert!(!rep.psd);
        assert!((rep.min_eigenvalue + 2.0).abs() <= 1e-12);
    }

    #[test]
    fn psd_transfer_on_random_instances() {
        let mut r = rng(15);
        for _ in 0..20 {
            let b = QMatrix::random(4, &mut r);
            let h = &b.adjoint() * &b;
            let rep = is_psd(&h, 1e-9 * (1.0 + h.max_abs())).unwrap();
            assert!(rep.psd, "B*B must be PSD, got min {}", rep.min_eigenvalue);
        }
    }

    #[test]
    fn expm_examples() {
        let u = expm_asa(&QMatrix::zeros(2), 1.7).unwrap();
        assert!((&u - &QMatrix::identity(2)).max_abs() <= 1e-14);

        let u = expm_asa(&one_by_one(Q::I1), std::f64::consts::PI).unwrap();
        assert!(u.get(0, 0).dist(-Q::ONE) <= 1e-14);
    }

    #[test]
    fn expm_group_law_and_unitarity() {
        let mut r = rng(16);
        for _ in 0..10 {
            let a = QMatrix::random_anti_self_adjoint(4, &mut r);
            let s = r.random_range(-3.0..3.0);
            let t = r.random_range(-3.0..3.0);
            let us = expm_asa(&a, s).unwrap();
            let ut = expm_asa(&a, t).unwrap();
            let ust = expm_asa(&a, s + t).unwrap();
            assert!((&(&us * &ut) - &ust).max_abs() <= 1e-10);
            let unit = (&(&ut.adjoint() * &ut) - &QMatrix::identity(4)).max_abs();
            assert!(unit <= 1e-10);
        }
    }

    #[test]
    fn expm_lipschitz_in_time() {
        // ||U(s)x - U(t)x|| <= ||A|| |s-t| ||x||.
        let mut r = rng(17);
        let a = QMatrix::random_anti_self_adjoint(4, &mut r);
        let norm = a.operator_norm().unwrap();
        let x = QVector::random(4, &mut r);
        for _ in 0..20 {
            let s = r.random_range(-4.0..4.0);
            let t = r.random_range(-4.0..4.0);
            let us = expm_asa(&a, s).unwrap();
            let ut = expm_asa(&a, t).unwrap();
            let lhs = (&(&us * &x) - &(&ut * &x)).norm();
            assert!(lhs <= norm * (s - t).abs() * x.norm() + 1e-10);
        }
    }

    #[test]
    fn generator_fd_examples() {
        let zero = QMatrix::zeros(2);
        let g = generator_fd(|t| expm_asa(&zero, t).unwrap(), &QVector::basis(2, 0), 1e-3);
        assert!(g.norm() <= 1e-12);

        let a = one_by_one(Q::I1);
        let h = 1e-4;
        let g = generator_fd(|t| expm_asa(&a, t).unwrap(), &QVector::basis(1, 0), h);
        assert!(g.get(0).dist(Q::I1) <= h);
    }

    #[test]
    fn generator_fd_is_first_order() {
        let mut r = rng(18);
        let mut ratios = Vec::new();
        for _ in 0..8 {
            let a = QMatrix::random_anti_self_adjoint(3, &mut r);
            let eig = asa_eigen(&a, 1e-9).unwrap();
            let u = |t: f64| expm_from_eigen(&eig, t).unwrap();
            let x = QVector::random(3, &mut r);
            let exact = &a * &x;
            let h = 1e-3;
            let e1 = (&generator_fd(&u, &x, h) - &exact).norm();
            let e2 = (&generator_fd(&u, &x, h / 2.0) - &exact).norm();
            ratios.push(e1 / e2);
        }
        let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((1.8..=2.2).contains(&avg), "halving ratio {avg}");
    }

    #[test]
    fn spectral_decompose_single_unit() {
        let s = spectral_decompose_asa(&one_by_one(Q::I1), 1e-10).unwrap();
        assert_eq!(s.radii(), &[1.0]);
        assert!((&s.projections()[0] - &QMatrix::identity(1)).max_abs() <= 1e-12);
        assert!(s.j_op().get(0, 0).dist(Q::I1) <= 1e-12);
        s.validate(1e-10).unwrap();
        assert!((&s.reconstruct() - &one_by_one(Q::I1)).max_abs() <= 1e-12);
    }

    #[test]
    fn spectral_decompose_zero_operator() {
        let s = spectral_decompose_asa(&QMatrix::zeros(2), 1e-10).unwrap();
        assert_eq!(s.radii(), &[0.0]);
        assert!((&s.projections()[0] - &QMatrix::identity(2)).max_abs() <= 1e-12);
        // Kernel convention: right multiplication by i1.
        let want = QMatrix::diagonal(&[Q::I1, Q::I1]);
        assert!((s.j_op() - &want).max_abs() <= 1e-12);
        s.validate(1e-10).unwrap();
    }

    #[test]
    fn spectral_decompose_random_reconstruction() {
        let mut r = rng(19);
        for trial in 0..15 {
            let a = QMatrix::random_anti_self_adjoint(4, &mut r);
            let s = spectral_decompose_asa(&a, 1e-10).unwrap();
            s.validate(1e-10).unwrap();
            let resid = (&s.reconstruct() - &a).max_abs();
            assert!(resid <= 1e-10, "trial {trial}: residual {resid}");
        }
    }

    #[test]
    fn spectral_decompose_with_kernel() {
        // Singular anti-self-adjoint operator: one zero block, one rotation.
        let mut a = QMatrix::zeros(3);
        a.set(0, 0, Q::I2.scale(0.8));
        let s = spectral_decompose_asa(&a, 1e-10).unwrap();
        assert_eq!(s.radii().len(), 2);
        assert_eq!(s.radii()[0], 0.0);
        assert!((s.radii()[1] - 0.8).abs() <= 1e-12);
        s.validate(1e-10).unwrap();
        assert!((&s.reconstruct() - &a).max_abs() <= 1e-12);
        // J restricted to the kernel squares to -1 and commutes with E_0.
        let j0e = &s.j_zero() * s.e_zero().unwrap();
        assert!(j0e.max_abs() <= 1e-12);
    }

    #[test]
    fn rejects_non_anti_self_adjoint() {
        let a = QMatrix::identity(2);
        assert!(matches!(
            expm_asa(&a, 1.0),
            Err(LinalgError::NotAntiSelfAdjoint { .. })
        ));
        assert!(matches!(
            spectral_decompose_asa(&a, 1e-10),
            Err(LinalgError::NotAntiSelfAdjoint { .. })
        ));
    }

    #[test]
    fn qmatrix_serde_round_trip() {
        let mut r = rng(20);
        let a = QMatrix::random(3, &mut r);
        let json = serde_json::to_string(&a).unwrap();
        let back: QMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }
}
