//! Dense complex matrices and a cyclic Jacobi eigensolver for Hermitian
//! matrices.
//!
//! The solver uses a fixed row-cyclic sweep order, so results are
//! deterministic for a given input. Intended scale is a few hundred rows at
//! most.

use num_complex::Complex64;

use super::LinalgError;

/// Square complex matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::Numeric("matrix rows must form a square".into()));
        }
        let mut m = CMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &z) in row.iter().enumerate() {
                m.set(i, j, z);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.n + j] = z;
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        out
    }

    /// Multiply every entry by a complex scalar.
    pub fn scale(&self, c: Complex64) -> CMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= c;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude of `self - self*`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// the matching orthonormal eigenvectors as columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Reassemble `sum_k f(lambda_k) v_k v_k*`.
    pub fn assemble(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.vectors.dim();
        let mut out = CMatrix::zeros(n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let c = f(lam);
            if c == Complex64::ZERO {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors.get(i, k);
                if vi == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + c * vi * self.vectors.get(j, k).conj();
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi diagonalization of a complex Hermitian matrix.
///
/// `tol` bounds the accepted Hermitian defect of the input; the returned
/// eigenvalues are ascending and the eigenvectors orthonormal to machine
/// precision times the matrix scale.
pub fn hermitian_eigen(h: &CMatrix, tol: f64) -> Result<HermitianEigen, LinalgError> {
    let defect = h.hermitian_defect();
    if defect > tol {
        return Err(LinalgError::NotHermitian { defect });
    }
    let n = h.dim();
    if n == 0 {
        return Ok(HermitianEigen {
            eigenvalues: vec![],
            vectors: CMatrix::zeros(0),
        });
    }

    let mut a = h.clone();
    // Symmetrize once so rounding in the input does not bias the sweeps.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (a.get(i, j) + a.get(j, i).conj()).scale(0.5);
            a.set(i, j, m);
            a.set(j, i, m.conj());
        }
        let d = a.get(i, i).re;
        a.set(i, i, Complex64::new(d, 0.0));
    }
    let mut v = CMatrix::identity(n);
    let scale = a.fro_norm().max(f64::MIN_POSITIVE);
    let target = f64::EPSILON * scale;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a.get(i, j).norm_sqr();
            }
        }
        if off.sqrt() <= target {
            return Ok(sorted(a, v));
        }

        for p in 0..n {
            for q in (p + 1)..n {
                let beta = a.get(p, q);
                let b = beta.norm();
                if b <= f64::EPSILON * scale / (n as f64) {
                    continue;
                }
                let phase = beta / b;
                let alpha = a.get(p, p).re;
                let gamma = a.get(q, q).re;
                let tau = (gamma - alpha) / (2.0 * b);
                let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
                let tangent = sign / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + tangent * tangent).sqrt();
                let s = phase * (tangent * c);
                let s_conj = s.conj();

                // H <- H J with J = [[c, s], [-conj(s), c]] on columns (p, q).
                for k in 0..n {
                    let hkp = a.get(k, p);
                    let hkq = a.get(k, q);
                    a.set(k, p, hkp * c - hkq * s_conj);
                    a.set(k, q, hkp * s + hkq * c);
                }
                // H <- J* H on rows (p, q).
                for k in 0..n {
                    let hpk = a.get(p, k);
                    let hqk = a.get(q, k);
                    a.set(p, k, hpk * c - hqk * s);
                    a.set(q, k, hpk * s_conj + hqk * c);
                }
                // The pivot is analytically zero; keep the diagonal real.
                a.set(p, q, Complex64::ZERO);
                a.set(q, p, Complex64::ZERO);
                a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
                a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c - vkq * s_conj);
                    v.set(k, q, vkp * s + vkq * c);
                }
            }
        }
    }

    Err(LinalgError::Numeric(
        "Jacobi eigensolver did not converge".into(),
    ))
}

fn sorted(a: CMatrix, v: CMatrix) -> HermitianEigen {
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).re.partial_cmp(&a.get(j, j).re).unwrap());
    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = CMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        eigenvalues.push(a.get(k, k).re);
        for row in 0..n {
            vectors.set(row, col, v.get(row, k));
        }
    }
    HermitianEigen {
        eigenvalues,
        vectors,
    }
}
