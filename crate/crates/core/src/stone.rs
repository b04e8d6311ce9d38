//! One-parameter unitary groups on quaternionic n-space and the end-to-end
//! identity between group matrix elements and measure synthesis.
//!
//! Every anti-self-adjoint generator `A` yields the group
//! `U(t) = e^{tA}` with `U(0) = I`, `U(s+t) = U(s)U(t)`, each `U(t)`
//! unitary. The matrix element `phi(t) = <U(t) alpha, alpha>` is a
//! continuous positive definite function, and extracting the spectral
//! system of `A` and forming its measure reproduces `phi` through the
//! synthesis formula — [`stone_roundtrip`] measures the deviation between
//! the two routes.
//!
//! Infinite-dimensional completions are out of scope: the role of the
//! function space carried by a positive definite function is played here by
//! quaternionic n-space with a chosen vector `alpha`, which is where all
//! finite Gram data lives.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bochner::{synth_from_slice_unchecked, TimeGrid};
use crate::linalg::{
    asa_eigen, expm_from_eigen, spectral_decompose_asa, HermitianEigen, LinalgError, QMatrix,
    QVector,
};
use crate::measures::{measure_from_spectral_system, MeasureError, SliceMeasure};
use crate::quat::Quaternion;

#[derive(Debug, Error)]
pub enum StoneError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// One-parameter unitary group `t -> e^{tA}` with anti-self-adjoint
/// generator `A`, evaluated through a cached eigendecomposition of
/// `chi(A)`.
#[derive(Clone, Debug)]
pub struct UnitaryGroupFD {
    generator: QMatrix,
    eigen: HermitianEigen,
}

impl UnitaryGroupFD {
    /// Validates anti-self-adjointness within `tol` (relative to the entry
    /// scale) and prepares the exponential.
    pub fn new(generator: QMatrix, tol: f64) -> Result<Self, LinalgError> {
        let eigen = asa_eigen(&generator, tol)?;
        Ok(UnitaryGroupFD { generator, eigen })
    }

    pub fn generator(&self) -> &QMatrix {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    /// `U(t) = e^{tA}`.
    pub fn at(&self, t: f64) -> QMatrix {
        expm_from_eigen(&self.eigen, t).expect("cached eigendecomposition has even dimension")
    }
}

/// Matrix element `phi(t) = <U(t) alpha, alpha>`.
pub fn phi_from_group(group: &UnitaryGroupFD, alpha: &QVector, t: f64) -> Quaternion {
    (&group.at(t) * alpha).inner(alpha)
}

/// One tested time of a [`StoneReport`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TimeDeviation {
    pub t: f64,
    pub deviation: f64,
}

/// Result of [`stone_roundtrip`].
#[derive(Clone, Debug, Serialize)]
pub struct StoneReport {
    /// Radii of the extracted spectral system.
    pub radii: Vec<f64>,
    /// Measure `<E alpha, alpha> + <J_0 E alpha, alpha>`.
    pub measure: SliceMeasure,
    pub per_time: Vec<TimeDeviation>,
    pub max_deviation: f64,
    /// Contract: `max_deviation <= 1e-9 * |alpha|^2 * (1 + max |t|)`.
    pub bound: f64,
    pub pass: bool,
}

/// Compares `<U(t) alpha, alpha>` against the synthesis from the measure of
/// the extracted spectral system, over a grid of times.
pub fn stone_roundtrip(
    generator: &QMatrix,
    alpha: &QVector,
    times: &TimeGrid,
    tol: f64,
) -> Result<StoneReport, StoneError> {
    let group = UnitaryGroupFD::new(generator.clone(), tol)?;
    let system = spectral_decompose_asa(generator, tol)?;
    let measure = measure_from_spectral_system(&system, alpha, 1e-8)?;
    let mut per_time = Vec::with_capacity(times.len());
    let mut max_deviation = 0.0f64;
    let mut max_t = 0.0f64;
    for &t in times.times() {
        let lhs = phi_from_group(&group, alpha, t);
        let rhs = synth_from_slice_unchecked(&measure, t);
        let deviation = lhs.dist(rhs);
        max_deviation = max_deviation.max(deviation);
        max_t = max_t.max(t.abs());
        per_time.push(TimeDeviation { t, deviation });
    }
    let norm_sq = alpha.norm() * alpha.norm();
    let bound = 1e-9 * norm_sq * (1.0 + max_t);
    Ok(StoneReport {
        radii: system.radii().to_vec(),
        measure,
        per_time,
        max_deviation,
        bound,
        pass: max_deviation <= bound,
    })
}

/// Result of [`group_law_audit`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GroupLawReport {
    pub trials: usize,
    pub max_group_law_defect: f64,
    pub max_unitarity_defect: f64,
    pub pass: bool,
}

/// Samples random pairs `(s, t)` in `[-5, 5]` and reports the largest
/// defects of `U(s)U(t) = U(s+t)` and `U(t)*U(t) = I`.
pub fn group_law_audit(
    group: &UnitaryGroupFD,
    trials: usize,
    tol: f64,
    seed: u64,
) -> GroupLawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let identity = QMatrix::identity(group.dim());
    let mut max_group = 0.0f64;
    let mut max_unit = 0.0f64;
    for _ in 0..trials {
        let s = rng.random_range(-5.0..5.0);
        let t = rng.random_range(-5.0..5.0);
        let us = group.at(s);
        let ut = group.at(t);
        let ust = group.at(s + t);
        max_group = max_group.max((&(&us * &ut) - &ust).max_abs());
        max_unit = max_unit.max((&(&ut.adjoint() * &ut) - &identity).max_abs());
    }
    GroupLawReport {
        trials,
        max_group_law_defect: max_group,
        max_unitarity_defect: max_unit,
        pass: max_group <= tol && max_unit <= tol,
    }
}
