//! Atomic measures on the pure-imaginary 3-space and slice-condensed
//! quaternion-valued measures on the nonnegative half-line, with the
//! transports between them.
//!
//! A finite atomic quaternion-valued measure on the half-line is
//! slice-condensed exactly when every atom value satisfies `Re >= |Im|` and
//! the atom at radius zero (if any) is real. Sufficiency is witnessed by
//! [`lift`]; necessity follows from `|∫ x/|x| dΓ| <= ∫ dΓ` on each radius
//! shell. [`validate_slice`] reports the per-atom margins of this cone
//! condition, and the estimator uses the same cone as its feasible set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, QMatrix, QVector, SpectralSystemFD};
use crate::quat::{ImaginaryQuaternion, Quaternion};

/// Radii closer than `1e-9 * (1 + max radius)` are merged into one atom.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

/// Default slack accepted when checking the cone condition.
pub const DEFAULT_CONE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("negative weight {weight} at atom {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("negative radius {radius} at atom {index}")]
    NegativeRadius { index: usize, radius: f64 },
    #[error("non-finite value at atom {index}")]
    NonFinite { index: usize },
    #[error(
        "cone violation at radius {radius}: Re = {re}, |Im| = {im_norm} (slice-condensed \
         measures need Re >= |Im|, with a real atom at radius 0)"
    )]
    ConeViolation { radius: f64, re: f64, im_norm: f64 },
    #[error("invalid spectral system: {reason}")]
    InvalidSpectralSystem { reason: String },
}

/// Weighted atom of a measure on the pure-imaginary 3-space.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaAtom {
    #[serde(rename = "x")]
    pub point: ImaginaryQuaternion,
    #[serde(rename = "w")]
    pub weight: f64,
}

/// Finite nonnegative atomic measure on the pure-imaginary 3-space.
///
/// Duplicate points are merged at construction (weights summed). JSON shape:
/// `{"atoms": [{"x": [x1,x2,x3], "w": w}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGamma", into = "RawGamma")]
pub struct ImaginaryAtomicMeasure {
    atoms: Vec<GammaAtom>,
}

#[derive(Serialize, Deserialize)]
struct RawGamma {
    atoms: Vec<GammaAtom>,
}

impl From<ImaginaryAtomicMeasure> for RawGamma {
    fn from(g: ImaginaryAtomicMeasure) -> Self {
        RawGamma { atoms: g.atoms }
    }
}

impl TryFrom<RawGamma> for ImaginaryAtomicMeasure {
    type Error = String;

    fn try_from(raw: RawGamma) -> Result<Self, String> {
        ImaginaryAtomicMeasure::new(raw.atoms).map_err(|e| e.to_string())
    }
}

impl ImaginaryAtomicMeasure {
    pub fn new(atoms: Vec<GammaAtom>) -> Result<Self, MeasureError> {
        for (index, atom) in atoms.iter().enumerate() {
            if !atom.weight.is_finite() || !atom.point.is_finite() {
                return Err(MeasureError::NonFinite { index });
            }
            if atom.weight < 0.0 {
                return Err(MeasureError::NegativeWeight {
                    index,
                    weight: atom.weight,
                });
            }
        }
        let mut merged: Vec<GammaAtom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.iter_mut().find(|a| a.point == atom.point) {
                Some(existing) => existing.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        Ok(ImaginaryAtomicMeasure { atoms: merged })
    }

    /// Convenience constructor from `([x1,x2,x3], w)` pairs.
    pub fn from_points(points: &[([f64; 3], f64)]) -> Result<Self, MeasureError> {
        ImaginaryAtomicMeasure::new(
            points
                .iter()
                .map(|&(x, w)| GammaAtom {
                    point: x.into(),
                    weight: w,
                })
                .collect(),
        )
    }

    pub fn empty() -> Self {
        ImaginaryAtomicMeasure { atoms: vec![] }
    }

    pub fn atoms(&self) -> &[GammaAtom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Measure sum (atoms concatenated, duplicates merged).
    pub fn plus(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        ImaginaryAtomicMeasure::new(atoms).expect("sum of valid measures is valid")
    }
}

/// Atom of a quaternion-valued measure on the half-line.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceAtom {
    #[serde(rename = "r")]
    pub radius: f64,
    #[serde(rename = "v")]
    pub value: Quaternion,
}

/// Finite quaternion-valued atomic measure on the half-line, with atoms kept
/// in ascending radius order and nearby radii merged.
///
/// The cone condition (`Re >= |Im|` per atom, real at radius 0) that
/// characterizes slice-condensed measures is *not* enforced here — invalid
/// measures must be representable so they can be reported and rejected — but
/// it is checked by [`validate_slice`] and by every operation that requires
/// it. JSON shape: `{"atoms": [{"r": r, "v": [q0,q1,q2,q3]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSlice", into = "RawSlice")]
pub struct SliceMeasure {
    atoms: Vec<SliceAtom>,
}

#[derive(Serialize, Deserialize)]
struct RawSlice {
    atoms: Vec<SliceAtom>,
}

impl From<SliceMeasure> for RawSlice {
    fn from(m: SliceMeasure) -> Self {
        RawSlice { atoms: m.atoms }
    }
}

impl TryFrom<RawSlice> for SliceMeasure {
    type Error = String;

    fn try_from(raw: RawSlice) -> Result<Self, String> {
        SliceMeasure::new(raw.atoms).map_err(|e| e.to_string())
    }
}

impl SliceMeasure {
    pub fn new(atoms: Vec<SliceAtom>) -> Result<Self, MeasureError> {
        SliceMeasure::with_merge_tol(atoms, DEFAULT_MERGE_TOL)
    }

    /// Like [`SliceMeasure::new`] with an explicit radius-merging tolerance:
    /// radii within `merge_tol * (1 + max radius)` collapse into one atom.
    pub fn with_merge_tol(mut atoms: Vec<SliceAtom>, merge_tol: f64) -> Result<Self, MeasureError> {
        for (index, atom) in atoms.iter().enumerate() {
            if !atom.radius.is_finite() || !atom.value.is_finite() {
                return Err(MeasureError::NonFinite { index });
            }
            if atom.radius < 0.0 {
                return Err(MeasureError::NegativeRadius {
                    index,
                    radius: atom.radius,
                });
            }
        }
        atoms.sort_by(|a, b| a.radius.partial_cmp(&b.radius).unwrap());
        let max_radius = atoms.last().map_or(0.0, |a| a.radius);
        let tol = merge_tol * (1.0 + max_radius);
        let mut merged: Vec<SliceAtom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if atom.radius - last.radius <= tol => {
                    last.value += atom.value;
                }
                _ => merged.push(atom),
            }
        }
        Ok(SliceMeasure { atoms: merged })
    }

    /// Convenience constructor from `(radius, [q0,q1,q2,q3])` pairs.
    pub fn from_pairs(pairs: &[(f64, [f64; 4])]) -> Result<Self, MeasureError> {
        SliceMeasure::new(
            pairs
                .iter()
                .map(|&(radius, v)| SliceAtom {
                    radius,
                    value: v.into(),
                })
                .collect(),
        )
    }

    pub fn empty() -> Self {
        SliceMeasure { atoms: vec![] }
    }

    pub fn atoms(&self) -> &[SliceAtom] {
        &self.atoms
    }

    /// Real part, kept on the same radii.
    pub fn re_part(&self) -> SliceMeasure {
        SliceMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| SliceAtom {
                    radius: a.radius,
                    value: Quaternion::from_real(a.value.re()),
                })
                .collect(),
        }
    }

    /// `mu - Re mu`: the imaginary part, kept on the same radii.
    pub fn im_part(&self) -> SliceMeasure {
        SliceMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| SliceAtom {
                    radius: a.radius,
                    value: Quaternion::from(a.value.im()),
                })
                .collect(),
        }
    }

    /// Sum of atom value norms.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.value.norm()).sum()
    }

    /// Total mass of the real part; equals the synthesized function at 0.
    pub fn total_mass_re(&self) -> f64 {
        self.atoms.iter().map(|a| a.value.re()).sum()
    }

    /// Measure sum, merging radii.
    pub fn plus(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        SliceMeasure::new(atoms).expect("sum of valid measures is valid")
    }

    pub fn scale(&self, c: f64) -> Self {
        SliceMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| SliceAtom {
                    radius: a.radius,
                    value: a.value.scale(c),
                })
                .collect(),
        }
    }

    /// Equality up to `tol`: radii matched within the merge tolerance,
    /// values within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_atom_distance(other) <= tol
    }

    /// Largest value distance after pairing atoms by radius; atoms without a
    /// partner within the merge tolerance compare against zero.
    pub fn max_atom_distance(&self, other: &Self) -> f64 {
        let max_r = self
            .atoms
            .iter()
            .chain(other.atoms.iter())
            .map(|a| a.radius)
            .fold(0.0f64, f64::max);
        let rtol = DEFAULT_MERGE_TOL * (1.0 + max_r);
        let mut dist = 0.0f64;
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(a), Some(b)) if (a.radius - b.radius).abs() <= rtol => {
                    dist = dist.max(a.value.dist(b.value));
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.radius < b.radius => {
                    dist = dist.max(a.value.norm());
                    i += 1;
                }
                (_, Some(b)) => {
                    dist = dist.max(b.value.norm());
                    j += 1;
                }
                (Some(a), None) => {
                    dist = dist.max(a.value.norm());
                    i += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        dist
    }

    /// Checks the cone condition with slack `tol`.
    pub fn is_cone_valid(&self, tol: f64) -> bool {
        validate_slice(self, tol).pass
    }

    pub(crate) fn require_cone_valid(&self, tol: f64) -> Result<(), MeasureError> {
        for atom in &self.atoms {
            let re = atom.value.re();
            let im_norm = atom.value.im().norm();
            let violates = if atom.radius == 0.0 {
                re < -tol || im_norm > tol
            } else {
                re < im_norm - tol
            };
            if violates {
                return Err(MeasureError::ConeViolation {
                    radius: atom.radius,
                    re,
                    im_norm,
                });
            }
        }
        Ok(())
    }
}

/// Margin report for one atom of [`validate_slice`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AtomMargin {
    pub radius: f64,
    pub re: f64,
    pub im_norm: f64,
    /// `Re - |Im|`; nonnegative for atoms inside the cone.
    pub margin: f64,
    pub ok: bool,
}

/// Cone-condition report from [`validate_slice`].
#[derive(Clone, Debug, Serialize)]
pub struct SliceValidation {
    pub atoms: Vec<AtomMargin>,
    pub pass: bool,
}

/// Cone-check slack scaled to a measure: `DEFAULT_CONE_TOL` relative to its
/// total variation.
pub fn synth_cone_tol(mu: &SliceMeasure) -> f64 {
    DEFAULT_CONE_TOL * (1.0 + mu.total_variation())
}

/// Per-atom check of the slice-condensed cone characterization:
/// `Re >= 0`, `Re >= |Im|`, and a real value at radius 0. Report-only.
pub fn validate_slice(mu: &SliceMeasure, tol: f64) -> SliceValidation {
    let atoms: Vec<AtomMargin> = mu
        .atoms()
        .iter()
        .map(|a| {
            let re = a.value.re();
            let im_norm = a.value.im().norm();
            let margin = re - im_norm;
            let ok = if a.radius == 0.0 {
                re >= -tol && im_norm <= tol
            } else {
                re >= -tol && margin >= -tol
            };
            AtomMargin {
                radius: a.radius,
                re,
                im_norm,
                margin,
                ok,
            }
        })
        .collect();
    let pass = atoms.iter().all(|a| a.ok);
    SliceValidation { atoms, pass }
}

/// Push-forward of a measure on imaginary 3-space along `x -> |x|`, with the
/// direction density folded in: the atom at radius `r` receives
/// `sum_{|x_k| = r} w_k * (1 + x_k/|x_k|)`, where `x/|x| = 0` at the origin.
///
/// The output always satisfies the cone condition.
pub fn pushforward(gamma: &ImaginaryAtomicMeasure) -> SliceMeasure {
    let atoms = gamma
        .atoms()
        .iter()
        .map(|a| {
            let u = a.point.unit_or_zero();
            SliceAtom {
                radius: a.point.norm(),
                value: (Quaternion::ONE + Quaternion::from(u)).scale(a.weight),
            }
        })
        .collect();
    SliceMeasure::new(atoms).expect("pushforward atoms are finite with nonnegative radii")
}

/// Constructive inverse of [`pushforward`]: produces a measure on imaginary
/// 3-space whose push-forward reproduces `mu` (the witness that a measure
/// inside the cone is slice-condensed).
///
/// Per atom `r > 0` with value `a + v`: if `v = 0`, two atoms
/// `(±r·(1,0,0), a/2)`; otherwise atoms `(r·u, (a+|v|)/2)` and
/// `(-r·u, (a-|v|)/2)` with `u = v/|v|`, dropping the second when its weight
/// vanishes. The atom at radius 0 maps to the origin with weight `Re`.
///
/// The witness is not unique; only `pushforward(lift(mu)) = mu` is promised.
pub fn lift(mu: &SliceMeasure, tol: f64) -> Result<ImaginaryAtomicMeasure, MeasureError> {
    mu.require_cone_valid(tol)?;
    let mut atoms = Vec::new();
    for atom in mu.atoms() {
        let a = atom.value.re();
        let v = atom.value.im();
        if atom.radius == 0.0 {
            atoms.push(GammaAtom {
                point: ImaginaryQuaternion::ZERO,
                weight: a.max(0.0),
            });
            continue;
        }
        let vn = v.norm();
        if vn == 0.0 {
            let u = ImaginaryQuaternion::new(atom.radius, 0.0, 0.0);
            atoms.push(GammaAtom {
                point: u,
                weight: a / 2.0,
            });
            atoms.push(GammaAtom {
                point: -u,
                weight: a / 2.0,
            });
        } else {
            let u = v.unit_or_zero();
            let w_plus = (a + vn) / 2.0;
            let w_minus = (a - vn) / 2.0;
            atoms.push(GammaAtom {
                point: u.scale(atom.radius),
                weight: w_plus,
            });
            if w_minus > 0.0 {
                atoms.push(GammaAtom {
                    point: u.scale(-atom.radius),
                    weight: w_minus,
                });
            }
        }
    }
    // Cone slack can leave weights a hair below zero; clamp them.
    for atom in &mut atoms {
        if atom.weight < 0.0 {
            atom.weight = 0.0;
        }
    }
    ImaginaryAtomicMeasure::new(atoms)
}

/// The measure `<E alpha, alpha> + <J_0 E alpha, alpha>` attached to a
/// spectral system and a vector, one atom per radius.
///
/// `J_0 = J - J*E({0})` removes the kernel contribution, so the radius-0
/// atom (when present) is real. The output always satisfies the cone
/// condition.
pub fn measure_from_spectral_system(
    system: &SpectralSystemFD,
    alpha: &QVector,
    tol: f64,
) -> Result<SliceMeasure, MeasureError> {
    system
        .validate(tol)
        .map_err(|e| MeasureError::InvalidSpectralSystem {
            reason: e.to_string(),
        })?;
    let j0 = system.j_zero();
    let atoms = system
        .radii()
        .iter()
        .zip(system.projections().iter())
        .map(|(&radius, e)| {
            let ea = e * alpha;
            let value = ea.inner(alpha) + (&j0 * &ea).inner(alpha);
            SliceAtom { radius, value }
        })
        .collect();
    let mu = SliceMeasure::new(atoms)?;
    debug_assert!(
        mu.is_cone_valid(1e-10 * (1.0 + alpha.norm() * alpha.norm())),
        "spectral-system measures lie in the cone"
    );
    Ok(mu)
}

/// Explicit spectral system on quaternionic k-space witnessing that a
/// push-forward measure is of spectral-system type: coordinates carry the
/// atoms of `gamma`, each radius projection selects its coordinates, `J`
/// multiplies coordinate values on the left by the atom direction (by `i1`
/// on the kernel), and `alpha` holds the square-rooted weights.
///
/// `measure_from_spectral_system` of the result equals `pushforward(gamma)`.
pub fn spectral_witness_from_gamma(
    gamma: &ImaginaryAtomicMeasure,
) -> Result<(SpectralSystemFD, QVector), MeasureError> {
    let atoms = gamma.atoms();
    let k = atoms.len();
    if k == 0 {
        return Err(MeasureError::InvalidSpectralSystem {
            reason: "cannot build a spectral system on a 0-dimensional space".into(),
        });
    }
    let mut radii: Vec<f64> = atoms.iter().map(|a| a.point.norm()).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();

    let projections: Vec<QMatrix> = radii
        .iter()
        .map(|&r| {
            QMatrix::from_fn(k, |i, j| {
                if i == j && atoms[i].point.norm() == r {
                    Quaternion::ONE
                } else {
                    Quaternion::ZERO
                }
            })
        })
        .collect();
    let j_diag: Vec<Quaternion> = atoms
        .iter()
        .map(|a| {
            if a.point.norm() == 0.0 {
                Quaternion::I1
            } else {
                Quaternion::from(a.point.unit_or_zero())
            }
        })
        .collect();
    let j_op = QMatrix::diagonal(&j_diag);
    let alpha = QVector::new(
        atoms
            .iter()
            .map(|a| Quaternion::from_real(a.weight.sqrt()))
            .collect(),
    );
    let system = SpectralSystemFD::new(radii, projections, j_op).map_err(|e: LinalgError| {
        MeasureError::InvalidSpectralSystem {
            reason: e.to_string(),
        }
    })?;
    Ok((system, alpha))
}
