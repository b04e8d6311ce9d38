//! Quaternionic positive definite functions at desk scale.
//!
//! This crate realizes, with finite-dimensional operators and atomic
//! measures, the correspondence between
//!
//! * continuous quaternion-valued positive definite functions on the line,
//! * slice-condensed quaternion-valued measures on the nonnegative half-line,
//! * spectral systems `(E, J)` (a resolution of identity paired with a
//!   commuting unitary anti-self-adjoint operator), and
//! * weakly stationary quaternionic random processes.
//!
//! The pieces: [`quat`] holds scalar arithmetic, [`linalg`] right-linear
//! matrix algebra on quaternionic n-space together with spectral
//! decomposition of anti-self-adjoint operators, [`measures`] the two atomic
//! measure classes and the transports between them, [`bochner`] synthesis and
//! positive-definiteness verification, [`stone`] one-parameter unitary groups
//! and the end-to-end round trip, [`estimate`] cone-constrained spectral
//! estimation from samples, and [`process`] simulation and autocovariance
//! estimation of stationary quaternionic processes.

pub mod bochner;
pub mod estimate;
pub mod linalg;
pub mod measures;
pub mod process;
pub mod quat;
pub mod stone;

pub use bochner::{check_positive_definite, gram, synth_from_gamma, synth_from_slice, TimeGrid};
pub use estimate::{fit, FitConfig, FitResult};
pub use linalg::{QMatrix, QVector, SpectralSystemFD};
pub use measures::{lift, pushforward, ImaginaryAtomicMeasure, SliceMeasure};
pub use process::{simulate, ProcessEnsemble, ProcessSpec};
pub use quat::{ImaginaryQuaternion, Quaternion};
