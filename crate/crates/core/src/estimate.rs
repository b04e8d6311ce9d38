//! Spectral estimation: recover a slice-condensed measure on a fixed radius
//! grid from samples of a positive definite function, by cone-constrained
//! least squares.
//!
//! Unknowns are one `(a_k, b_k)` pair per grid radius, `a_k` real and `b_k`
//! a 3-vector, modeling `phi(t) = sum_k a_k cos(t r_k) + (b_k·i) sin(t r_k)`
//! where `(b·i) = b1 i1 + b2 i2 + b3 i3`. The four real components of the
//! residual decouple in the objective; they are coupled only through the
//! per-radius cone constraint `a_k >= |b_k|` (with `b_k = 0` forced at
//! `r_k = 0`), so the variables are optimized jointly by projected gradient
//! descent — solving the components separately and clipping would break the
//! monotone-descent property. The projection onto the cone is analytic:
//! keep the pair if `|b| <= a`, zero it if `a <= -|b|`, otherwise map to
//! `((a+|b|)/2)·(1, b/|b|)`.
//!
//! The estimator is a grid method: atoms off the radius grid are not
//! resolved, and refining the grid is the caller's loop. The fit starts at
//! zero (feasible) and is deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measures::{SliceAtom, SliceMeasure};
use crate::quat::Quaternion;

/// Safety factor applied to the power-iteration estimate so the step size
/// stays on the descent side of the Lipschitz constant.
const DESIGN_NORM_MARGIN: f64 = 1.005;

const POWER_ITERATIONS: usize = 80;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("radius grid must be nonempty")]
    EmptyGrid,
    #[error("at least one sample is required")]
    NoSamples,
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("negative radius {radius} in the grid")]
    NegativeRadius { radius: f64 },
}

/// Step-size rule for the projected gradient iteration.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// Fixed step `1/L` with `L` from [`design_norm`].
    #[default]
    FixedFromDesignNorm,
    /// Halve the step until the objective does not increase.
    Backtracking,
}

/// Configuration of [`fit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitConfig {
    /// Candidate radii; duplicates are merged before fitting.
    pub radius_grid: Vec<f64>,
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Iteration stops once the projected step moves no coordinate by more
    /// than `tol_residual * (1 + |x|_inf)`.
    pub tol_residual: f64,
    /// Atoms with real part below this are dropped from the output.
    pub prune_threshold: f64,
}

impl FitConfig {
    pub fn new(radius_grid: Vec<f64>) -> Self {
        FitConfig {
            radius_grid,
            max_iters: 20_000,
            step_rule: StepRule::default(),
            tol_residual: 1e-10,
            prune_threshold: 0.0,
        }
    }
}

/// Outcome of [`fit`]. The measure is feasible by construction: it passes
/// the cone validation with zero tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub measure: SliceMeasure,
    /// Root mean square of the quaternion residual norms over the samples.
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Per-radius unknowns.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct ConePoint {
    a: f64,
    b: [f64; 3],
}

impl ConePoint {
    fn b_norm(&self) -> f64 {
        (self.b[0] * self.b[0] + self.b[1] * self.b[1] + self.b[2] * self.b[2]).sqrt()
    }

    /// Euclidean projection onto `{(a, b) : a >= |b|}`.
    fn project(&mut self, force_real: bool) {
        if force_real {
            self.b = [0.0; 3];
            self.a = self.a.max(0.0);
            return;
        }
        let nb = self.b_norm();
        if nb <= self.a {
            // already feasible
        } else if self.a <= -nb {
            self.a = 0.0;
            self.b = [0.0; 3];
        } else {
            let m = (self.a + nb) / 2.0;
            let scale = m / nb;
            self.a = m;
            for c in &mut self.b {
                *c *= scale;
            }
        }
        // Guard against |b| creeping above a by one ulp after the scaling.
        let nb = self.b_norm();
        if nb > self.a {
            self.a = nb;
        }
    }

    fn max_abs_diff(&self, other: &ConePoint) -> f64 {
        let mut d = (self.a - other.a).abs();
        for c in 0..3 {
            d = d.max((self.b[c] - other.b[c]).abs());
        }
        d
    }

    fn max_abs(&self) -> f64 {
        self.a
            .abs()
            .max(self.b[0].abs())
            .max(self.b[1].abs())
            .max(self.b[2].abs())
    }
}

struct Design {
    /// `cos(t_j r_k)`, row-major over samples then radii.
    cos: Vec<f64>,
    /// `sin(t_j r_k)`.
    sin: Vec<f64>,
    n_samples: usize,
    n_radii: usize,
}

impl Design {
    fn build(times: &[f64], radii: &[f64]) -> Self {
        let n_samples = times.len();
        let n_radii = radii.len();
        let mut cos = Vec::with_capacity(n_samples * n_radii);
        let mut sin = Vec::with_capacity(n_samples * n_radii);
        for &t in times {
            for &r in radii {
                let (s, c) = (t * r).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Design {
            cos,
            sin,
            n_samples,
            n_radii,
        }
    }

    /// Residual `pred_j - y_j` at every sample for the current unknowns.
    fn residual(&self, x: &[ConePoint], targets: &[Quaternion], out: &mut [Quaternion]) {
        for (j, slot) in out.iter_mut().enumerate() {
            let row = j * self.n_radii;
            let mut acc = Quaternion::ZERO;
            for (k, p) in x.iter().enumerate() {
                let c = self.cos[row + k];
                let s = self.sin[row + k];
                acc += Quaternion::new(p.a * c, p.b[0] * s, p.b[1] * s, p.b[2] * s);
            }
            *slot = acc - targets[j];
        }
    }

    /// Gradient of `1/2 sum_j |pred_j - y_j|^2`.
    fn gradient(&self, residual: &[Quaternion], grad: &mut [ConePoint]) {
        for g in grad.iter_mut() {
            *g = ConePoint::default();
        }
        for (j, r) in residual.iter().enumerate() {
            let row = j * self.n_radii;
            for (k, g) in grad.iter_mut().enumerate() {
                let c = self.cos[row + k];
                let s = self.sin[row + k];
                g.a += c * r.q0;
                g.b[0] += s * r.q1;
                g.b[1] += s * r.q2;
                g.b[2] += s * r.q3;
            }
        }
    }
}

/// Upper estimate of the Lipschitz constant of the least-squares gradient:
/// the largest squared singular value over the cosine and sine design
/// blocks, by power iteration on their Gram matrices (with a small safety
/// margin so a fixed step of `1/L` descends monotonically).
pub fn design_norm(times: &[f64], radius_grid: &[f64]) -> f64 {
    let design = Design::build(times, radius_grid);
    let k = design.n_radii;
    if k == 0 || design.n_samples == 0 {
        return 0.0;
    }
    let gram_of = |cols: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; k * k];
        for j in 0..design.n_samples {
            let row = &cols[j * k..(j + 1) * k];
            for p in 0..k {
                for q in 0..k {
                    g[p * k + q] += row[p] * row[q];
                }
            }
        }
        g
    };
    let lc = power_iteration(&gram_of(&design.cos), k);
    let ls = power_iteration(&gram_of(&design.sin), k);
    lc.max(ls) * DESIGN_NORM_MARGIN
}

/// Largest eigenvalue of a symmetric PSD matrix, by power iteration from a
/// deterministic start vector.
fn power_iteration(g: &[f64], k: usize) -> f64 {
    let mut v = vec![1.0 / (k as f64).sqrt(); k];
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut w = vec![0.0; k];
        for p in 0..k {
            for q in 0..k {
                w[p] += g[p * k + q] * v[q];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = v.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>();
        for (x, y) in v.iter_mut().zip(w.iter()) {
            *x = y / norm;
        }
    }
    lambda.max(0.0)
}

fn objective(residual: &[Quaternion]) -> f64 {
    0.5 * residual.iter().map(|r| r.norm_sq()).sum::<f64>()
}

/// Least-squares recovery of a slice-condensed measure on the configured
/// radius grid from samples `(t, phi(t))`.
///
/// Duplicate sample times are averaged. Inputs outside the model class
/// (functions that are not positive definite) show up as residual, never as
/// a cone violation: the iterate is feasible at every step.
pub fn fit(samples: &[(f64, Quaternion)], config: &FitConfig) -> Result<FitResult, FitError> {
    if config.radius_grid.is_empty() {
        return Err(FitError::EmptyGrid);
    }
    if samples.is_empty() {
        return Err(FitError::NoSamples);
    }
    for (index, (t, v)) in samples.iter().enumerate() {
        if !t.is_finite() || !v.is_finite() {
            return Err(FitError::NonFinite { index });
        }
    }
    if let Some(&radius) = config.radius_grid.iter().find(|r| **r < 0.0) {
        return Err(FitError::NegativeRadius { radius });
    }

    // Average duplicate sample times.
    let mut ordered: Vec<(f64, Quaternion)> = samples.to_vec();
    ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut times: Vec<f64> = Vec::new();
    let mut targets: Vec<Quaternion> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for (t, v) in ordered {
        if times.last() == Some(&t) {
            let i = targets.len() - 1;
            targets[i] += v;
            counts[i] += 1;
        } else {
            times.push(t);
            targets.push(v);
            counts.push(1);
        }
    }
    for (v, &c) in targets.iter_mut().zip(counts.iter()) {
        *v = v.scale(1.0 / c as f64);
    }

    // Merge duplicate grid radii the same way slice measures do.
    let mut radii = config.radius_grid.clone();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rtol = crate::measures::DEFAULT_MERGE_TOL * (1.0 + radii.last().copied().unwrap_or(0.0));
    radii.dedup_by(|next, kept| *next - *kept <= rtol);

    let design = Design::build(&times, &radii);
    let k = radii.len();
    let lipschitz = design_norm(&times, &radii);
    let mut x = vec![ConePoint::default(); k];
    let mut residual = vec![Quaternion::ZERO; times.len()];
    design.residual(&x, &targets, &mut residual);
    let mut value = objective(&residual);
    let mut grad = vec![ConePoint::default(); k];
    let mut iterations = 0;
    let mut converged = lipschitz == 0.0;
    let base_step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 0.0 };
    let mut step = base_step;

    while !converged && iterations < config.max_iters {
        design.gradient(&residual, &mut grad);
        let proposal = |step: f64, x: &[ConePoint]| -> Vec<ConePoint> {
            x.iter()
                .zip(grad.iter())
                .zip(radii.iter())
                .map(|((p, g), &r)| {
                    let mut q = ConePoint {
                        a: p.a - step * g.a,
                        b: [
                            p.b[0] - step * g.b[0],
                            p.b[1] - step * g.b[1],
                            p.b[2] - step * g.b[2],
                        ],
                    };
                    q.project(r == 0.0);
                    q
                })
                .collect()
        };

        let (next, next_value) = match config.step_rule {
            StepRule::FixedFromDesignNorm => {
                let next = proposal(base_step, &x);
                design.residual(&next, &targets, &mut residual);
                (next, objective(&residual))
            }
            StepRule::Backtracking => loop {
                let next = proposal(step, &x);
                design.residual(&next, &targets, &mut residual);
                let trial = objective(&residual);
                if trial <= value || step < 1e-18 * base_step.max(1.0) {
                    step = (step * 1.2).min(base_step.max(step));
                    break (next, trial);
                }
                step *= 0.5;
            },
        };

        debug_assert!(
            next_value <= value * (1.0 + 1e-12) + 1e-300,
            "projected gradient objective must not increase: {value} -> {next_value}"
        );

        let scale = 1.0 + x.iter().map(ConePoint::max_abs).fold(0.0, f64::max);
        let movement = x
            .iter()
            .zip(next.iter())
            .map(|(p, q)| p.max_abs_diff(q))
            .fold(0.0, f64::max);
        x = next;
        value = next_value;
        iterations += 1;
        if movement <= config.tol_residual * scale {
            converged = true;
        }
    }

    design.residual(&x, &targets, &mut residual);
    let rms = (2.0 * objective(&residual) / times.len() as f64).sqrt();
    let atoms: Vec<SliceAtom> = radii
        .iter()
        .zip(x.iter())
        .filter(|(_, p)| p.a >= config.prune_threshold && **p != ConePoint::default())
        .map(|(&radius, p)| SliceAtom {
            radius,
            value: Quaternion::new(p.a, p.b[0], p.b[1], p.b[2]),
        })
        .collect();
    let measure = SliceMeasure::new(atoms).expect("fit atoms are finite with nonnegative radii");
    debug_assert!(measure.is_cone_valid(0.0), "projection keeps atoms feasible");

    Ok(FitResult {
        measure,
        residual_rms: rms,
        iterations,
        converged,
    })
}
