//! Simulation of weakly stationary quaternionic random processes with a
//! prescribed spectral measure, and estimation of their autocovariance.
//!
//! Given an atomic measure `Gamma` with atoms `(x_k, w_k)`, each path is
//! `X_t = sum_k sqrt(w_k) · e^{-t x_k} · xi_k` with independent zero-mean
//! quaternionic Gaussian innovations `xi_k`, components i.i.d. `N(0, 1/4)`
//! so `E|xi|^2 = 1`. The `-t` in the exponent is what produces the spectral
//! form of the covariance: with `cov(Y1, Y2) = E(Y1 · conj(Y2))`,
//!
//! ```text
//! cov(X_s, X_t) = sum_k w_k e^{-s x_k} E[xi_k conj(xi_k)] conj(e^{-t x_k})
//!               = sum_k w_k e^{-s x_k} e^{t x_k} = sum_k w_k e^{(t-s) x_k},
//! ```
//!
//! so `c_X(t) = cov(X_0, X_t) = ∫ e^{tx} dGamma`. With `e^{+t x_k}` inside
//! the path the conjugation would flip the sign instead. The middle factor
//! `xi conj(xi) = |xi|^2` is a real scalar, which is why it commutes out of
//! the noncommutative product; [`analytic_cov`] replays this computation
//! with the innovations replaced by their second moment.
//!
//! The innovation law is Gaussian by choice (only second moments are
//! constrained by the covariance target); normal variates come from the
//! Marsaglia polar method on top of a counter-based, seedable generator
//! (ChaCha8). Path `p` draws from the stream seeded with `seed XOR p`, so
//! ensembles are reproducible bit-for-bit and independent of how paths
//! would be scheduled across threads. Estimation sums paths in index order;
//! results are bitwise-deterministic for a fixed thread count of one.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bochner::TimeGrid;
use crate::linalg::{is_psd, QMatrix};
use crate::measures::ImaginaryAtomicMeasure;
use crate::quat::{exp_imag, Quaternion};

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("invalid process spec: {0}")]
    InvalidSpec(String),
    #[error("no grid pairs realize lag {lag}")]
    NoPairsForLag { lag: f64 },
}

/// Monte Carlo tolerance `10 / sqrt(paths)` used by the acceptance-level
/// covariance checks.
pub fn mc_tolerance(paths: usize) -> f64 {
    10.0 / (paths as f64).sqrt()
}

/// Specification of a simulated ensemble: spectral measure, nonnegative
/// time grid, path count, and seed.
#[derive(Clone, Debug, Serialize)]
pub struct ProcessSpec {
    gamma: ImaginaryAtomicMeasure,
    times: TimeGrid,
    n_paths: usize,
    seed: u64,
}

impl ProcessSpec {
    pub fn new(
        gamma: ImaginaryAtomicMeasure,
        times: TimeGrid,
        n_paths: usize,
        seed: u64,
    ) -> Result<Self, ProcessError> {
        if n_paths == 0 {
            return Err(ProcessError::InvalidSpec("need at least one path".into()));
        }
        if times.times().first().is_some_and(|&t| t < 0.0) {
            return Err(ProcessError::InvalidSpec(
                "process times must be nonnegative".into(),
            ));
        }
        Ok(ProcessSpec {
            gamma,
            times,
            n_paths,
            seed,
        })
    }

    pub fn gamma(&self) -> &ImaginaryAtomicMeasure {
        &self.gamma
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Sampled realizations, `n_paths x n_times`, reproducible bit-for-bit from
/// the embedded spec.
#[derive(Clone, Debug)]
pub struct ProcessEnsemble {
    spec: ProcessSpec,
    values: Vec<Quaternion>,
}

impl ProcessEnsemble {
    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn n_paths(&self) -> usize {
        self.spec.n_paths
    }

    pub fn times(&self) -> &[f64] {
        self.spec.times.times()
    }

    pub fn value(&self, path: usize, time_index: usize) -> Quaternion {
        self.values[path * self.times().len() + time_index]
    }

    fn path(&self, path: usize) -> &[Quaternion] {
        let n = self.times().len();
        &self.values[path * n..(path + 1) * n]
    }
}

/// Per-path generator stream: the base seed XOR the path index, expanded
/// through the generator's own seeding. Identical regardless of thread
/// count.
fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (path as u64))
}

/// One standard-normal pair by the Marsaglia polar method.
fn polar_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let u: f64 = rng.random_range(-1.0..1.0);
        let v: f64 = rng.random_range(-1.0..1.0);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let m = (-2.0 * s.ln() / s).sqrt();
            return (u * m, v * m);
        }
    }
}

/// Zero-mean quaternionic Gaussian with `E|xi|^2 = 1` (components i.i.d.
/// normal with variance 1/4).
fn standard_innovation(rng: &mut ChaCha8Rng) -> Quaternion {
    let (g0, g1) = polar_pair(rng);
    let (g2, g3) = polar_pair(rng);
    Quaternion::new(0.5 * g0, 0.5 * g1, 0.5 * g2, 0.5 * g3)
}

/// Draws the ensemble `X_t = sum_k sqrt(w_k) e^{-t x_k} xi_k` described by
/// the spec. Fixed spec and seed give an identical ensemble on every run.
pub fn simulate(spec: &ProcessSpec) -> ProcessEnsemble {
    let atoms = spec.gamma.atoms();
    let times = spec.times.times();
    let n_times = times.len();
    // e^{-t x_k} per (time, atom), shared across paths.
    let factors: Vec<Quaternion> = times
        .iter()
        .flat_map(|&t| {
            atoms
                .iter()
                .map(move |a| exp_imag(a.point.scale(-t)).scale(a.weight.sqrt()))
        })
        .collect();
    let mut values = vec![Quaternion::ZERO; spec.n_paths * n_times];
    let mut innovations = vec![Quaternion::ZERO; atoms.len()];
    for path in 0..spec.n_paths {
        let mut rng = path_rng(spec.seed, path);
        for xi in innovations.iter_mut() {
            *xi = standard_innovation(&mut rng);
        }
        for ti in 0..n_times {
            let mut acc = Quaternion::ZERO;
            for (k, xi) in innovations.iter().enumerate() {
                acc += factors[ti * atoms.len() + k] * *xi;
            }
            values[path * n_times + ti] = acc;
        }
    }
    ProcessEnsemble {
        spec: spec.clone(),
        values,
    }
}

/// The covariance the simulator produces in expectation, composed exactly as
/// the estimator pairs factors: `cov(X_s, X_t) = sum_k w_k e^{-s x_k}
/// e^{t x_k}`. Agrees with `synth_from_gamma(gamma, t - s)` to rounding.
pub fn analytic_cov(gamma: &ImaginaryAtomicMeasure, s: f64, t: f64) -> Quaternion {
    let mut acc = Quaternion::ZERO;
    for atom in gamma.atoms() {
        let left = exp_imag(atom.point.scale(-s));
        let right = exp_imag(atom.point.scale(t));
        acc += (left * right).scale(atom.weight);
    }
    acc
}

fn lag_match_tol(times: &[f64]) -> f64 {
    let max_t = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    1e-9 * (1.0 + max_t)
}

/// Index pairs `(i, j)` with `t_j - t_i = lag` within the grid-matching
/// tolerance.
fn lag_pairs(times: &[f64], lag: f64) -> Vec<(usize, usize)> {
    let tol = lag_match_tol(times);
    let mut pairs = Vec::new();
    for (i, &ti) in times.iter().enumerate() {
        for (j, &tj) in times.iter().enumerate() {
            if (tj - ti - lag).abs() <= tol {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Estimates the autocovariance `c(h) = E[X_t conj(X_{t+h})]` at each
/// requested lag, averaging over paths and over every grid pair realizing
/// the lag. Negative lags are allowed when the grid supports them.
pub fn autocov_estimate(
    ens: &ProcessEnsemble,
    lags: &[f64],
) -> Result<Vec<(f64, Quaternion)>, ProcessError> {
    let times = ens.times();
    let mut out = Vec::with_capacity(lags.len());
    for &lag in lags {
        let pairs = lag_pairs(times, lag);
        if pairs.is_empty() {
            return Err(ProcessError::NoPairsForLag { lag });
        }
        let mut acc = Quaternion::ZERO;
        for path in 0..ens.n_paths() {
            let row = ens.path(path);
            for &(i, j) in &pairs {
                acc += row[i] * row[j].conj();
            }
        }
        let count = (pairs.len() * ens.n_paths()) as f64;
        out.push((lag, acc.scale(1.0 / count)));
    }
    Ok(out)
}

/// Report of [`stationarity_audit`].
#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    /// Largest norm of `cov(X_t, X_s) - cov(X_{t+h}, X_{s+h})` over all
    /// tested triples.
    pub max_deviation: f64,
    pub comparisons: usize,
}

/// Compares the empirical covariance at every grid pair against the same
/// pair shifted by each requested `h`; weak stationarity predicts zero
/// difference up to Monte Carlo noise.
pub fn stationarity_audit(
    ens: &ProcessEnsemble,
    shifts: &[f64],
) -> Result<StationarityReport, ProcessError> {
    let times = ens.times();
    let n = times.len();
    let tol = lag_match_tol(times);
    // Empirical covariance at every grid pair, one pass over paths.
    let mut cov = vec![Quaternion::ZERO; n * n];
    for path in 0..ens.n_paths() {
        let row = ens.path(path);
        for i in 0..n {
            for j in 0..n {
                cov[i * n + j] += row[i] * row[j].conj();
            }
        }
    }
    let scale = 1.0 / ens.n_paths() as f64;
    for c in cov.iter_mut() {
        *c = c.scale(scale);
    }

    let index_of = |target: f64| times.iter().position(|&t| (t - target).abs() <= tol);
    let mut max_deviation = 0.0f64;
    let mut comparisons = 0usize;
    for &h in shifts {
        let mut found = false;
        for i in 0..n {
            let Some(i_shift) = index_of(times[i] + h) else {
                continue;
            };
            for j in 0..n {
                let Some(j_shift) = index_of(times[j] + h) else {
                    continue;
                };
                let d = cov[i * n + j].dist(cov[i_shift * n + j_shift]);
                max_deviation = max_deviation.max(d);
                comparisons += 1;
                found = true;
            }
        }
        if !found {
            return Err(ProcessError::NoPairsForLag { lag: h });
        }
    }
    Ok(StationarityReport {
        max_deviation,
        comparisons,
    })
}

/// Report of [`pd_of_autocov`].
#[derive(Clone, Debug, Serialize)]
pub struct AutocovPdReport {
    pub size: usize,
    pub min_eigenvalue: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Builds the Gram matrix `c(t_i - t_j)` from the estimated autocovariance
/// on a subset of grid times and reports its minimum eigenvalue; the
/// autocovariance of a stationary process is positive definite, so the
/// minimum should not drop below the Monte Carlo tolerance.
pub fn pd_of_autocov(
    ens: &ProcessEnsemble,
    times: &[f64],
    tol: f64,
) -> Result<AutocovPdReport, ProcessError> {
    let n = times.len();
    // Estimate each needed nonnegative lag once.
    let mut lags: Vec<f64> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if times[i] >= times[j] {
                lags.push(times[i] - times[j]);
            }
        }
    }
    lags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lags.dedup();
    let estimates = autocov_estimate(ens, &lags)?;
    let tol_match = lag_match_tol(ens.times());
    let lookup = |h: f64| -> Quaternion {
        estimates
            .iter()
            .find(|(lag, _)| (lag - h).abs() <= tol_match)
            .expect("every needed lag was estimated")
            .1
    };
    let g = QMatrix::from_fn(n, |i, j| {
        if times[i] >= times[j] {
            lookup(times[i] - times[j])
        } else {
            lookup(times[j] - times[i]).conj()
        }
    });
    let rep = is_psd(&g, tol).map_err(|e| ProcessError::InvalidSpec(e.to_string()))?;
    Ok(AutocovPdReport {
        size: n,
        min_eigenvalue: rep.min_eigenvalue,
        tol,
        pass: rep.psd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bochner::synth_from_gamma;
    use std::f64::consts::PI;

    fn single_atom() -> ImaginaryAtomicMeasure {
        ImaginaryAtomicMeasure::from_points(&[([1.0, 0.0, 0.0], 1.0)]).unwrap()
    }

    fn spec(gamma: ImaginaryAtomicMeasure, n_paths: usize, seed: u64) -> ProcessSpec {
        let times = TimeGrid::uniform(0.0, PI / 8.0, 17).unwrap();
        ProcessSpec::new(gamma, times, n_paths, seed).unwrap()
    }

    #[test]
    fn empty_gamma_gives_zero_ensemble() {
        let ens = simulate(&spec(ImaginaryAtomicMeasure::empty(), 10, 1));
        for p in 0..10 {
            for ti in 0..ens.times().len() {
                assert_eq!(ens.value(p, ti), Quaternion::ZERO);
            }
        }
        let acov = autocov_estimate(&ens, &[0.0, PI / 8.0]).unwrap();
        for (_, c) in acov {
            assert_eq!(c, Quaternion::ZERO);
        }
        let audit = stationarity_audit(&ens, &[PI / 8.0]).unwrap();
        assert_eq!(audit.max_deviation, 0.0);
        let pd = pd_of_autocov(&ens, &[0.0, PI / 8.0, PI / 4.0], 1e-12).unwrap();
        assert!(pd.pass);
    }

    #[test]
    fn fixed_seed_reproduces_the_ensemble() {
        let s = spec(single_atom(), 50, 77);
        let a = simulate(&s);
        let b = simulate(&s);
        assert_eq!(a.values, b.values);
        // Different seed, different draw.
        let c = simulate(&spec(single_atom(), 50, 78));
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let times = TimeGrid::uniform(0.0, 0.5, 4).unwrap();
        assert!(matches!(
            ProcessSpec::new(single_atom(), times, 0, 1),
            Err(ProcessError::InvalidSpec(_))
        ));
        let negative = TimeGrid::uniform(-1.0, 0.5, 4).unwrap();
        assert!(matches!(
            ProcessSpec::new(single_atom(), negative, 3, 1),
            Err(ProcessError::InvalidSpec(_))
        ));
    }

    #[test]
    fn second_moment_calibration() {
        // mean |X_0|^2 estimates the total mass.
        let m = 20_000;
        let ens = simulate(&spec(single_atom(), m, 11));
        let mean: f64 = (0..m).map(|p| ens.value(p, 0).norm_sq()).sum::<f64>() / m as f64;
        let c4 = 3.0;
        assert!(
            (mean - 1.0).abs() <= 3.0 * c4 / (m as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn autocov_matches_the_spectral_form() {
        let m = 20_000;
        let gamma = single_atom();
        let ens = simulate(&spec(gamma.clone(), m, 12));
        let tol = 5.0 / (m as f64).sqrt();
        let estimates = autocov_estimate(&ens, &[0.0, PI / 2.0]).unwrap();
        // c(0) = 1.
        assert!(estimates[0].1.dist(Quaternion::ONE) <= tol);
        // c(pi/2) = e^{(pi/2) i1} = i1.
        assert!(estimates[1].1.dist(Quaternion::I1) <= tol);
        // General identity against the two-route synthesis.
        for (lag, c) in &estimates {
            assert!(c.dist(synth_from_gamma(&gamma, *lag)) <= tol);
        }
    }

    #[test]
    fn missing_lag_is_reported() {
        let ens = simulate(&spec(single_atom(), 5, 3));
        assert!(matches!(
            autocov_estimate(&ens, &[0.123456]),
            Err(ProcessError::NoPairsForLag { .. })
        ));
        assert!(matches!(
            stationarity_audit(&ens, &[0.123456]),
            Err(ProcessError::NoPairsForLag { .. })
        ));
    }

    #[test]
    fn stationarity_and_symmetry_within_monte_carlo_noise() {
        let m = 20_000;
        let ens = simulate(&spec(single_atom(), m, 13));
        let tol = mc_tolerance(m);
        let audit = stationarity_audit(&ens, &[PI / 8.0, PI / 4.0]).unwrap();
        assert!(audit.max_deviation <= tol, "audit {audit:?}");

        // c(-h) = conj(c(h)).
        let h = PI / 4.0;
        let est = autocov_estimate(&ens, &[h, -h]).unwrap();
        assert!(est[1].1.dist(est[0].1.conj()) <= tol);
    }

    #[test]
    fn autocov_gram_is_psd_up_to_noise() {
        let m = 20_000;
        let ens = simulate(&spec(single_atom(), m, 14));
        let tol = mc_tolerance(m);
        let times: Vec<f64> = (0..4).map(|k| k as f64 * PI / 8.0).collect();
        let rep = pd_of_autocov(&ens, &times, tol).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.min_eigenvalue >= -tol);
    }

    #[test]
    fn analytic_mode_reproduces_synthesis_exactly() {
        let gamma = ImaginaryAtomicMeasure::from_points(&[
            ([1.0, 0.5, -0.3], 0.7),
            ([0.0, 2.0, 0.0], 1.1),
            ([0.0, 0.0, 0.0], 0.4),
        ])
        .unwrap();
        for &(s, t) in &[(0.0, 1.0), (0.5, 2.25), (3.0, 0.25), (1.5, 1.5)] {
            let lhs = analytic_cov(&gamma, s, t);
            let rhs = synth_from_gamma(&gamma, t - s);
            assert!(lhs.dist(rhs) <= 1e-12, "s={s} t={t}");
        }
    }
}
