//! Steady deep-water Stokes waves by spectral collocation in conformal variables.
//!
//! The inverse hodograph map is represented as
//!
//! ```text
//! z(w) = -w/c + sum_{n=1..N} i b_n exp(i n k w),   w = q + i p,   k = 2 pi / (c lambda)
//! ```
//!
//! so the surface is `p = 0` and the fluid is `p > 0`. Writing `theta = k q`, the
//! surface Bernoulli condition becomes
//!
//! ```text
//! R(theta) = c^2 L^2 / (2 |Z(theta)|^2) + g sum b_n cos(n theta) - B,
//! Z(theta) = -L - sum n b_n exp(i n theta),   L = lambda / (2 pi)
//! ```
//!
//! which is linear in `c^2` and `B`. Newton's method is applied to the cosine
//! projections of `R` on modes `0..=N` together with the crest-to-trough height
//! constraint, giving a square `(N + 2) x (N + 2)` system.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default gravitational acceleration [m/s^2].
pub const DEFAULT_GRAVITY: f64 = 9.8;
/// Largest steepness `H / lambda` accepted by a direct (non-continuation) solve.
pub const DEFAULT_STEEPNESS_CAP: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveParameters {
    pub wavelength: f64,
    pub wave_height: f64,
    pub gravity: f64,
    pub modes: usize,
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub steepness_cap: f64,
}

impl Default for WaveParameters {
    fn default() -> Self {
        Self {
            wavelength: 10.0,
            wave_height: 0.0,
            gravity: DEFAULT_GRAVITY,
            modes: 64,
            newton_tol: 1e-12,
            max_iterations: 50,
            steepness_cap: DEFAULT_STEEPNESS_CAP,
        }
    }
}

impl WaveParameters {
    pub fn new(wavelength: f64, wave_height: f64) -> Self {
        Self {
            wavelength,
            wave_height,
            ..Self::default()
        }
    }

    pub fn with_modes(mut self, modes: usize) -> Self {
        self.modes = modes;
        self
    }

    pub fn with_gravity(mut self, gravity: f64) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |reason: &str| Err(SolveError::InvalidParameters(reason.to_string()));
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return bad("wavelength must be positive and finite");
        }
        if !(self.wave_height >= 0.0 && self.wave_height.is_finite()) {
            return bad("wave_height must be non-negative and finite");
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return bad("gravity must be positive and finite");
        }
        if self.modes == 0 {
            return bad("modes must be at least 1");
        }
        if self.newton_tol.is_nan() || self.newton_tol <= 0.0 {
            return bad("newton_tol must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1");
        }
        Ok(())
    }

    pub fn steepness(&self) -> f64 {
        self.wave_height / self.wavelength
    }

    /// Collocation points used for the residual: `M = 4N`.
    pub fn collocation_points(&self) -> usize {
        4 * self.modes
    }
}

/// A converged (or first-order) wave.
///
/// Serialized field names are the wave-file keys; `save`/`load` live in [`crate::io`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesWave {
    pub lambda: f64,
    pub wave_height: f64,
    pub gravity: f64,
    pub c: f64,
    #[serde(rename = "B")]
    pub bernoulli: f64,
    pub k: f64,
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub steepness: f64,
    pub modes: usize,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid wave parameters: {0}")]
    InvalidParameters(String),
    #[error(
        "steepness H/lambda = {steepness:.4} exceeds the direct-solve cap {cap:.4}; \
         use a continuation sweep over increasing heights"
    )]
    SteepnessExceedsCap { steepness: f64, cap: f64 },
    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:.3e}); \
         steep waves may need more modes"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("singular Newton Jacobian")]
    SingularJacobian,
    #[error("continuation heights must be strictly increasing and positive")]
    HeightsNotIncreasing,
    #[error("continuation failed at height {failing_height}: {source}")]
    ContinuationFailed {
        failing_height: f64,
        last_good: Option<Box<StokesWave>>,
        #[source]
        source: Box<SolveError>,
    },
}

impl StokesWave {
    /// Still water of the given wavelength: `b = 0`, linear dispersion speed, `B = c^2/2`.
    pub fn flat(wavelength: f64, gravity: f64, modes: usize) -> Self {
        let c = (gravity * wavelength / (2.0 * PI)).sqrt();
        Self::from_parts(
            wavelength,
            0.0,
            gravity,
            c,
            0.5 * c * c,
            vec![0.0; modes.max(1)],
        )
    }

    fn from_parts(
        lambda: f64,
        wave_height: f64,
        gravity: f64,
        c: f64,
        bernoulli: f64,
        coefficients: Vec<f64>,
    ) -> Self {
        let modes = coefficients.len();
        let mut wave = Self {
            lambda,
            wave_height,
            gravity,
            c,
            bernoulli,
            k: 2.0 * PI / (c * lambda),
            coefficients,
            residual_norm: 0.0,
            steepness: wave_height / lambda,
            modes,
        };
        wave.residual_norm = wave.max_normalized_residual(4 * modes);
        wave
    }

    /// Conformal period `c * lambda`.
    pub fn period_q(&self) -> f64 {
        self.c * self.lambda
    }

    /// Linear wave period `lambda / c`.
    pub fn wave_period(&self) -> f64 {
        self.lambda / self.c
    }

    pub fn is_flat(&self) -> bool {
        self.coefficients.iter().all(|&b| b == 0.0)
    }

    /// Crest elevation `y(0, 0) = sum b_n`.
    pub fn crest_elevation(&self) -> f64 {
        self.coefficients.iter().sum()
    }

    /// Trough elevation `y(c lambda / 2, 0) = sum (-1)^n b_n`.
    pub fn trough_elevation(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &b)| if (i + 1) % 2 == 0 { b } else { -b })
            .sum()
    }

    fn max_normalized_residual(&self, samples: usize) -> f64 {
        let scale = self.gravity * self.lambda;
        bernoulli_residual(self, samples)
            .into_iter()
            .fold(0.0f64, |m, r| m.max(r.abs()))
            / scale
    }

    /// Re-derives `k`, `steepness`, `modes` and `residual_norm` after the
    /// coefficients or speed were edited by hand.
    pub fn refresh(&mut self) {
        *self = Self::from_parts(
            self.lambda,
            self.wave_height,
            self.gravity,
            self.c,
            self.bernoulli,
            std::mem::take(&mut self.coefficients),
        );
    }
}

/// Surface Bernoulli residual `|h'|^2/2 + g y - B` at `samples` equispaced `q` in `[0, c lambda)`.
///
/// Uses the wave's stored `c` and `B`, so a perturbed wave reports its own defect.
pub fn bernoulli_residual(wave: &StokesWave, samples: usize) -> Vec<f64> {
    let l = wave.lambda / (2.0 * PI);
    let c2 = wave.c * wave.c;
    (0..samples)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / samples as f64;
            let s = SurfaceState::at(&wave.coefficients, l, theta);
            c2 * l * l / (2.0 * s.z_abs2) + wave.gravity * s.y - wave.bernoulli
        })
        .collect()
}

/// `Z(theta)` and `y(theta)` on the surface.
struct SurfaceState {
    z_abs2: f64,
    y: f64,
}

impl SurfaceState {
    fn at(b: &[f64], l: f64, theta: f64) -> Self {
        let (mut zr, mut zi, mut y) = (-l, 0.0, 0.0);
        for (i, &bn) in b.iter().enumerate() {
            let n = (i + 1) as f64;
            let (sn, cn) = (n * theta).sin_cos();
            zr -= n * bn * cn;
            zi -= n * bn * sn;
            y += bn * cn;
        }
        Self {
            z_abs2: zr * zr + zi * zi,
            y,
        }
    }
}

/// First-order wave: `b_1 = H/2`, linear dispersion speed, not iterated.
pub fn linear_wave(params: &WaveParameters) -> Result<StokesWave, SolveError> {
    params.validate()?;
    let mut wave = StokesWave::flat(params.wavelength, params.gravity, params.modes);
    if params.wave_height > 0.0 {
        wave.coefficients[0] = 0.5 * params.wave_height;
        wave.wave_height = params.wave_height;
        wave.refresh();
    }
    Ok(wave)
}

/// Solves for the wave of height `params.wave_height` starting from the linear wave.
pub fn solve_stokes_wave(params: &WaveParameters) -> Result<StokesWave, SolveError> {
    params.validate()?;
    let steepness = params.steepness();
    if steepness > params.steepness_cap {
        return Err(SolveError::SteepnessExceedsCap {
            steepness,
            cap: params.steepness_cap,
        });
    }
    if params.wave_height == 0.0 {
        return Ok(StokesWave::flat(
            params.wavelength,
            params.gravity,
            params.modes,
        ));
    }
    let seed = linear_wave(params)?;
    newton(params, &seed)
}

/// Solves a sequence of strictly increasing heights, seeding each Newton solve
/// with the previous solution.
pub fn continuation_sweep(
    params: &WaveParameters,
    heights: &[f64],
) -> Result<Vec<StokesWave>, SolveError> {
    params.validate()?;
    if heights.is_empty() || heights[0] < 0.0 || heights.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolveError::HeightsNotIncreasing);
    }
    let mut waves: Vec<StokesWave> = Vec::with_capacity(heights.len());
    for &height in heights {
        let step = WaveParameters {
            wave_height: height,
            ..params.clone()
        };
        let result = match waves.last() {
            None => solve_stokes_wave(&step),
            Some(prev) if height > 0.0 => newton(&step, prev),
            Some(_) => solve_stokes_wave(&step),
        };
        match result {
            Ok(wave) => waves.push(wave),
            Err(err) => {
                return Err(SolveError::ContinuationFailed {
                    failing_height: height,
                    last_good: waves.pop().map(Box::new),
                    source: Box::new(err),
                })
            }
        }
    }
    Ok(waves)
}

fn newton(params: &WaveParameters, seed: &StokesWave) -> Result<StokesWave, SolveError> {
    let n_modes = params.modes;
    let m = params.collocation_points();
    let l = params.wavelength / (2.0 * PI);
    let g = params.gravity;
    let height = params.wave_height;
    let scale = g * params.wavelength;
    let unknowns = n_modes + 2;

    let mut b = vec![0.0; n_modes];
    for (dst, src) in b.iter_mut().zip(&seed.coefficients) {
        *dst = *src;
    }
    let mut c2 = seed.c * seed.c;
    let mut bern = seed.bernoulli;

    // cos(n theta_j), sin(n theta_j) for n = 0..=N
    let thetas: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
    let cos_table = DMatrix::from_fn(n_modes + 1, m, |n, j| (n as f64 * thetas[j]).cos());
    let sin_table = DMatrix::from_fn(n_modes + 1, m, |n, j| (n as f64 * thetas[j]).sin());

    let mut residual = f64::INFINITY;
    for _ in 0..params.max_iterations {
        let mut r = vec![0.0; m];
        // dR_j / d unknown_i, stored row j
        let mut dr = DMatrix::<f64>::zeros(m, unknowns);
        for j in 0..m {
            let (mut zr, mut zi, mut y) = (-l, 0.0, 0.0);
            for (i, &bn) in b.iter().enumerate() {
                let n = (i + 1) as f64;
                let (cn, sn) = (cos_table[(i + 1, j)], sin_table[(i + 1, j)]);
                zr -= n * bn * cn;
                zi -= n * bn * sn;
                y += bn * cn;
            }
            let za2 = zr * zr + zi * zi;
            let a = l * l / (2.0 * za2);
            r[j] = c2 * a + g * y - bern;
            let coef = c2 * l * l / (za2 * za2);
            for i in 0..n_modes {
                let n = (i + 1) as f64;
                let (cn, sn) = (cos_table[(i + 1, j)], sin_table[(i + 1, j)]);
                // Re(conj(Z) e^{i n theta})
                let re = zr * cn + zi * sn;
                dr[(j, i)] = coef * n * re + g * cn;
            }
            dr[(j, n_modes)] = a;
            dr[(j, n_modes + 1)] = -1.0;
        }

        let height_defect: f64 = b
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 == 0)
            .map(|(_, &bn)| 2.0 * bn)
            .sum::<f64>()
            - height;
        residual = r.iter().fold(0.0f64, |acc, x| acc.max(x.abs())) / scale;
        if residual <= params.newton_tol
            && height_defect.abs() <= params.newton_tol * params.wavelength
        {
            let c = c2.sqrt();
            let mut wave = StokesWave::from_parts(params.wavelength, height, g, c, bern, b);
            wave.residual_norm = residual;
            return Ok(wave);
        }

        let mut jac = DMatrix::<f64>::zeros(unknowns, unknowns);
        let mut rhs = DVector::<f64>::zeros(unknowns);
        for row in 0..=n_modes {
            let mut f = 0.0;
            for j in 0..m {
                f += cos_table[(row, j)] * r[j];
            }
            rhs[row] = -f / m as f64;
            for col in 0..unknowns {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += cos_table[(row, j)] * dr[(j, col)];
                }
                jac[(row, col)] = acc / m as f64;
            }
        }
        for i in (0..n_modes).step_by(2) {
            jac[(n_modes + 1, i)] = 2.0;
        }
        rhs[n_modes + 1] = -height_defect;

        let delta = jac.lu().solve(&rhs).ok_or(SolveError::SingularJacobian)?;
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(SolveError::SingularJacobian);
        }
        for i in 0..n_modes {
            b[i] += delta[i];
        }
        c2 += delta[n_modes];
        bern += delta[n_modes + 1];
        if c2.is_nan() || c2 <= 0.0 {
            break;
        }
    }
    Err(SolveError::NoConvergence {
        iterations: params.max_iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(v: &[f64]) -> f64 {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn flat_water_is_exact() {
        let wave = solve_stokes_wave(&WaveParameters::new(10.0, 0.0)).unwrap();
        let c = (9.8 * 10.0 / (2.0 * PI)).sqrt();
        assert_eq!(wave.c, c);
        assert!((wave.c - 3.9496).abs() < 1e-3);
        assert_eq!(wave.bernoulli, 0.5 * c * c);
        assert!(wave.coefficients.iter().all(|&b| b == 0.0));
        assert_eq!(wave.residual_norm, 0.0);
        assert_eq!(wave.k, 2.0 * PI / (wave.c * wave.lambda));
    }

    #[test]
    fn small_wave_close_to_linear() {
        let wave = solve_stokes_wave(&WaveParameters::new(10.0, 0.1).with_modes(32)).unwrap();
        let c0 = (9.8 * 10.0 / (2.0 * PI)).sqrt();
        // second-order speed correction is (kH/2)^2 / 2 relative
        assert!((wave.c - c0).abs() / c0 < 2.0 * (0.1f64 / 10.0).powi(2) * PI * PI);
        assert!((wave.coefficients[0] - 0.05).abs() <= 0.01 * 0.1);
        assert!(wave.residual_norm <= 1e-12);
    }

    #[test]
    fn linear_wave_is_not_iterated() {
        let wave = linear_wave(&WaveParameters::new(10.0, 0.05)).unwrap();
        assert_eq!(wave.coefficients[0], 0.025);
        assert!(wave.coefficients[1..].iter().all(|&b| b == 0.0));
        assert!((wave.c - 3.9496).abs() < 1e-3);
        assert!(wave.residual_norm > 0.0);
        // O((kH/2)^2) defect, nowhere near the Newton tolerance
        assert!(wave.residual_norm < 1e-3);

        let unit = linear_wave(&WaveParameters::new(2.0 * PI / 9.8, 0.0)).unwrap();
        assert!((unit.c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn residual_detects_perturbation() {
        let mut wave = solve_stokes_wave(&WaveParameters::new(10.0, 0.5)).unwrap();
        assert!(max_abs(&bernoulli_residual(&wave, 256)) / (9.8 * 10.0) <= 1e-12);
        wave.coefficients[0] += 1e-3;
        assert!(max_abs(&bernoulli_residual(&wave, 256)) / (9.8 * 10.0) > 1e-6);
    }

    #[test]
    fn flat_residual_is_zero() {
        let wave = StokesWave::flat(10.0, 9.8, 8);
        assert!(bernoulli_residual(&wave, 64).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn steepness_cap_is_enforced() {
        match solve_stokes_wave(&WaveParameters::new(10.0, 3.0)) {
            Err(SolveError::SteepnessExceedsCap { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(WaveParameters::new(-1.0, 0.1).validate().is_err());
        assert!(WaveParameters::new(10.0, -0.1).validate().is_err());
        assert!(WaveParameters::new(10.0, 0.1)
            .with_modes(0)
            .validate()
            .is_err());
    }

    #[test]
    fn refinement_is_stable() {
        let coarse = solve_stokes_wave(&WaveParameters::new(10.0, 0.5).with_modes(64)).unwrap();
        let fine = solve_stokes_wave(&WaveParameters::new(10.0, 0.5).with_modes(96)).unwrap();
        assert!(coarse.residual_norm <= 1e-12);
        assert!((coarse.c - fine.c).abs() / fine.c <= 1e-10);
        assert!((coarse.bernoulli - fine.bernoulli).abs() / fine.bernoulli <= 1e-9);
        assert!(
            (coarse.coefficients[0] - fine.coefficients[0]).abs() / fine.coefficients[0] <= 1e-9
        );
    }

    #[test]
    fn continuation_matches_direct_and_speed_grows() {
        let params = WaveParameters::new(10.0, 0.0);
        let single = continuation_sweep(&params, &[0.1]).unwrap();
        let direct = solve_stokes_wave(&WaveParameters::new(10.0, 0.1)).unwrap();
        assert!((single[0].c - direct.c).abs() <= 1e-12);

        let sweep = continuation_sweep(&params, &[0.2, 0.4, 0.6, 0.8]).unwrap();
        assert_eq!(sweep.len(), 4);
        assert!(sweep.windows(2).all(|w| w[1].c > w[0].c));

        assert!(matches!(
            continuation_sweep(&params, &[0.8, 0.4]),
            Err(SolveError::HeightsNotIncreasing)
        ));
    }

    #[test]
    fn spectral_decay_of_coefficients() {
        let wave = solve_stokes_wave(&WaveParameters::new(10.0, 0.5)).unwrap();
        let b = &wave.coefficients;
        assert!(b[b.len() - 1].abs() <= b[0].abs());
        assert!(b[0] > 0.0);
        // crest-to-trough height
        assert!((wave.crest_elevation() - wave.trough_elevation() - 0.5).abs() < 1e-12);
    }
}
