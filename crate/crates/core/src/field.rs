//! Flow quantities evaluated natively in conformal coordinates `(q, p)`.
//!
//! Physical queries go through [`invert_map`]. All functions are pure in
//! `(wave, point)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::StokesWave;

/// `(q, p)` = (velocity potential, stream function). `p = 0` is the free surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalPoint {
    pub q: f64,
    pub p: f64,
}

impl ConformalPoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    fn w(self) -> Complex64 {
        Complex64::new(self.q, self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPoint {
    pub x: f64,
    pub y: f64,
}

impl PhysicalPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Lab-frame velocity with the moving-frame energy `E` and lab energy `E0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySample {
    pub u: f64,
    pub v: f64,
    /// `((u - c)^2 + v^2) / 2`
    pub e: f64,
    /// `(u^2 + v^2) / 2`
    pub e0: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("|z'(w)| = {0:.3e} below 1e-12 (near-stagnation)")]
    DegenerateJacobian(f64),
    #[error("point ({x}, {y}) is not inside the fluid (p = {p:.3e})")]
    NotInFluid { x: f64, y: f64, p: f64 },
    #[error("conformal inversion did not converge for ({x}, {y})")]
    NoConvergence { x: f64, y: f64 },
}

/// `z(w)`, `z'(w)` and the deviation series `S(w) = k sum n b_n exp(i n k w)`,
/// so that `z' = -1/c - S` and `1 + c z' = -c S` without cancellation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MapState {
    pub z: Complex64,
    pub dz: Complex64,
    pub series: Complex64,
}

impl MapState {
    pub(crate) fn eval(wave: &StokesWave, w: Complex64) -> Self {
        let zeta = (Complex64::i() * wave.k * w).exp();
        let mut power = Complex64::new(1.0, 0.0);
        let mut disp = Complex64::new(0.0, 0.0);
        let mut series = Complex64::new(0.0, 0.0);
        for (i, &b) in wave.coefficients.iter().enumerate() {
            power *= zeta;
            let n = (i + 1) as f64;
            disp += power * b;
            series += power * (n * b);
        }
        series *= wave.k;
        Self {
            z: -w / wave.c + Complex64::i() * disp,
            dz: Complex64::new(-1.0 / wave.c, 0.0) - series,
            series,
        }
    }

    /// Moving-frame energy `E = |h'|^2 / 2 = 1 / (2 |z'|^2)`.
    pub(crate) fn energy(&self) -> f64 {
        0.5 / self.dz.norm_sqr()
    }

    /// `E0 / E = |1 + c z'|^2 = c^2 |S|^2`.
    pub(crate) fn lab_to_moving_ratio(&self, c: f64) -> f64 {
        c * c * self.series.norm_sqr()
    }

    pub(crate) fn velocity(&self, c: f64) -> VelocitySample {
        // u - i v = h' + c = -c S / z'
        let lab = -(self.series * c) / self.dz;
        let e = self.energy();
        VelocitySample {
            u: lab.re,
            v: -lab.im,
            e,
            e0: 0.5 * lab.norm_sqr(),
        }
    }
}

pub fn map_point(wave: &StokesWave, pt: ConformalPoint) -> PhysicalPoint {
    let z = MapState::eval(wave, pt.w()).z;
    PhysicalPoint::new(z.re, z.im)
}

pub fn velocity(wave: &StokesWave, pt: ConformalPoint) -> Result<VelocitySample, FieldError> {
    let state = MapState::eval(wave, pt.w());
    let modulus = state.dz.norm();
    if modulus < 1e-12 {
        return Err(FieldError::DegenerateJacobian(modulus));
    }
    Ok(state.velocity(wave.c))
}

/// `P - P_atm = B - E - g y` with unit density.
pub fn pressure(wave: &StokesWave, pt: ConformalPoint) -> f64 {
    let state = MapState::eval(wave, pt.w());
    wave.bernoulli - state.energy() - wave.gravity * state.z.im
}

/// Reduces `q` to `[0, c lambda)`.
pub fn normalize_q(wave: &StokesWave, q: f64) -> f64 {
    let period = wave.period_q();
    let r = q.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

const INVERT_MAX_ITER: usize = 50;

/// Newton inversion of `z(w) = x + i y`, seeded at `w0 = -c (x + i y)`.
///
/// Points above the mean level can send that seed onto a spurious preimage with
/// `p < 0`; a second attempt starts below the crest before reporting `NotInFluid`.
pub fn invert_map(wave: &StokesWave, pt: PhysicalPoint) -> Result<ConformalPoint, FieldError> {
    let w = invert_physical(wave, pt)?;
    Ok(ConformalPoint::new(normalize_q(wave, w.re), w.im))
}

pub(crate) fn invert_physical(
    wave: &StokesWave,
    pt: PhysicalPoint,
) -> Result<Complex64, FieldError> {
    let seed = Complex64::new(pt.x, pt.y) * (-wave.c);
    match invert_from(wave, pt, seed) {
        Ok(w) => Ok(w),
        Err(first) => {
            let depth_below_crest = (wave.crest_elevation() - pt.y).max(0.0);
            let fallback = Complex64::new(-wave.c * pt.x, wave.c * depth_below_crest);
            invert_from(wave, pt, fallback).map_err(|_| first)
        }
    }
}

/// Inversion without reducing `q`; the returned `w` satisfies `z(w) = x + i y`.
pub(crate) fn invert_from(
    wave: &StokesWave,
    pt: PhysicalPoint,
    seed: Complex64,
) -> Result<Complex64, FieldError> {
    let target = Complex64::new(pt.x, pt.y);
    let tol = 1e-12 * wave.lambda;
    let mut w = seed;
    for _ in 0..INVERT_MAX_ITER {
        let state = MapState::eval(wave, w);
        let defect = state.z - target;
        if defect.norm() <= tol {
            // one more step drives the defect to roundoff
            let refined = w - defect / state.dz;
            let w = if (MapState::eval(wave, refined).z - target).norm() <= defect.norm() {
                refined
            } else {
                w
            };
            let p_tol = 1e-12 * wave.period_q();
            if w.im < -p_tol {
                return Err(FieldError::NotInFluid {
                    x: pt.x,
                    y: pt.y,
                    p: w.im,
                });
            }
            return Ok(Complex64::new(w.re, w.im.max(0.0)));
        }
        w -= defect / state.dz;
        if !w.re.is_finite() || !w.im.is_finite() {
            break;
        }
    }
    Err(FieldError::NoConvergence { x: pt.x, y: pt.y })
}

/// Solves `x(q, p) = x` for `q` on a fixed streamline, starting from `q_seed`.
pub(crate) fn invert_on_streamline(wave: &StokesWave, p: f64, x: f64, q_seed: f64) -> Option<f64> {
    let mut q = q_seed;
    for _ in 0..INVERT_MAX_ITER {
        let state = MapState::eval(wave, Complex64::new(q, p));
        let defect = state.z.re - x;
        // dx/dq = Re z'
        q -= defect / state.dz.re;
        if defect.abs() <= 1e-14 * wave.lambda {
            return Some(q);
        }
    }
    None
}

/// Surface points on equispaced `q` over one conformal period, crest first.
pub fn surface_profile(wave: &StokesWave, samples: usize) -> Vec<PhysicalPoint> {
    streamline(wave, 0.0, samples)
}

/// The streamline `psi = p` sampled on equispaced `q` over one period.
pub fn streamline(wave: &StokesWave, p: f64, samples: usize) -> Vec<PhysicalPoint> {
    let period = wave.period_q();
    (0..samples)
        .map(|j| {
            map_point(
                wave,
                ConformalPoint::new(period * j as f64 / samples as f64, p),
            )
        })
        .collect()
}

/// Evaluation grid for [`check_governing_equations`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Points per period in `q`.
    pub nq: usize,
    /// Streamlines between `p_min` and `p_max`.
    pub np: usize,
    /// Shallowest streamline, as a fraction of `c lambda`.
    pub p_min_frac: f64,
    /// Deepest streamline, as a fraction of `c lambda`.
    pub p_max_frac: f64,
    /// Finite-difference step as a fraction of `lambda`.
    pub step_frac: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nq: 64,
            np: 64,
            p_min_frac: 0.01,
            p_max_frac: 1.0,
            step_frac: 1e-4,
        }
    }
}

/// Maxima over the grid; see [`GoverningReport::cauchy_riemann_scaled`] etc. for the
/// dimensionless forms used in acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoverningReport {
    /// `max |u_y - v_x|` [1/s]
    pub curl: f64,
    /// `max |u_x + v_y|` [1/s]
    pub divergence: f64,
    /// `max |v - (u - c) eta_x|` on the surface [m/s]
    pub kinematic: f64,
    /// `max (u - c)` over surface and grid; negative when the wave is admissible.
    pub max_u_minus_c: f64,
    /// `max |(u, v)|` at `p = 5 c lambda`.
    pub deep_speed: f64,
    /// `min E` over surface and grid.
    pub min_energy: f64,
    /// Surface Bernoulli residual normalized by `g lambda`.
    pub bernoulli: f64,
    /// Scale `c k_phys` used for the Cauchy-Riemann residuals.
    pub cr_scale: f64,
    pub c: f64,
}

impl GoverningReport {
    pub fn cauchy_riemann_scaled(&self) -> f64 {
        self.curl.max(self.divergence) / self.cr_scale
    }

    pub fn kinematic_scaled(&self) -> f64 {
        self.kinematic / self.c
    }

    /// `delta_0 = min (c - u)`.
    pub fn delta0(&self) -> f64 {
        -self.max_u_minus_c
    }
}

pub fn check_governing_equations(
    wave: &StokesWave,
    grid: &GridSpec,
) -> Result<GoverningReport, FieldError> {
    let period = wave.period_q();
    let h = grid.step_frac * wave.lambda;
    let c = wave.c;
    let mut report = GoverningReport {
        curl: 0.0,
        divergence: 0.0,
        kinematic: 0.0,
        max_u_minus_c: f64::NEG_INFINITY,
        deep_speed: 0.0,
        min_energy: f64::INFINITY,
        bernoulli: 0.0,
        cr_scale: c * 2.0 * std::f64::consts::PI / wave.lambda,
        c,
    };

    let surface_samples = 4 * wave.modes.max(1);
    report.bernoulli = crate::solver::bernoulli_residual(wave, surface_samples)
        .into_iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
        / (wave.gravity * wave.lambda);

    // velocity at a physical point, seeded from a nearby conformal point
    let vel_at = |x: f64, y: f64, seed: Complex64| -> Result<VelocitySample, FieldError> {
        let w = invert_from(wave, PhysicalPoint::new(x, y), seed)?;
        velocity(wave, ConformalPoint::new(w.re, w.im))
    };

    let np = grid.np.max(1);
    for jp in 0..np {
        let frac = if np == 1 {
            grid.p_min_frac
        } else {
            grid.p_min_frac + (grid.p_max_frac - grid.p_min_frac) * jp as f64 / (np - 1) as f64
        };
        let p = frac * period;
        for iq in 0..grid.nq {
            let q = period * iq as f64 / grid.nq as f64;
            let w = Complex64::new(q, p);
            let state = MapState::eval(wave, w);
            let centre = state.velocity(c);
            report.max_u_minus_c = report.max_u_minus_c.max(centre.u - c);
            report.min_energy = report.min_energy.min(centre.e);
            let (x, y) = (state.z.re, state.z.im);
            // dw = -c dz approximately
            let dxw = Complex64::new(-c * h, 0.0);
            let dyw = Complex64::new(0.0, -c * h);
            let xp = vel_at(x + h, y, w + dxw)?;
            let xm = vel_at(x - h, y, w - dxw)?;
            let yp = vel_at(x, y + h, w + dyw)?;
            let ym = vel_at(x, y - h, w - dyw)?;
            let u_x = (xp.u - xm.u) / (2.0 * h);
            let v_x = (xp.v - xm.v) / (2.0 * h);
            let u_y = (yp.u - ym.u) / (2.0 * h);
            let v_y = (yp.v - ym.v) / (2.0 * h);
            report.curl = report.curl.max((u_y - v_x).abs());
            report.divergence = report.divergence.max((u_x + v_y).abs());
        }
    }

    for j in 0..surface_samples {
        let q = period * j as f64 / surface_samples as f64;
        let state = MapState::eval(wave, Complex64::new(q, 0.0));
        let vel = state.velocity(c);
        report.max_u_minus_c = report.max_u_minus_c.max(vel.u - c);
        report.min_energy = report.min_energy.min(vel.e);
        // eta_x by the fourth-order centred stencil on the physical surface
        let x = state.z.re;
        let mut eta = [0.0; 4];
        for (slot, offset) in eta.iter_mut().zip([2.0, 1.0, -1.0, -2.0]) {
            let xs = x + offset * h;
            let qs = invert_on_streamline(wave, 0.0, xs, q - c * offset * h).ok_or(
                FieldError::NoConvergence {
                    x: xs,
                    y: state.z.im,
                },
            )?;
            *slot = map_point(wave, ConformalPoint::new(qs, 0.0)).y;
        }
        let eta_x = (-eta[0] + 8.0 * eta[1] - 8.0 * eta[2] + eta[3]) / (12.0 * h);
        report.kinematic = report.kinematic.max((vel.v - (vel.u - c) * eta_x).abs());
    }

    let deep = 5.0 * period;
    for j in 0..grid.nq {
        let q = period * j as f64 / grid.nq as f64;
        let vel = MapState::eval(wave, Complex64::new(q, deep)).velocity(c);
        report.deep_speed = report.deep_speed.max(vel.u.hypot(vel.v));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_stokes_wave, WaveParameters};
    use std::sync::OnceLock;

    fn wave_05() -> &'static StokesWave {
        static W: OnceLock<StokesWave> = OnceLock::new();
        W.get_or_init(|| solve_stokes_wave(&WaveParameters::new(10.0, 0.5)).unwrap())
    }

    /// Flat water with c = 2, i.e. lambda = 4 pi / g.
    fn flat_c2() -> StokesWave {
        let g = 9.8;
        let lambda = 4.0 * 2.0 * std::f64::consts::PI / g;
        let wave = StokesWave::flat(lambda, g, 4);
        assert!((wave.c - 2.0).abs() < 1e-14);
        wave
    }

    #[test]
    fn flat_water_map_and_velocity() {
        let wave = StokesWave::flat(10.0, 9.8, 4);
        let pt = map_point(&wave, ConformalPoint::new(0.0, wave.c));
        assert!(pt.x.abs() < 1e-15 && (pt.y + 1.0).abs() < 1e-15);
        let v = velocity(&wave, ConformalPoint::new(1.3, 0.7)).unwrap();
        assert_eq!((v.u, v.v, v.e0), (0.0, 0.0, 0.0));
        assert!((v.e - 0.5 * wave.c * wave.c).abs() < 1e-14);
    }

    #[test]
    fn flat_water_inversion_and_pressure() {
        let wave = flat_c2();
        let cp = invert_map(&wave, PhysicalPoint::new(1.0, -2.0)).unwrap();
        assert!((cp.p - 4.0).abs() < 1e-12);
        let expected_q = (-2.0f64).rem_euclid(wave.period_q());
        assert!((cp.q - expected_q).abs() < 1e-12);
        let pr = pressure(&wave, ConformalPoint::new(0.3, 4.0));
        assert!((pr - 2.0 * 9.8).abs() < 1e-12);
    }

    #[test]
    fn periodicity_of_inverse_map() {
        let wave = wave_05();
        let period = wave.period_q();
        for &(q, p) in &[(0.0, 0.0), (3.7, 0.2), (11.1, 1.5), (-4.0, 7.0)] {
            let a = map_point(wave, ConformalPoint::new(q, p));
            let b = map_point(wave, ConformalPoint::new(q + period, p));
            assert!((b.x - a.x + wave.lambda).abs() < 1e-12);
            assert!((b.y - a.y).abs() < 1e-13);
        }
    }

    #[test]
    fn crest_is_sum_of_coefficients() {
        let wave = wave_05();
        let crest = map_point(wave, ConformalPoint::new(0.0, 0.0));
        assert!(crest.x.abs() < 1e-15);
        assert!((crest.y - wave.coefficients.iter().sum::<f64>()).abs() < 1e-15);
    }

    #[test]
    fn crest_and_trough_verticals_have_no_vertical_velocity() {
        let wave = wave_05();
        for &p in &[0.0, 0.5, 3.0] {
            let crest = velocity(wave, ConformalPoint::new(0.0, p)).unwrap();
            let trough = velocity(wave, ConformalPoint::new(0.5 * wave.period_q(), p)).unwrap();
            assert!(crest.v.abs() < 1e-13);
            assert!(trough.v.abs() < 1e-13);
        }
    }

    #[test]
    fn deep_water_is_at_rest() {
        let wave = wave_05();
        let p = 5.0 * wave.period_q();
        let v = velocity(wave, ConformalPoint::new(2.0, p)).unwrap();
        assert!(v.u.abs() <= 1e-6 * wave.c && v.v.abs() <= 1e-6 * wave.c);
        assert!((v.e - 0.5 * wave.c * wave.c).abs() <= 1e-6 * wave.c * wave.c);
        let pt = map_point(wave, ConformalPoint::new(2.0, p));
        // hydrostatic up to the constant B - c^2/2, which is positive for H > 0
        let offset = wave.bernoulli - 0.5 * wave.c * wave.c;
        assert!(offset > 0.0);
        let pr = pressure(wave, ConformalPoint::new(2.0, p)) - offset;
        assert!((pr + wave.gravity * pt.y).abs() <= 1e-6 * wave.gravity * pt.y.abs());
    }

    #[test]
    fn symmetry_about_crest() {
        let wave = wave_05();
        for &(q, p) in &[(1.0, 0.0), (5.5, 0.3), (17.0, 2.0)] {
            let a = velocity(wave, ConformalPoint::new(q, p)).unwrap();
            let b = velocity(wave, ConformalPoint::new(-q, p)).unwrap();
            assert!((a.u - b.u).abs() < 1e-12);
            assert!((a.v + b.v).abs() < 1e-12);
        }
    }

    #[test]
    fn surface_pressure_vanishes() {
        let wave = wave_05();
        let tol = wave.residual_norm.max(1e-15) * wave.gravity * wave.lambda;
        for j in 0..32 {
            let q = wave.period_q() * j as f64 / 32.0;
            assert!(pressure(wave, ConformalPoint::new(q, 0.0)).abs() <= 10.0 * tol);
        }
    }

    #[test]
    fn point_above_surface_is_rejected() {
        let wave = wave_05();
        let crest = wave.crest_elevation();
        let err = invert_map(wave, PhysicalPoint::new(0.0, crest + 0.1)).unwrap_err();
        assert!(matches!(err, FieldError::NotInFluid { .. }));
    }

    #[test]
    fn profile_and_streamlines() {
        let wave = wave_05();
        let flat = StokesWave::flat(10.0, 9.8, 4);
        assert!(surface_profile(&flat, 16).iter().all(|pt| pt.y == 0.0));
        let line = streamline(&flat, flat.c, 8);
        assert!(line.iter().all(|pt| (pt.y + 1.0).abs() < 1e-15));

        let two = surface_profile(wave, 2);
        assert_eq!(two.len(), 2);
        assert!((two[0].y - wave.crest_elevation()).abs() < 1e-14);
        assert!((two[1].y - wave.trough_elevation()).abs() < 1e-14);
        assert!((two[1].x + 0.5 * wave.lambda).abs() < 1e-12);

        let surf = surface_profile(wave, 256);
        let (lo, hi) = surf
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.y), b.max(p.y))
            });
        assert!((hi - lo - 0.5).abs() < 1e-10);
        assert_eq!(streamline(wave, 0.0, 256), surf);

        let deep = streamline(wave, 1.0, 256);
        let (dlo, dhi) = deep
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.y), b.max(p.y))
            });
        assert!(dhi - dlo < hi - lo);
    }

    #[test]
    fn streamline_monotone_between_crest_and_trough() {
        let wave = wave_05();
        for &p in &[0.0, 0.5, 2.0, 8.0] {
            // q in [0, c lambda/2] maps x from 0 down to -lambda/2: y decreases
            let line = streamline(wave, p, 128);
            for w in line[..=64].windows(2) {
                assert!(w[1].y <= w[0].y + 1e-15);
            }
        }
    }

    #[test]
    fn vertical_velocity_sign_pattern() {
        let wave = wave_05();
        let period = wave.period_q();
        for &p in &[0.0, 0.3, 1.0, 4.0, 10.0] {
            for j in 0..=64 {
                let q = 0.5 * period * j as f64 / 64.0;
                // q in [0, c lambda / 2] <=> x in [-lambda/2, 0]
                let v = velocity(wave, ConformalPoint::new(q, p)).unwrap().v;
                assert!(v <= 1e-14, "v = {v} at q = {q}, p = {p}");
                let v_ahead = velocity(wave, ConformalPoint::new(-q, p)).unwrap().v;
                assert!(v_ahead >= -1e-14);
            }
        }
    }

    #[test]
    fn governing_equations_flat_water() {
        let wave = StokesWave::flat(10.0, 9.8, 4);
        let grid = GridSpec {
            nq: 8,
            np: 4,
            ..GridSpec::default()
        };
        let report = check_governing_equations(&wave, &grid).unwrap();
        assert_eq!(report.curl, 0.0);
        assert_eq!(report.divergence, 0.0);
        assert_eq!(report.kinematic, 0.0);
        assert_eq!(report.deep_speed, 0.0);
        assert_eq!(report.bernoulli, 0.0);
        assert!(report.max_u_minus_c < 0.0);
    }

    #[test]
    fn governing_equations_solved_wave() {
        let wave = wave_05();
        let report = check_governing_equations(wave, &GridSpec::default()).unwrap();
        assert!(report.cauchy_riemann_scaled() <= 1e-6, "{report:?}");
        assert!(report.kinematic_scaled() <= 1e-8, "{report:?}");
        assert!(report.max_u_minus_c < 0.0);
        assert!(report.deep_speed < 1e-10);
        assert!(report.bernoulli <= 1e-12);
        assert!(report.min_energy >= 0.5 * report.delta0().powi(2));
    }
}
