//! Fluid-particle paths and the streamline time-period.
//!
//! Along a streamline of the steady moving-frame flow the velocity potential
//! obeys `dq/dt = (u - c)^2 + v^2 = 2E(q, p)`, so a path is one scalar ODE.
//! [`particle_path`] integrates that reduced equation; [`particle_path_physical`]
//! integrates the lab-frame system `x' = u(x - ct, y), y' = v(x - ct, y)`
//! directly and serves as an independent check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{self, FieldError, MapState, PhysicalPoint, VelocitySample};
use crate::functionals::Functionals;
use crate::solver::StokesWave;

/// Steps per estimated period used when no step is given.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 2000;
/// `|drift| <= CLOSURE_TOL * lambda` counts as a closed path.
pub const CLOSURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodMethod {
    Quadrature,
    OdeEvent,
    PhysicalRk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticlePath {
    pub t: Vec<f64>,
    pub lab_points: Vec<PhysicalPoint>,
    pub moving_points: Vec<PhysicalPoint>,
    /// Unreduced velocity potential along the path.
    pub q: Vec<f64>,
    pub velocities: Vec<VelocitySample>,
    /// Frame the integrator worked in.
    pub frame: Frame,
    pub p: f64,
    pub x0: f64,
    pub y0: f64,
    pub t0: f64,
}

impl ParticlePath {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn end(&self) -> PhysicalPoint {
        *self
            .lab_points
            .last()
            .expect("path has at least the initial point")
    }

    /// `(1/2) int (u^2 + v^2) dt` and `(1/2) int ((u - c)^2 + v^2) dt` by the
    /// trapezoidal rule over the stored samples.
    pub fn kinetic_energies(&self) -> (f64, f64) {
        let mut lab = 0.0;
        let mut moving = 0.0;
        for i in 1..self.t.len() {
            let dt = self.t[i] - self.t[i - 1];
            lab += 0.5 * dt * (self.velocities[i - 1].e0 + self.velocities[i].e0);
            moving += 0.5 * dt * (self.velocities[i - 1].e + self.velocities[i].e);
        }
        (lab, moving)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodResult {
    #[serde(rename = "T")]
    pub period: f64,
    pub p: f64,
    pub drift: f64,
    pub closed: bool,
    pub method: PeriodMethod,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("step advances q by {advance:.4e} > c lambda / 8 = {limit:.4e}")]
    StepTooLarge { advance: f64, limit: f64 },
    #[error("invalid integration input: {0}")]
    InvalidInput(String),
}

fn closed(wave: &StokesWave, drift: f64) -> bool {
    drift.abs() <= CLOSURE_TOL * wave.lambda
}

fn rk4_q(wave: &StokesWave, p: f64, q: f64, h: f64) -> f64 {
    let f = |q: f64| 2.0 * MapState::eval(wave, Complex64::new(q, p)).energy();
    let k1 = f(q);
    let k2 = f(q + 0.5 * h * k1);
    let k3 = f(q + 0.5 * h * k2);
    let k4 = f(q + h * k3);
    q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Largest `2E` on the streamline, sampled at `4N` points.
fn max_phase_speed(wave: &StokesWave, p: f64) -> f64 {
    let m = 4 * wave.modes.max(1);
    (0..m)
        .map(|j| {
            let q = wave.period_q() * j as f64 / m as f64;
            2.0 * MapState::eval(wave, Complex64::new(q, p)).energy()
        })
        .fold(0.0, f64::max)
}

fn check_step(wave: &StokesWave, p: f64, h: f64) -> Result<(), TrajectoryError> {
    let limit = wave.period_q() / 8.0;
    let advance = max_phase_speed(wave, p) * h;
    if advance > limit {
        return Err(TrajectoryError::StepTooLarge { advance, limit });
    }
    Ok(())
}

fn step_count(duration: f64, step: f64) -> Result<usize, TrajectoryError> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(TrajectoryError::InvalidInput(format!(
            "duration {duration}"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(TrajectoryError::InvalidInput(format!("step {step}")));
    }
    Ok((duration / step).ceil() as usize)
}

/// Conformal coordinates of the particle at `(x0, y0)` at time `t0`, with `q`
/// chosen so that `x(q, p) = x0 - c t0` exactly (no reduction mod `c lambda`).
pub fn initial_conformal(
    wave: &StokesWave,
    x0: f64,
    y0: f64,
    t0: f64,
) -> Result<Complex64, TrajectoryError> {
    Ok(field::invert_physical(
        wave,
        PhysicalPoint::new(x0 - wave.c * t0, y0),
    )?)
}

/// Reduced-equation path over `duration`, with the step shortened so that the
/// last sample lands on `t0 + duration`.
pub fn particle_path(
    wave: &StokesWave,
    x0: f64,
    y0: f64,
    t0: f64,
    duration: f64,
    step: f64,
) -> Result<ParticlePath, TrajectoryError> {
    let n = step_count(duration, step)?;
    let w0 = initial_conformal(wave, x0, y0, t0)?;
    let p = w0.im;
    let h = if n == 0 { 0.0 } else { duration / n as f64 };
    check_step(wave, p, h)?;
    let limit = wave.period_q() / 8.0;

    let mut path = ParticlePath {
        t: Vec::with_capacity(n + 1),
        lab_points: Vec::with_capacity(n + 1),
        moving_points: Vec::with_capacity(n + 1),
        q: Vec::with_capacity(n + 1),
        velocities: Vec::with_capacity(n + 1),
        frame: Frame::Moving,
        p,
        x0,
        y0,
        t0,
    };
    let mut q = w0.re;
    for i in 0..=n {
        let t = t0 + h * i as f64;
        if i > 0 {
            let next = rk4_q(wave, p, q, h);
            if next - q > limit {
                return Err(TrajectoryError::StepTooLarge {
                    advance: next - q,
                    limit,
                });
            }
            q = next;
        }
        let state = MapState::eval(wave, Complex64::new(q, p));
        let moving = if i == 0 {
            PhysicalPoint::new(x0 - wave.c * t0, y0)
        } else {
            PhysicalPoint::new(state.z.re, state.z.im)
        };
        path.t.push(t);
        path.q.push(q);
        path.moving_points.push(moving);
        path.lab_points
            .push(PhysicalPoint::new(moving.x + wave.c * t, moving.y));
        path.velocities.push(state.velocity(wave.c));
    }
    Ok(path)
}

/// Lab-frame RK4 on `(x, y)` with every velocity obtained by conformal inversion.
pub fn particle_path_physical(
    wave: &StokesWave,
    x0: f64,
    y0: f64,
    t0: f64,
    duration: f64,
    step: f64,
) -> Result<ParticlePath, TrajectoryError> {
    let n = step_count(duration, step)?;
    let w0 = initial_conformal(wave, x0, y0, t0)?;
    let h = if n == 0 { 0.0 } else { duration / n as f64 };
    check_step(wave, w0.im, h)?;
    let c = wave.c;

    let mut seed = w0;
    let mut eval =
        |t: f64, x: f64, y: f64| -> Result<(Complex64, VelocitySample), TrajectoryError> {
            let w = field::invert_from(wave, PhysicalPoint::new(x - c * t, y), seed)?;
            seed = w;
            Ok((w, MapState::eval(wave, w).velocity(c)))
        };

    let mut path = ParticlePath {
        t: Vec::with_capacity(n + 1),
        lab_points: Vec::with_capacity(n + 1),
        moving_points: Vec::with_capacity(n + 1),
        q: Vec::with_capacity(n + 1),
        velocities: Vec::with_capacity(n + 1),
        frame: Frame::Lab,
        p: w0.im,
        x0,
        y0,
        t0,
    };
    let (mut x, mut y) = (x0, y0);
    for i in 0..=n {
        let t = t0 + h * i as f64;
        if i > 0 {
            let tp = t - h;
            let (_, k1) = eval(tp, x, y)?;
            let (_, k2) = eval(tp + 0.5 * h, x + 0.5 * h * k1.u, y + 0.5 * h * k1.v)?;
            let (_, k3) = eval(tp + 0.5 * h, x + 0.5 * h * k2.u, y + 0.5 * h * k2.v)?;
            let (_, k4) = eval(t, x + h * k3.u, y + h * k3.v)?;
            x += h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
            y += h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
        }
        let (w, vel) = eval(t, x, y)?;
        path.t.push(t);
        path.q.push(w.re);
        path.lab_points.push(PhysicalPoint::new(x, y));
        path.moving_points.push(PhysicalPoint::new(x - c * t, y));
        path.velocities.push(vel);
    }
    Ok(path)
}

/// Time for the phase to advance by one conformal period from `q_start`,
/// with fixed-step RK4 and bisection on the crossing step.
pub fn period_by_simulation_from(
    wave: &StokesWave,
    p: f64,
    q_start: f64,
    step: f64,
) -> Result<PeriodResult, TrajectoryError> {
    if step.is_nan() || step <= 0.0 || p.is_nan() || p < 0.0 {
        return Err(TrajectoryError::InvalidInput(format!(
            "p = {p}, step = {step}"
        )));
    }
    check_step(wave, p, step)?;
    let period_q = wave.period_q();
    let target = q_start + period_q;
    let tol = 1e-12 * period_q;
    let mut q = q_start;
    let mut steps = 0usize;
    loop {
        let next = rk4_q(wave, p, q, step);
        if next >= target {
            break;
        }
        q = next;
        steps += 1;
    }
    // q(tau) = rk4(q, tau) is increasing in tau for admissible steps
    let (mut lo, mut hi) = (0.0, step);
    let mut tau = 0.5 * step;
    for _ in 0..200 {
        tau = 0.5 * (lo + hi);
        let defect = rk4_q(wave, p, q, tau) - target;
        if defect.abs() <= tol {
            break;
        }
        if defect < 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    let period = steps as f64 * step + tau;
    let drift = wave.c * period - wave.lambda;
    Ok(PeriodResult {
        period,
        p,
        drift,
        closed: closed(wave, drift),
        method: PeriodMethod::OdeEvent,
    })
}

/// Streamline time-period by event detection, starting at the crest vertical.
pub fn streamline_period_by_simulation(
    wave: &StokesWave,
    p: f64,
) -> Result<PeriodResult, TrajectoryError> {
    let estimate = Functionals::new(wave).streamline_period(p);
    period_by_simulation_from(wave, p, 0.0, estimate / DEFAULT_STEPS_PER_PERIOD as f64)
}

/// Period of the particle at `(x0, y0)` at time `t0`.
pub fn period_from_initial_data(
    wave: &StokesWave,
    x0: f64,
    y0: f64,
    t0: f64,
) -> Result<PeriodResult, TrajectoryError> {
    let w0 = initial_conformal(wave, x0, y0, t0)?;
    let estimate = Functionals::new(wave).streamline_period(w0.im);
    period_by_simulation_from(
        wave,
        w0.im,
        w0.re,
        estimate / DEFAULT_STEPS_PER_PERIOD as f64,
    )
}

/// Drift `c T - lambda` over one streamline period, from the quadrature period.
pub fn drift(wave: &StokesWave, p: f64) -> PeriodResult {
    let f = Functionals::new(wave);
    let drift = f.drift(p);
    PeriodResult {
        period: f.streamline_period(p),
        p,
        drift,
        closed: closed(wave, drift),
        method: PeriodMethod::Quadrature,
    }
}

/// Lab and moving-frame kinetic energy accumulated over one streamline period
/// by a particle starting at `(x0, y0)` at `t0`, integrated in time.
pub fn energies_over_period(
    wave: &StokesWave,
    x0: f64,
    y0: f64,
    t0: f64,
    steps: usize,
) -> Result<(f64, f64), TrajectoryError> {
    let w0 = initial_conformal(wave, x0, y0, t0)?;
    let period = Functionals::new(wave).streamline_period(w0.im);
    let path = particle_path(wave, x0, y0, t0, period, period / steps.max(1) as f64)?;
    Ok(path.kinetic_energies())
}
