//! Energy functionals along constant-`p` lines.
//!
//! Every functional is a periodic trapezoidal sum over `nodes` equispaced `q`
//! in one conformal period, summed in a fixed order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::MapState;
use crate::solver::StokesWave;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionalKind {
    #[serde(rename = "mu_s")]
    MuS,
    #[serde(rename = "mu_s_root")]
    MuSRoot,
    #[serde(rename = "T")]
    Period,
    #[serde(rename = "E_total")]
    TotalEnergy,
    #[serde(rename = "E_total_moving")]
    TotalEnergyMoving,
    #[serde(rename = "E_s")]
    EnergyS,
    #[serde(rename = "Emov_s")]
    MovingEnergyS,
    #[serde(rename = "drift")]
    Drift,
}

impl FunctionalKind {
    pub const ALL: [FunctionalKind; 8] = [
        Self::MuS,
        Self::MuSRoot,
        Self::Period,
        Self::TotalEnergy,
        Self::TotalEnergyMoving,
        Self::EnergyS,
        Self::MovingEnergyS,
        Self::Drift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MuS => "mu_s",
            Self::MuSRoot => "mu_s_root",
            Self::Period => "T",
            Self::TotalEnergy => "E_total",
            Self::TotalEnergyMoving => "E_total_moving",
            Self::EnergyS => "E_s",
            Self::MovingEnergyS => "Emov_s",
            Self::Drift => "drift",
        }
    }

    /// Whether the exponent `s` enters the functional.
    pub fn uses_exponent(self) -> bool {
        matches!(
            self,
            Self::MuS | Self::MuSRoot | Self::EnergyS | Self::MovingEnergyS
        )
    }
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionalKind {
    type Err = FunctionalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FunctionalError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("p grid is empty")]
    EmptyGrid,
    #[error("p grid must be strictly increasing and non-negative (offending p = {0})")]
    InvalidGrid(f64),
    #[error("{kind} at p = {p} is not finite")]
    NonFinite { kind: FunctionalKind, p: f64 },
    #[error("mu_s_root requires s > 0 (got {0})")]
    NonPositiveRootExponent(f64),
    #[error("unknown functional kind '{0}'")]
    UnknownKind(String),
}

/// A functional sampled on a `p` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalCurve {
    pub kind: FunctionalKind,
    pub s: f64,
    pub p_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub quadrature_nodes: usize,
    pub wave_id: String,
}

impl FunctionalCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `p = 0`, if the grid contains it.
    pub fn surface_value(&self) -> Option<f64> {
        match self.p_grid.first() {
            Some(&0.0) => Some(self.values[0]),
            _ => None,
        }
    }

    /// Label used in reports and file names, e.g. `mu_s[s=-0.5]` or `T`.
    pub fn label(&self) -> String {
        if self.kind.uses_exponent() {
            format!("{}[s={}]", self.kind, self.s)
        } else {
            self.kind.to_string()
        }
    }
}

/// Integrand samples on one line `p = const`.
#[derive(Debug, Clone, Copy)]
struct LineSample {
    e: f64,
    /// `E0 / E = c^2 |S|^2`
    ratio: f64,
    /// `S(w)`, for the drift
    series: Complex64,
    /// `z'(w)`, for the naive `|1 + c z'|^2` form
    dz: Complex64,
}

/// Evaluator bound to a wave and a quadrature size.
#[derive(Debug, Clone, Copy)]
pub struct Functionals<'a> {
    wave: &'a StokesWave,
    nodes: usize,
}

impl<'a> Functionals<'a> {
    /// Uses `4N` nodes.
    pub fn new(wave: &'a StokesWave) -> Self {
        Self::with_nodes(wave, default_nodes(wave))
    }

    pub fn with_nodes(wave: &'a StokesWave, nodes: usize) -> Self {
        Self {
            wave,
            nodes: nodes.max(1),
        }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn wave(&self) -> &'a StokesWave {
        self.wave
    }

    fn line(&self, p: f64) -> impl Iterator<Item = LineSample> + '_ {
        let period = self.wave.period_q();
        let c = self.wave.c;
        (0..self.nodes).map(move |j| {
            let q = period * j as f64 / self.nodes as f64;
            let st = MapState::eval(self.wave, Complex64::new(q, p));
            LineSample {
                e: st.energy(),
                ratio: st.lab_to_moving_ratio(c),
                series: st.series,
                dz: st.dz,
            }
        })
    }

    fn dq(&self) -> f64 {
        self.wave.period_q() / self.nodes as f64
    }

    /// Mean of `E^s` over one period.
    pub fn mu_s(&self, s: f64, p: f64) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        let sum: f64 = self.line(p).map(|x| x.e.powf(s)).sum();
        sum / self.nodes as f64
    }

    pub fn mu_s_root(&self, s: f64, p: f64) -> Result<f64, FunctionalError> {
        if s.is_nan() || s <= 0.0 {
            return Err(FunctionalError::NonPositiveRootExponent(s));
        }
        Ok(self.mu_s(s, p).powf(1.0 / s))
    }

    /// `mu_1` from the Fourier coefficients of the surface values of `h'`:
    /// `(1/2) sum |a_n|^2 exp(-2 n k p)`.
    pub fn parseval_mu1(&self, p: f64) -> f64 {
        let m = self.nodes;
        let period = self.wave.period_q();
        let boundary: Vec<Complex64> = (0..m)
            .map(|j| {
                let q = period * j as f64 / m as f64;
                MapState::eval(self.wave, Complex64::new(q, 0.0)).dz.inv()
            })
            .collect();
        let twiddle: Vec<Complex64> = (0..m)
            .map(|r| Complex64::from_polar(1.0, -2.0 * PI * r as f64 / m as f64))
            .collect();
        let mut total = 0.0;
        for n in 0..m {
            let mut a = Complex64::new(0.0, 0.0);
            for (j, g) in boundary.iter().enumerate() {
                a += g * twiddle[(n * j) % m];
            }
            a /= m as f64;
            total += a.norm_sqr() * (-2.0 * n as f64 * self.wave.k * p).exp();
        }
        0.5 * total
    }

    /// Streamline time-period `int dq / (2E)`.
    pub fn streamline_period(&self, p: f64) -> f64 {
        let sum: f64 = self.line(p).map(|x| 0.5 / x.e).sum();
        sum * self.dq()
    }

    /// Lab-frame total kinetic energy over one period, `(1/2) int E0/E dq`.
    pub fn total_kinetic_energy(&self, p: f64) -> f64 {
        let sum: f64 = self.line(p).map(|x| x.ratio).sum();
        0.5 * sum * self.dq()
    }

    /// The same quantity as `(1/2) int |1 + c z'|^2 dq`, evaluated literally.
    pub fn total_kinetic_energy_conformal(&self, p: f64) -> f64 {
        let c = self.wave.c;
        let sum: f64 = self
            .line(p)
            .map(|x| (Complex64::new(1.0, 0.0) + x.dz * c).norm_sqr())
            .sum();
        0.5 * sum * self.dq()
    }

    pub fn total_kinetic_energy_moving(&self, p: f64) -> f64 {
        self.emov_s(1.0, p)
    }

    /// Moving-frame energy over a period as a time integral `int E dt`, with the
    /// time increments `dt = dq / (2E)` taken at the quadrature nodes.
    pub fn moving_energy_time_weighted(&self, p: f64) -> f64 {
        let dq = self.dq();
        self.line(p).map(|x| x.e * (dq / (2.0 * x.e))).sum()
    }

    /// `2^(s-2) int E0^s / E dq`.
    pub fn e_s(&self, s: f64, p: f64) -> f64 {
        let sum: f64 = self
            .line(p)
            .map(|x| {
                let e0 = x.ratio * x.e;
                e0.powf(s) / x.e
            })
            .sum();
        2f64.powf(s - 2.0) * sum * self.dq()
    }

    /// `2^(s-2) int E^(s-1) dq`.
    pub fn emov_s(&self, s: f64, p: f64) -> f64 {
        let sum: f64 = self.line(p).map(|x| x.e.powf(s - 1.0)).sum();
        2f64.powf(s - 2.0) * sum * self.dq()
    }

    /// Horizontal drift per period, `c T - lambda`, arranged as
    /// `(lambda / M) sum (2 c Re S + c^2 |S|^2)` so that tiny deep-water drifts
    /// stay positive.
    pub fn drift(&self, p: f64) -> f64 {
        let c = self.wave.c;
        let sum: f64 = self
            .line(p)
            .map(|x| 2.0 * c * x.series.re + c * c * x.series.norm_sqr())
            .sum();
        sum * self.wave.lambda / self.nodes as f64
    }

    /// `T(p) - lambda / c`, from [`Self::drift`].
    pub fn period_excess(&self, p: f64) -> f64 {
        self.drift(p) / self.wave.c
    }

    pub fn evaluate(&self, kind: FunctionalKind, s: f64, p: f64) -> Result<f64, FunctionalError> {
        let value = match kind {
            FunctionalKind::MuS => self.mu_s(s, p),
            FunctionalKind::MuSRoot => self.mu_s_root(s, p)?,
            FunctionalKind::Period => self.streamline_period(p),
            FunctionalKind::TotalEnergy => self.total_kinetic_energy(p),
            FunctionalKind::TotalEnergyMoving => self.total_kinetic_energy_moving(p),
            FunctionalKind::EnergyS => self.e_s(s, p),
            FunctionalKind::MovingEnergyS => self.emov_s(s, p),
            FunctionalKind::Drift => self.drift(p),
        };
        if value.is_nan() {
            return Err(FunctionalError::NonFinite { kind, p });
        }
        Ok(value)
    }

    pub fn sweep(
        &self,
        kind: FunctionalKind,
        s: f64,
        p_grid: &[f64],
    ) -> Result<FunctionalCurve, FunctionalError> {
        validate_grid(p_grid)?;
        let values = p_grid
            .iter()
            .map(|&p| self.evaluate(kind, s, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FunctionalCurve {
            kind,
            s: if kind.uses_exponent() { s } else { 0.0 },
            p_grid: p_grid.to_vec(),
            values,
            quadrature_nodes: self.nodes,
            wave_id: String::new(),
        })
    }
}

pub fn default_nodes(wave: &StokesWave) -> usize {
    4 * wave.modes.max(1)
}

/// `p = 0` followed by 33 log-spaced points from `1e-3 c lambda` to `3 c lambda`.
pub fn default_p_grid(wave: &StokesWave) -> Vec<f64> {
    let period = wave.period_q();
    let mut grid = vec![0.0];
    grid.extend(log_grid(1e-3 * period, 3.0 * period, 33));
    grid
}

pub fn log_grid(p_min: f64, p_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![p_min];
    }
    let (a, b) = (p_min.ln(), p_max.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn linear_grid(p_min: f64, p_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![p_min];
    }
    (0..count)
        .map(|i| p_min + (p_max - p_min) * i as f64 / (count - 1) as f64)
        .collect()
}

pub fn validate_grid(p_grid: &[f64]) -> Result<(), FunctionalError> {
    if p_grid.is_empty() {
        return Err(FunctionalError::EmptyGrid);
    }
    if let Some(&p) = p_grid.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(FunctionalError::InvalidGrid(p));
    }
    if let Some(w) = p_grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(FunctionalError::InvalidGrid(w[1]));
    }
    Ok(())
}

/// Convenience wrapper over [`Functionals::sweep`] with the default `4N` nodes
/// unless `nodes` is given.
pub fn functional_sweep(
    wave: &StokesWave,
    kind: FunctionalKind,
    s: f64,
    p_grid: &[f64],
    nodes: Option<usize>,
) -> Result<FunctionalCurve, FunctionalError> {
    let f = match nodes {
        Some(n) => Functionals::with_nodes(wave, n),
        None => Functionals::new(wave),
    };
    f.sweep(kind, s, p_grid)
}
