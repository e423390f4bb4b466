//! Numerical certification of the qualitative properties of the functionals.
//!
//! Each check is a pure function of its inputs. [`verify_all`] runs the full
//! battery on one wave and returns a [`PropertyReport`] ordered by check name.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{self, ConformalPoint, GridSpec};
use crate::functionals::{default_p_grid, FunctionalCurve, FunctionalKind, Functionals};
use crate::solver::StokesWave;
use crate::trajectories;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropertyError {
    #[error("curve has {0} points; at least 3 are needed")]
    TooFewPoints(usize),
    #[error("non-positive value {value} at p = {p}; logarithm undefined")]
    NonpositiveValue { p: f64, value: f64 },
    #[error("period curve does not start at p = 0")]
    MissingSurfacePoint,
    #[error("check not applicable: {0}")]
    NotApplicable(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Line { p: f64 },
    Point { q: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub statement: String,
    pub passed: bool,
    /// Signed distance to violation in the check's own normalization.
    pub worst_margin: f64,
    pub location: Option<Location>,
    pub tolerance_used: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Passed only because the wave is flat water.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: impl Into<String>, statement: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            passed: false,
            worst_margin: 0.0,
            location: None,
            tolerance_used: 0.0,
            skipped: None,
            error: None,
            degenerate: false,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn renamed(mut self, name: impl Into<String>, statement: &str) -> Self {
        self.name = name.into();
        self.statement = statement.to_string();
        self
    }

    /// A tolerance comparison `error <= tol`, margin `tol - error` relative to `tol`.
    fn bound(
        name: &str,
        statement: &str,
        error: f64,
        tol: f64,
        location: Option<Location>,
    ) -> Self {
        let mut check = Self::new(name, statement);
        check.passed = error <= tol;
        check.worst_margin = if tol > 0.0 {
            (tol - error) / tol
        } else {
            -error
        };
        check.tolerance_used = tol;
        check.location = location;
        check.note = Some(format!("observed {error:.3e}"));
        check
    }

    fn skipped(name: &str, statement: &str, reason: &str) -> Self {
        let mut check = Self::new(name, statement);
        check.passed = true;
        check.skipped = Some(reason.to_string());
        check
    }

    fn failed_eval(name: &str, statement: &str, err: impl std::fmt::Display) -> Self {
        let mut check = Self::new(name, statement);
        check.error = Some(err.to_string());
        check
    }

    fn degenerate(name: &str, statement: &str, reason: &str) -> Self {
        let mut check = Self::new(name, statement);
        check.passed = true;
        check.degenerate = true;
        check.note = Some(reason.to_string());
        check
    }

    pub fn is_counted(&self) -> bool {
        self.skipped.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub wave_id: String,
    pub timestamp: String,
    pub checks: Vec<CheckResult>,
}

impl PropertyReport {
    /// All evaluated checks passed.
    pub fn all_passed(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.is_counted())
            .all(|c| c.passed && c.error.is_none())
    }

    pub fn has_errors(&self) -> bool {
        self.checks.iter().any(|c| c.error.is_some())
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks
            .iter()
            .filter(|c| c.is_counted() && (!c.passed || c.error.is_some()))
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = String::new();
        let _ = writeln!(out, "wave: {}", self.wave_id);
        let _ = writeln!(out, "timestamp: {}", self.timestamp);
        let _ = writeln!(
            out,
            "{:<width$}  {:<7}  {:>12}  {:>10}  detail",
            "check", "status", "margin", "tol"
        );
        for c in &self.checks {
            let status = if c.skipped.is_some() {
                "SKIP"
            } else if c.error.is_some() {
                "ERROR"
            } else if c.passed {
                if c.degenerate {
                    "PASS*"
                } else {
                    "PASS"
                }
            } else {
                "FAIL"
            };
            let detail = c
                .skipped
                .as_deref()
                .or(c.error.as_deref())
                .or(c.note.as_deref())
                .unwrap_or("");
            let _ = writeln!(
                out,
                "{:<width$}  {:<7}  {:>12.4e}  {:>10.1e}  {}",
                c.name, status, c.worst_margin, c.tolerance_used, detail
            );
        }
        let counted = self.checks.iter().filter(|c| c.is_counted()).count();
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "{} checks, {} evaluated, {} failed ({} skipped)",
            self.checks.len(),
            counted,
            failed,
            self.checks.len() - counted
        );
        out
    }
}

/// Tolerances, keyed by the names accepted in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Monotonicity and convexity of sampled curves.
    pub shape: f64,
    /// Same-quadrature algebraic identities (relative).
    pub identity: f64,
    pub parseval: f64,
    pub ode_period: f64,
    /// Reduced vs physical integrator endpoints, in units of the wavelength.
    pub integrator: f64,
    pub bernoulli: f64,
    pub cauchy_riemann: f64,
    pub kinematic: f64,
    pub limit: f64,
    pub constant_energy: f64,
    pub initial_data: f64,
    pub x0_independence: f64,
    pub surface_integral: f64,
    pub quadrature: f64,
    /// Required ratio drift(p_max) / drift(0).
    pub drift_decay: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            shape: 1e-9,
            identity: 1e-12,
            parseval: 1e-8,
            ode_period: 1e-7,
            integrator: 1e-6,
            bernoulli: 1e-12,
            cauchy_riemann: 1e-6,
            kinematic: 1e-8,
            limit: 1e-8,
            constant_energy: 1e-6,
            initial_data: 1e-10,
            x0_independence: 1e-6,
            surface_integral: 1e-6,
            quadrature: 1e-10,
            drift_decay: 1e-4,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), PropertyError> {
        let slot = match name {
            "shape" => &mut self.shape,
            "identity" => &mut self.identity,
            "parseval" => &mut self.parseval,
            "ode_period" => &mut self.ode_period,
            "integrator" => &mut self.integrator,
            "bernoulli" => &mut self.bernoulli,
            "cauchy_riemann" => &mut self.cauchy_riemann,
            "kinematic" => &mut self.kinematic,
            "limit" => &mut self.limit,
            "constant_energy" => &mut self.constant_energy,
            "initial_data" => &mut self.initial_data,
            "x0_independence" => &mut self.x0_independence,
            "surface_integral" => &mut self.surface_integral,
            "quadrature" => &mut self.quadrature,
            "drift_decay" => &mut self.drift_decay,
            other => {
                return Err(PropertyError::NotApplicable(format!(
                    "unknown tolerance '{other}'"
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// `None` uses [`default_p_grid`].
    pub p_grid: Option<Vec<f64>>,
    pub s_mu: Vec<f64>,
    pub s_mu_root: Vec<f64>,
    pub s_energy: Vec<f64>,
    pub s_moving_energy: Vec<f64>,
    /// `None` uses `4N`.
    pub nodes: Option<usize>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub governing_grid: GridSpec,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            p_grid: None,
            s_mu: vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0],
            s_mu_root: vec![1.0, 2.0],
            s_energy: vec![-1.0, 0.0, 2.0],
            s_moving_energy: vec![-1.0, 0.0, 1.0, 2.0, 3.0],
            nodes: None,
            tolerances: Tolerances::default(),
            seed: 0x5eed,
            governing_grid: GridSpec::default(),
        }
    }
}

fn curve_location(curve: &FunctionalCurve, i: usize) -> Option<Location> {
    curve.p_grid.get(i).map(|&p| Location::Line { p })
}

/// `values[i+1] <= values[i] + tol * max|values|` for all `i`.
pub fn check_monotone_nonincreasing(
    curve: &FunctionalCurve,
    tol: f64,
) -> Result<CheckResult, PropertyError> {
    if curve.len() < 3 {
        return Err(PropertyError::TooFewPoints(curve.len()));
    }
    let scale = curve.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut check = CheckResult::new(
        format!("{}.non_increasing", curve.label()),
        "non-increasing in the stream-function level p",
    );
    let mut worst = f64::INFINITY;
    let mut at = 0;
    for i in 0..curve.len() - 1 {
        let drop = curve.values[i] - curve.values[i + 1];
        let margin = if scale > 0.0 { drop / scale } else { drop };
        if margin < worst {
            worst = margin;
            at = i + 1;
        }
    }
    check.passed = worst >= -tol;
    check.worst_margin = worst;
    check.location = curve_location(curve, at);
    check.tolerance_used = tol;
    Ok(check)
}

fn convexity_margin(p: &[f64], v: &[f64]) -> (f64, usize, f64) {
    let slopes: Vec<f64> = (0..v.len() - 1)
        .map(|i| (v[i + 1] - v[i]) / (p[i + 1] - p[i]))
        .collect();
    let scale = slopes.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut worst = f64::INFINITY;
    let mut at = 1;
    for i in 1..slopes.len() {
        let d2 = slopes[i] - slopes[i - 1];
        let margin = if scale > 0.0 { d2 / scale } else { d2 };
        if margin < worst {
            worst = margin;
            at = i;
        }
    }
    (worst, at, scale)
}

/// Divided second differences `>= -tol * max|slope|` at every interior point.
pub fn check_convex(curve: &FunctionalCurve, tol: f64) -> Result<CheckResult, PropertyError> {
    if curve.len() < 3 {
        return Err(PropertyError::TooFewPoints(curve.len()));
    }
    let (worst, at, _) = convexity_margin(&curve.p_grid, &curve.values);
    let mut check = CheckResult::new(format!("{}.convex", curve.label()), "convex in p");
    check.passed = worst >= -tol;
    check.worst_margin = worst;
    check.location = curve_location(curve, at);
    check.tolerance_used = tol;
    Ok(check)
}

/// [`check_convex`] applied to `ln(values)`.
pub fn check_log_convex(curve: &FunctionalCurve, tol: f64) -> Result<CheckResult, PropertyError> {
    if curve.len() < 3 {
        return Err(PropertyError::TooFewPoints(curve.len()));
    }
    if let Some(i) = curve.values.iter().position(|&v| v.is_nan() || v <= 0.0) {
        return Err(PropertyError::NonpositiveValue {
            p: curve.p_grid[i],
            value: curve.values[i],
        });
    }
    let logs: Vec<f64> = curve.values.iter().map(|v| v.ln()).collect();
    let (worst, at, _) = convexity_margin(&curve.p_grid, &logs);
    let mut check = CheckResult::new(
        format!("{}.log_convex", curve.label()),
        "logarithm convex in p",
    );
    check.passed = worst >= -tol;
    check.worst_margin = worst;
    check.location = curve_location(curve, at);
    check.tolerance_used = tol;
    Ok(check)
}

/// `int dx / (c - u(x, eta(x)))` over one wavelength by the midpoint rule on
/// `4N` points of the physical surface.
pub fn surface_period_integral(wave: &StokesWave) -> Result<f64, PropertyError> {
    let m = 4 * wave.modes.max(1);
    let dx = wave.lambda / m as f64;
    let mut sum = 0.0;
    for i in 0..m {
        let x = -0.5 * wave.lambda + (i as f64 + 0.5) * dx;
        let q = field::invert_on_streamline(wave, 0.0, x, -wave.c * x)
            .ok_or_else(|| PropertyError::Evaluation(format!("surface inversion at x = {x}")))?;
        let vel = field::velocity(wave, ConformalPoint::new(q, 0.0))
            .map_err(|e| PropertyError::Evaluation(e.to_string()))?;
        sum += 1.0 / (wave.c - vel.u);
    }
    Ok(sum * dx)
}

/// `lambda/c < T(p) <= T(0)` on the curve, plus the surface integral identity
/// for `T(0)`.
///
/// The strict lower bound uses the cancellation-free excess `T(p) - lambda/c`
/// of the wave; the curve values must agree with `lambda/c + excess` to 1e-12
/// relative, so a curve that does not belong to the wave fails.
pub fn check_period_bounds(
    wave: &StokesWave,
    t_curve: &FunctionalCurve,
    surface_tol: f64,
) -> Result<CheckResult, PropertyError> {
    const REF: &str = "wave period < T(p) <= surface integral of 1/(c - u)";
    let name = "T.bounds";
    if t_curve.kind != FunctionalKind::Period {
        return Err(PropertyError::NotApplicable(format!(
            "curve kind {}",
            t_curve.kind
        )));
    }
    let t0 = t_curve
        .surface_value()
        .ok_or(PropertyError::MissingSurfacePoint)?;
    let wave_period = wave.wave_period();
    let surface = surface_period_integral(wave)?;
    let surface_err = (surface - t0).abs() / t0;

    if wave.is_flat() {
        let mut check = CheckResult::degenerate(
            name,
            REF,
            "flat water: T = lambda/c on every streamline (closed paths)",
        );
        let exact = t_curve
            .values
            .iter()
            .all(|&t| (t - wave_period).abs() <= 1e-12 * wave_period);
        check.passed = exact && surface_err <= surface_tol;
        check.tolerance_used = surface_tol;
        return Ok(check);
    }

    let f = Functionals::with_nodes(wave, t_curve.quadrature_nodes);
    let mut worst = f64::INFINITY;
    let mut at = 0;
    let mut consistent = true;
    let mut upper_ok = true;
    for (i, (&p, &t)) in t_curve.p_grid.iter().zip(&t_curve.values).enumerate() {
        let excess = f.period_excess(p);
        if (t - (wave_period + excess)).abs() > 1e-12 * wave_period {
            consistent = false;
        }
        let lower = excess / wave_period;
        let upper = (t0 * (1.0 + 1e-12) - t) / wave_period;
        if upper < 0.0 {
            upper_ok = false;
        }
        let margin = lower.min(upper);
        if margin < worst {
            worst = margin;
            at = i;
        }
    }
    let mut check = CheckResult::new(name, REF);
    check.passed = consistent && upper_ok && worst > 0.0 && surface_err <= surface_tol;
    check.worst_margin = worst;
    check.location = curve_location(t_curve, at);
    check.tolerance_used = surface_tol;
    check.note = Some(format!(
        "min (T - lambda/c)/(lambda/c) = {worst:.3e}; surface integral rel. err {surface_err:.3e}{}",
        if consistent { "" } else { "; curve inconsistent with wave" }
    ));
    Ok(check)
}

/// `max |E_moving(p) - c lambda / 2| <= tol * c lambda / 2`.
pub fn check_constant_moving_energy(
    wave: &StokesWave,
    curve: &FunctionalCurve,
    tol: f64,
) -> Result<CheckResult, PropertyError> {
    let applicable = curve.kind == FunctionalKind::TotalEnergyMoving
        || (curve.kind == FunctionalKind::MovingEnergyS && curve.s == 1.0);
    if !applicable {
        return Err(PropertyError::NotApplicable(format!(
            "{} is not the s = 1 moving-frame energy",
            curve.label()
        )));
    }
    let target = 0.5 * wave.period_q();
    let (mut worst, mut at) = (0.0f64, 0);
    for (i, &v) in curve.values.iter().enumerate() {
        let err = (v - target).abs() / target;
        if err > worst {
            worst = err;
            at = i;
        }
    }
    Ok(CheckResult::bound(
        "E_total_moving.constant",
        "moving-frame total energy equals c lambda / 2",
        worst,
        tol,
        curve_location(curve, at),
    ))
}

fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

struct Suite<'a> {
    wave: &'a StokesWave,
    f: Functionals<'a>,
    grid: Vec<f64>,
    tol: &'a Tolerances,
    checks: Vec<CheckResult>,
}

impl Suite<'_> {
    fn push(&mut self, result: Result<CheckResult, PropertyError>, name: &str, statement: &str) {
        match result {
            Ok(check) => self.checks.push(check),
            Err(err) => self
                .checks
                .push(CheckResult::failed_eval(name, statement, err)),
        }
    }

    fn curve(&self, kind: FunctionalKind, s: f64) -> Result<FunctionalCurve, PropertyError> {
        let mut curve = self
            .f
            .sweep(kind, s, &self.grid)
            .map_err(|e| PropertyError::Evaluation(e.to_string()))?;
        curve.wave_id = String::new();
        Ok(curve)
    }

    /// Monotone, convex and (optionally) log-convex checks on one curve.
    fn shape(
        &mut self,
        kind: FunctionalKind,
        s: f64,
        log: bool,
        statement: &str,
        degenerate: Option<&str>,
    ) {
        let label = if kind.uses_exponent() {
            format!("{kind}[s={s}]")
        } else {
            kind.to_string()
        };
        let mut names = vec![format!("{label}.non_increasing"), format!("{label}.convex")];
        if log {
            names.push(format!("{label}.log_convex"));
        }
        if let Some(reason) = degenerate {
            for name in names {
                self.checks
                    .push(CheckResult::degenerate(&name, statement, reason));
            }
            return;
        }
        let curve = match self.curve(kind, s) {
            Ok(c) => c,
            Err(err) => {
                for name in names {
                    self.checks
                        .push(CheckResult::failed_eval(&name, statement, &err));
                }
                return;
            }
        };
        let tol = self.tol.shape;
        let mono =
            check_monotone_nonincreasing(&curve, tol).map(|c| c.renamed(&names[0], statement));
        self.push(mono, &names[0], statement);
        let conv = check_convex(&curve, tol).map(|c| c.renamed(&names[1], statement));
        self.push(conv, &names[1], statement);
        if log {
            let lc = check_log_convex(&curve, tol).map(|c| c.renamed(&names[2], statement));
            self.push(lc, &names[2], statement);
        }
    }
}

const REF_MU: &str = "integral means of E are convex and non-increasing, log-convex";
const REF_MU_ROOT: &str = "[mu_s]^(1/s) is convex and non-increasing for s > 0";
const REF_T: &str = "streamline period is non-increasing, convex and log-convex";
const REF_E: &str = "lab-frame total energy over a period is convex, non-increasing, log-convex";
const REF_ES: &str = "generalized total energies are convex, non-increasing, log-convex";
const REF_EMOV: &str = "moving-frame total energy over a period equals c lambda / 2";
const REF_DRIFT: &str = "no closed paths: the drift of every streamline is positive";
const REF_INDEP: &str = "streamline period independent of initial data";
const REF_X0: &str = "total energy over a period independent of the starting point";
const REF_IDENT: &str = "same-quadrature identity";
const REF_ORACLE: &str = "independent numerical route";
const REF_GOV: &str = "governing equations of the steady flow";
const REF_LIMIT: &str = "deep-water limits of the functionals";

/// Runs every check on `wave`. Evaluation failures are reported as checks with
/// `error` set rather than aborting the run.
pub fn verify_all(wave: &StokesWave, config: &VerifyConfig, wave_id: &str) -> PropertyReport {
    let f = match config.nodes {
        Some(n) => Functionals::with_nodes(wave, n),
        None => Functionals::new(wave),
    };
    let grid = config
        .p_grid
        .clone()
        .unwrap_or_else(|| default_p_grid(wave));
    let tol = &config.tolerances;
    let mut suite = Suite {
        wave,
        f,
        grid,
        tol,
        checks: Vec::new(),
    };
    let flat = wave.is_flat();
    let period_q = wave.period_q();
    let wave_period = wave.wave_period();

    for &s in &config.s_mu {
        suite.shape(FunctionalKind::MuS, s, true, REF_MU, None);
    }
    for &s in &config.s_mu_root {
        if s > 0.0 {
            suite.shape(FunctionalKind::MuSRoot, s, false, REF_MU_ROOT, None);
        }
    }
    suite.shape(FunctionalKind::Period, 0.0, true, REF_T, None);
    let zero_energy = flat.then_some("flat water: lab-frame energy vanishes identically");
    suite.shape(FunctionalKind::TotalEnergy, 0.0, true, REF_E, zero_energy);
    for &s in &config.s_energy {
        let degenerate = if s == 0.0 { None } else { zero_energy };
        suite.shape(FunctionalKind::EnergyS, s, true, REF_ES, degenerate);
    }
    for &s in &config.s_moving_energy {
        suite.shape(FunctionalKind::MovingEnergyS, s, true, REF_ES, None);
    }

    // period bounds and moving-frame energy
    match suite.curve(FunctionalKind::Period, 0.0) {
        Ok(curve) => {
            let r = check_period_bounds(wave, &curve, tol.surface_integral);
            suite.push(r, "T.bounds", REF_T);
        }
        Err(err) => suite
            .checks
            .push(CheckResult::failed_eval("T.bounds", REF_T, err)),
    }
    match suite.curve(FunctionalKind::TotalEnergyMoving, 0.0) {
        Ok(curve) => {
            let r = check_constant_moving_energy(wave, &curve, tol.constant_energy);
            suite.push(r, "E_total_moving.constant", REF_EMOV);
        }
        Err(err) => suite.checks.push(CheckResult::failed_eval(
            "E_total_moving.constant",
            REF_EMOV,
            err,
        )),
    }
    suite.checks.push(CheckResult::skipped(
        "T.evenness",
        REF_T,
        "evenness in p needs the flow above the free surface, which is not represented",
    ));

    drift_checks(&mut suite, flat);
    initial_data_checks(&mut suite, config.seed);
    identity_checks(&mut suite, config);
    oracle_checks(&mut suite);
    governing_checks(&mut suite, &config.governing_grid);
    limit_checks(&mut suite, config);

    // quadrature convergence under node doubling
    {
        let doubled = Functionals::with_nodes(wave, 2 * suite.f.nodes());
        let mut worst = 0.0f64;
        let mut at = 0.0;
        for &p in &[0.0, 0.1 * period_q, period_q] {
            for (a, b) in [
                (suite.f.mu_s(2.0, p), doubled.mu_s(2.0, p)),
                (suite.f.streamline_period(p), doubled.streamline_period(p)),
                (
                    suite.f.total_kinetic_energy(p),
                    doubled.total_kinetic_energy(p),
                ),
            ] {
                let e = rel_err(a, b);
                if e > worst {
                    worst = e;
                    at = p;
                }
            }
        }
        suite.checks.push(CheckResult::bound(
            "quadrature.node_doubling",
            "periodic trapezoid converged",
            worst,
            tol.quadrature,
            Some(Location::Line { p: at }),
        ));
    }
    let _ = wave_period;

    let mut checks = suite.checks;
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    PropertyReport {
        wave_id: wave_id.to_string(),
        timestamp: timestamp(),
        checks,
    }
}

fn timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

fn drift_checks(suite: &mut Suite<'_>, flat: bool) {
    let wave = suite.wave;
    let drifts: Vec<f64> = suite.grid.iter().map(|&p| suite.f.drift(p)).collect();
    if flat {
        let exact = drifts
            .iter()
            .all(|&d| d.abs() <= trajectories::CLOSURE_TOL * wave.lambda);
        for name in ["drift.positive", "drift.decay"] {
            let mut c =
                CheckResult::degenerate(name, REF_DRIFT, "flat water: every path is closed");
            c.passed = exact;
            suite.checks.push(c);
        }
        return;
    }
    let (mut worst, mut at) = (f64::INFINITY, 0.0);
    for (&p, &d) in suite.grid.iter().zip(&drifts) {
        let m = d / wave.lambda;
        if m < worst {
            worst = m;
            at = p;
        }
    }
    let mut positive = CheckResult::new("drift.positive", REF_DRIFT);
    positive.passed = worst > 0.0;
    positive.worst_margin = worst;
    positive.location = Some(Location::Line { p: at });
    positive.note = Some("margin is min drift / lambda".into());
    suite.checks.push(positive);

    let first = drifts[0];
    let last = *drifts.last().unwrap_or(&first);
    let ratio = if first > 0.0 {
        last / first
    } else {
        f64::INFINITY
    };
    let p_last = *suite.grid.last().unwrap_or(&0.0);
    let decay = CheckResult::bound(
        "drift.decay",
        "drift tends to zero with depth",
        ratio,
        suite.tol.drift_decay,
        Some(Location::Line { p: p_last }),
    );
    suite.checks.push(decay.with_note(format!(
        "drift(p_max)/drift(p_0) = {ratio:.3e} (p_0 = {})",
        suite.grid[0]
    )));
}

fn initial_data_checks(suite: &mut Suite<'_>, seed: u64) {
    let wave = suite.wave;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period_q = wave.period_q();
    let p = 0.0;
    let mut periods = Vec::new();
    let mut failure = None;
    'outer: for _ in 0..5 {
        let q = rng.gen_range(0.0..period_q);
        let start = field::map_point(wave, ConformalPoint::new(q, p));
        for _ in 0..3 {
            let t0 = rng.gen_range(0.0..3.0 * wave.wave_period());
            match trajectories::period_from_initial_data(wave, start.x + wave.c * t0, start.y, t0) {
                Ok(r) => periods.push(r.period),
                Err(e) => {
                    failure = Some(e.to_string());
                    break 'outer;
                }
            }
        }
    }
    match failure {
        Some(err) => suite.checks.push(CheckResult::failed_eval(
            "T.initial_data_independence",
            REF_INDEP,
            err,
        )),
        None => {
            let mean = periods.iter().sum::<f64>() / periods.len() as f64;
            let spread = periods
                .iter()
                .map(|t| rel_err(*t, mean))
                .fold(0.0, f64::max);
            suite.checks.push(
                CheckResult::bound(
                    "T.initial_data_independence",
                    REF_INDEP,
                    spread,
                    suite.tol.initial_data,
                    Some(Location::Line { p }),
                )
                .with_note(format!(
                    "15 simulated periods on the surface, max rel. spread {spread:.3e}"
                )),
            );
        }
    }

    // lab-frame energy from particle paths started at three x0 on p = 0.1 c lambda
    let p_e = 0.1 * period_q;
    let reference = suite.f.total_kinetic_energy(p_e);
    let mut worst = 0.0f64;
    let mut err_msg = None;
    for q0 in [0.0, 0.3 * period_q, 0.71 * period_q] {
        let start = field::map_point(wave, ConformalPoint::new(q0, p_e));
        match trajectories::energies_over_period(
            wave,
            start.x,
            start.y,
            0.0,
            trajectories::DEFAULT_STEPS_PER_PERIOD,
        ) {
            Ok((lab, _)) => worst = worst.max(rel_err(lab, reference)),
            Err(e) => {
                err_msg = Some(e.to_string());
                break;
            }
        }
    }
    match err_msg {
        Some(err) => suite.checks.push(CheckResult::failed_eval(
            "E_total.x0_independence",
            REF_X0,
            err,
        )),
        None => suite.checks.push(CheckResult::bound(
            "E_total.x0_independence",
            REF_X0,
            worst,
            suite.tol.x0_independence,
            Some(Location::Line { p: p_e }),
        )),
    }
}

fn identity_checks(suite: &mut Suite<'_>, config: &VerifyConfig) {
    let cl = suite.wave.period_q();
    let tol = suite.tol.identity;
    let f = suite.f;
    let grid = suite.grid.clone();
    let worst_over = |g: &dyn Fn(f64) -> (f64, f64)| -> (f64, f64) {
        let mut worst = (0.0f64, 0.0);
        for &p in &grid {
            let (a, b) = g(p);
            let e = rel_err(a, b);
            if e > worst.0 {
                worst = (e, p);
            }
        }
        worst
    };

    let (e, p) = worst_over(&|p| (f.streamline_period(p), 0.5 * cl * f.mu_s(-1.0, p)));
    suite.checks.push(CheckResult::bound(
        "identity.T_eq_half_cl_mu_minus1",
        REF_IDENT,
        e,
        tol,
        Some(Location::Line { p }),
    ));
    let (e, p) = worst_over(&|p| (f.e_s(0.0, p), 0.5 * f.streamline_period(p)));
    suite.checks.push(CheckResult::bound(
        "identity.E_0_eq_half_T",
        REF_IDENT,
        e,
        tol,
        Some(Location::Line { p }),
    ));
    for &s in &[-1.0, 0.0, 2.0, 3.0] {
        let (e, p) =
            worst_over(&|p| (f.emov_s(s, p), 2f64.powf(s - 2.0) * cl * f.mu_s(s - 1.0, p)));
        suite.checks.push(CheckResult::bound(
            &format!("identity.Emov_s_eq_mu[s={s}]"),
            REF_IDENT,
            e,
            tol,
            Some(Location::Line { p }),
        ));
    }
    let (e, p) = worst_over(&|p| {
        (
            f.moving_energy_time_weighted(p),
            f.total_kinetic_energy_moving(p),
        )
    });
    suite.checks.push(CheckResult::bound(
        "identity.Emov_1_time_vs_q",
        REF_IDENT,
        e,
        tol,
        Some(Location::Line { p }),
    ));
    // literal |1 + c z'|^2 loses relative accuracy once E0 is tiny; compare on
    // the scale of c lambda / 2
    let mut worst = (0.0f64, 0.0);
    for &p in &grid {
        let e =
            (f.total_kinetic_energy(p) - f.total_kinetic_energy_conformal(p)).abs() / (0.5 * cl);
        if e > worst.0 {
            worst = (e, p);
        }
    }
    suite.checks.push(CheckResult::bound(
        "identity.E_total_conformal_form",
        REF_IDENT,
        worst.0,
        tol,
        Some(Location::Line { p: worst.1 }),
    ));
    let _ = config;
}

fn oracle_checks(suite: &mut Suite<'_>) {
    let wave = suite.wave;
    let cl = wave.period_q();
    let f = suite.f;

    let mut worst = (0.0f64, 0.0);
    for p in [0.0, 0.1 * cl, cl] {
        let e = rel_err(f.parseval_mu1(p), f.mu_s(1.0, p));
        if e > worst.0 {
            worst = (e, p);
        }
    }
    suite.checks.push(CheckResult::bound(
        "oracle.parseval_mu1",
        REF_ORACLE,
        worst.0,
        suite.tol.parseval,
        Some(Location::Line { p: worst.1 }),
    ));

    let mut worst = (0.0f64, 0.0);
    let mut failure = None;
    for p in [0.0, 0.5, 0.1 * cl] {
        match trajectories::streamline_period_by_simulation(wave, p) {
            Ok(r) => {
                let e = rel_err(r.period, f.streamline_period(p));
                if e > worst.0 {
                    worst = (e, p);
                }
            }
            Err(e) => failure = Some(e.to_string()),
        }
    }
    match failure {
        Some(err) => suite.checks.push(CheckResult::failed_eval(
            "oracle.period_ode_vs_quadrature",
            REF_ORACLE,
            err,
        )),
        None => suite.checks.push(CheckResult::bound(
            "oracle.period_ode_vs_quadrature",
            REF_ORACLE,
            worst.0,
            suite.tol.ode_period,
            Some(Location::Line { p: worst.1 }),
        )),
    }

    let p = 0.5;
    let start = field::map_point(wave, ConformalPoint::new(0.0, p));
    let period = f.streamline_period(p);
    let step = period / trajectories::DEFAULT_STEPS_PER_PERIOD as f64;
    let reduced = trajectories::particle_path(wave, start.x, start.y, 0.0, period, step);
    let physical = trajectories::particle_path_physical(wave, start.x, start.y, 0.0, period, step);
    match (reduced, physical) {
        (Ok(a), Ok(b)) => {
            let (ea, eb) = (a.end(), b.end());
            let dist = (ea.x - eb.x).hypot(ea.y - eb.y) / wave.lambda;
            suite.checks.push(CheckResult::bound(
                "oracle.integrators",
                REF_ORACLE,
                dist,
                suite.tol.integrator,
                Some(Location::Line { p }),
            ));
        }
        (Err(e), _) | (_, Err(e)) => suite.checks.push(CheckResult::failed_eval(
            "oracle.integrators",
            REF_ORACLE,
            e,
        )),
    }
}

fn governing_checks(suite: &mut Suite<'_>, grid: &GridSpec) {
    let report = match field::check_governing_equations(suite.wave, grid) {
        Ok(r) => r,
        Err(e) => {
            for name in [
                "governing.bernoulli",
                "governing.cauchy_riemann",
                "governing.kinematic",
                "governing.u_below_c",
                "governing.deep_rest",
            ] {
                suite
                    .checks
                    .push(CheckResult::failed_eval(name, REF_GOV, &e));
            }
            return;
        }
    };
    let tol = suite.tol;
    suite.checks.push(CheckResult::bound(
        "governing.bernoulli",
        REF_GOV,
        report.bernoulli,
        tol.bernoulli,
        None,
    ));
    suite.checks.push(CheckResult::bound(
        "governing.cauchy_riemann",
        REF_GOV,
        report.cauchy_riemann_scaled(),
        tol.cauchy_riemann,
        None,
    ));
    suite.checks.push(CheckResult::bound(
        "governing.kinematic",
        REF_GOV,
        report.kinematic_scaled(),
        tol.kinematic,
        None,
    ));
    let mut below = CheckResult::new(
        "governing.u_below_c",
        "wave speed exceeds the horizontal fluid velocity",
    );
    below.passed = report.max_u_minus_c < 0.0;
    below.worst_margin = -report.max_u_minus_c / suite.wave.c;
    below.note = Some(format!("delta_0 = min(c - u) = {:.6e}", report.delta0()));
    suite.checks.push(below);
    suite.checks.push(CheckResult::bound(
        "governing.deep_rest",
        "fluid at rest at great depth",
        report.deep_speed / suite.wave.c,
        1e-6,
        Some(Location::Line {
            p: 5.0 * suite.wave.period_q(),
        }),
    ));
    let mut stagnation = CheckResult::new(
        "diagnostic.min_energy",
        "no stagnation points in the moving frame",
    );
    let floor = 0.5 * report.delta0().powi(2);
    stagnation.passed = report.min_energy > 0.0 && report.min_energy >= floor * (1.0 - 1e-12);
    stagnation.worst_margin = report.min_energy / (0.5 * suite.wave.c * suite.wave.c);
    stagnation.note = Some(format!(
        "min E = {:.6e}, delta_0^2/2 = {floor:.6e}",
        report.min_energy
    ));
    suite.checks.push(stagnation);
}

fn limit_checks(suite: &mut Suite<'_>, config: &VerifyConfig) {
    let wave = suite.wave;
    let p = 10.0 * wave.period_q();
    let half_c2 = 0.5 * wave.c * wave.c;
    let tol = suite.tol.limit;
    let f = suite.f;
    for &s in &config.s_mu {
        let e = rel_err(f.mu_s(s, p), half_c2.powf(s));
        suite.checks.push(CheckResult::bound(
            &format!("limit.mu_s[s={s}]"),
            REF_LIMIT,
            e,
            tol,
            Some(Location::Line { p }),
        ));
    }
    for &s in config.s_mu_root.iter().filter(|s| **s > 0.0) {
        let e = match f.mu_s_root(s, p) {
            Ok(v) => rel_err(v, half_c2),
            Err(_) => f64::INFINITY,
        };
        suite.checks.push(CheckResult::bound(
            &format!("limit.mu_s_root[s={s}]"),
            REF_LIMIT,
            e,
            tol,
            Some(Location::Line { p }),
        ));
    }
    let e = rel_err(f.streamline_period(p), wave.wave_period());
    suite.checks.push(CheckResult::bound(
        "limit.T",
        REF_LIMIT,
        e,
        tol,
        Some(Location::Line { p }),
    ));
}
