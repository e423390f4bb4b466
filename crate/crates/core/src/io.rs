//! Wave files (JSON) and plot-ready CSV exports.
//!
//! Every writer goes through [`write_atomic`]: the content is written to a
//! temporary file in the target directory and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::field::{self, ConformalPoint, PhysicalPoint};
use crate::functionals::FunctionalCurve;
use crate::solver::StokesWave;
use crate::trajectories::{ParticlePath, PeriodResult};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: invalid wave file: {message}")]
    InvalidWave { path: PathBuf, message: String },
}

impl IoError {
    pub fn is_not_found(&self) -> bool {
        matches!(self, IoError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path)(e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, &text)
}

pub fn save_wave(path: &Path, wave: &StokesWave) -> Result<(), IoError> {
    write_json(path, wave)
}

/// Reads a wave file. Coefficients and derived fields are taken as stored.
pub fn load_wave(path: &Path) -> Result<StokesWave, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let wave: StokesWave = serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let invalid = |message: &str| IoError::InvalidWave {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let scalars = [
        wave.lambda,
        wave.wave_height,
        wave.gravity,
        wave.c,
        wave.bernoulli,
        wave.k,
        wave.steepness,
    ];
    if scalars
        .iter()
        .chain(&wave.coefficients)
        .any(|v| !v.is_finite())
    {
        return Err(invalid("non-finite value"));
    }
    if !(wave.lambda > 0.0 && wave.gravity > 0.0 && wave.c > 0.0) {
        return Err(invalid("lambda, gravity and c must be positive"));
    }
    if wave.coefficients.len() != wave.modes || wave.modes == 0 {
        return Err(invalid("coefficient count does not match modes"));
    }
    Ok(wave)
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// `x,y` rows.
pub fn points_csv(points: &[PhysicalPoint]) -> String {
    let mut out = String::from("x,y\n");
    for pt in points {
        let _ = writeln!(out, "{},{}", num(pt.x), num(pt.y));
    }
    out
}

/// One row of a field dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub q: f64,
    pub p: f64,
    pub u: f64,
    pub v: f64,
    pub e: f64,
    pub e0: f64,
    pub pressure: f64,
}

/// Samples the flow on `nq` points per period along each streamline of `p_grid`.
pub fn field_dump(
    wave: &StokesWave,
    nq: usize,
    p_grid: &[f64],
) -> Result<Vec<FieldRow>, field::FieldError> {
    let period = wave.period_q();
    let mut rows = Vec::with_capacity(nq * p_grid.len());
    for &p in p_grid {
        for j in 0..nq {
            let pt = ConformalPoint::new(period * j as f64 / nq as f64, p);
            let xy = field::map_point(wave, pt);
            let vel = field::velocity(wave, pt)?;
            rows.push(FieldRow {
                x: xy.x,
                y: xy.y,
                q: pt.q,
                p,
                u: vel.u,
                v: vel.v,
                e: vel.e,
                e0: vel.e0,
                pressure: field::pressure(wave, pt),
            });
        }
    }
    Ok(rows)
}

pub fn field_csv(rows: &[FieldRow]) -> String {
    let mut out = String::from("x,y,q,p,u,v,E,E0,P\n");
    for r in rows {
        let cols = [r.x, r.y, r.q, r.p, r.u, r.v, r.e, r.e0, r.pressure];
        let line: Vec<String> = cols.iter().map(|v| num(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// `p,value` rows after a `# kind=..., s=..., wave=..., nodes=...` line.
pub fn curve_csv(curve: &FunctionalCurve, wave_label: &str) -> String {
    let mut out = format!(
        "# kind={}, s={}, wave={}, nodes={}\np,value\n",
        curve.kind, curve.s, wave_label, curve.quadrature_nodes
    );
    for (p, v) in curve.p_grid.iter().zip(&curve.values) {
        let _ = writeln!(out, "{},{}", num(*p), num(*v));
    }
    out
}

/// `t,x,y` rows (plus `q,p` when `diagnostic`), lab frame, with an optional
/// `# T=..., drift=..., closed=...` trailer.
pub fn path_csv(path: &ParticlePath, summary: Option<&PeriodResult>, diagnostic: bool) -> String {
    let mut out = String::from(if diagnostic { "t,x,y,q,p\n" } else { "t,x,y\n" });
    for (i, t) in path.t.iter().enumerate() {
        let pt = path.lab_points[i];
        if diagnostic {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                num(*t),
                num(pt.x),
                num(pt.y),
                num(path.q[i]),
                num(path.p)
            );
        } else {
            let _ = writeln!(out, "{},{},{}", num(*t), num(pt.x), num(pt.y));
        }
    }
    if let Some(s) = summary {
        let _ = writeln!(
            out,
            "# T={}, drift={}, closed={}",
            num(s.period),
            num(s.drift),
            s.closed
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_stokes_wave, WaveParameters};

    #[test]
    fn wave_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wave.json");
        let wave = solve_stokes_wave(&WaveParameters::new(10.0, 0.3).with_modes(24)).unwrap();
        save_wave(&path, &wave).unwrap();
        let back = load_wave(&path).unwrap();
        assert_eq!(back, wave);
        for (a, b) in back.coefficients.iter().zip(&wave.coefficients) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let first = fs::read_to_string(&path).unwrap();
        save_wave(&path, &back).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), first);
        let text: serde_json::Value = serde_json::from_str(&first).unwrap();
        for key in [
            "lambda",
            "wave_height",
            "gravity",
            "c",
            "B",
            "k",
            "coefficients",
            "residual_norm",
            "steepness",
            "modes",
        ] {
            assert!(text.get(key).is_some(), "missing key {key}");
        }
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = load_wave(&dir.path().join("nope.json")).unwrap_err();
        assert!(missing.is_not_found());
        let bad = dir.path().join("bad.json");
        fs::write(&bad, "{not json").unwrap();
        assert!(matches!(load_wave(&bad), Err(IoError::Parse { .. })));
        let mut wave = StokesWave::flat(10.0, 9.8, 4);
        wave.modes = 5;
        save_wave(&bad, &wave).unwrap();
        assert!(matches!(load_wave(&bad), Err(IoError::InvalidWave { .. })));
    }

    #[test]
    fn csv_layouts() {
        let wave = StokesWave::flat(10.0, 9.8, 4);
        let pts = field::surface_profile(&wave, 4);
        let text = points_csv(&pts);
        assert!(text.starts_with("x,y\n"));
        assert_eq!(text.lines().count(), 5);

        let rows = field_dump(&wave, 3, &[0.0, 1.0]).unwrap();
        let text = field_csv(&rows);
        assert!(text.starts_with("x,y,q,p,u,v,E,E0,P\n"));
        assert_eq!(text.lines().count(), 7);
        for line in text.lines().skip(1) {
            for col in line.split(',') {
                col.parse::<f64>().unwrap();
            }
        }
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.csv");
        write_atomic(&path, "p,value\n").unwrap();
        write_atomic(&path, "p,value\n0e0,1e0\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "p,value\n0e0,1e0\n");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
