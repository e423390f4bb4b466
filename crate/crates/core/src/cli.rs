//! Command-line front end.
//!
//! Configuration is layered: command-line flags override keys of the `--config`
//! JSON file, which override the built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{self, FieldError};
use crate::functionals::{self, FunctionalKind, Functionals};
use crate::io::{self, IoError};
use crate::properties::{self, VerifyConfig};
use crate::solver::{self, SolveError, StokesWave, WaveParameters};
use crate::trajectories::{self, TrajectoryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `None` means `1e-3 c lambda`.
    pub p_min: Option<f64>,
    /// `None` means `3 c lambda`.
    pub p_max: Option<f64>,
    pub count: usize,
    pub spacing: Spacing,
    /// Prepend the free surface `p = 0`.
    pub include_zero: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            p_min: None,
            p_max: None,
            count: 33,
            spacing: Spacing::Log,
            include_zero: true,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self, wave: &StokesWave) -> Result<Vec<f64>, CliError> {
        let cl = wave.period_q();
        let p_min = self.p_min.unwrap_or(1e-3 * cl);
        let p_max = self.p_max.unwrap_or(3.0 * cl);
        if self.count < 2 || (p_max.is_nan() || p_max <= p_min) || p_min < 0.0 {
            return Err(CliError::Usage(format!(
                "sweep needs count >= 2 and 0 <= p_min < p_max (got {p_min}, {p_max}, {})",
                self.count
            )));
        }
        let mut grid = match self.spacing {
            Spacing::Log => {
                if p_min <= 0.0 {
                    return Err(CliError::Usage(
                        "log spacing needs p_min > 0; p = 0 is added by include_zero".into(),
                    ));
                }
                functionals::log_grid(p_min, p_max, self.count)
            }
            Spacing::Linear => functionals::linear_grid(p_min, p_max, self.count),
        };
        if self.include_zero && grid[0] > 0.0 {
            grid.insert(0, 0.0);
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub wave: WaveParameters,
    pub sweep: SweepConfig,
    pub s_values: Vec<f64>,
    /// `None` means `4N`.
    pub quadrature_nodes: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            wave: WaveParameters::default(),
            sweep: SweepConfig::default(),
            s_values: vec![1.0],
            quadrature_nodes: None,
            tolerances: BTreeMap::new(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            CliError::Io(IoError::Io {
                path: path.to_path_buf(),
                source,
            })
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("{0}")]
    Computation(String),
    #[error("{0} check(s) failed")]
    Violation(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Violation(_) => 2,
            CliError::Solve(SolveError::InvalidParameters(_)) => 2,
            CliError::Trajectory(TrajectoryError::Field(FieldError::NotInFluid { .. })) => 2,
            CliError::Trajectory(TrajectoryError::InvalidInput(_)) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stokes-kinetic",
    version,
    about = "Stokes waves, particle paths and kinetic-energy functionals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for a Stokes wave and write wave.json and profile.csv.
    Solve(SolveArgs),
    /// Evaluate functionals on a p-grid, one CSV per kind and exponent.
    Sweep(SweepArgs),
    /// Integrate a particle path and write path.csv.
    Trajectory(TrajectoryArgs),
    /// Run the property suite and write report.json and report.txt.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct WaveArgs {
    /// Wavelength in metres [default: 10]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Crest-to-trough height in metres [default: 0]
    #[arg(long)]
    pub height: Option<f64>,
    /// Gravitational acceleration [default: 9.8]
    #[arg(long)]
    pub gravity: Option<f64>,
    /// Fourier modes N [default: 64]
    #[arg(long)]
    pub modes: Option<usize>,
    /// JSON run configuration; flags override its keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Smallest positive p of the grid [default: 1e-3 c lambda]
    #[arg(long)]
    pub p_min: Option<f64>,
    /// Largest p of the grid [default: 3 c lambda]
    #[arg(long)]
    pub p_max: Option<f64>,
    /// Grid points, p = 0 excluded [default: 33]
    #[arg(long)]
    pub p_count: Option<usize>,
    /// Grid spacing [default: log]
    #[arg(long, value_enum)]
    pub p_spacing: Option<Spacing>,
    /// Quadrature nodes per period [default: 4N]
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    /// Reach the height through this many equal continuation steps [default: 1, direct solve]
    #[arg(long)]
    pub continuation: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Wave file from `solve`; without it the wave is solved from the flags
    #[arg(long = "wave")]
    pub wave_file: Option<PathBuf>,
    /// Comma-separated kinds: mu_s, mu_s_root, T, E_total, E_total_moving, E_s, Emov_s, drift [default: T]
    #[arg(long, value_delimiter = ',')]
    pub kinds: Vec<String>,
    /// Comma-separated exponents for mu_s, mu_s_root, E_s, Emov_s [default: 1]
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[arg(long = "wave")]
    /// Wave file from `solve`; without it the wave is solved from the flags
    pub wave_file: Option<PathBuf>,
    /// Initial lab-frame x [default: 0, the crest]
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    /// Initial lab-frame y [default: crest elevation]
    #[arg(long, allow_negative_numbers = true)]
    pub y0: Option<f64>,
    /// Initial time [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    /// Duration in streamline periods [default: 1]
    #[arg(long)]
    pub periods: Option<f64>,
    /// Time step [default: T/2000]
    #[arg(long)]
    pub step: Option<f64>,
    /// Add q and p columns
    #[arg(long)]
    pub diagnostic: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Wave file from `solve`; without it the wave is solved from the flags
    #[arg(long = "wave")]
    pub wave_file: Option<PathBuf>,
}

fn layered(args: &WaveArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.lambda {
        config.wave.wavelength = v;
    }
    if let Some(v) = args.height {
        config.wave.wave_height = v;
    }
    if let Some(v) = args.gravity {
        config.wave.gravity = v;
    }
    if let Some(v) = args.modes {
        config.wave.modes = v;
    }
    if let Some(v) = &args.out {
        config.output_dir = v.clone();
    }
    Ok(config)
}

fn apply_grid(config: &mut RunConfig, grid: &GridArgs) {
    if let Some(v) = grid.p_min {
        config.sweep.p_min = Some(v);
    }
    if let Some(v) = grid.p_max {
        config.sweep.p_max = Some(v);
    }
    if let Some(v) = grid.p_count {
        config.sweep.count = v;
    }
    if let Some(v) = grid.p_spacing {
        config.sweep.spacing = v;
    }
    if let Some(v) = grid.nodes {
        config.quadrature_nodes = Some(v);
    }
}

fn obtain_wave(config: &RunConfig, file: Option<&Path>) -> Result<(StokesWave, String), CliError> {
    match file {
        Some(path) => Ok((io::load_wave(path)?, path.display().to_string())),
        None => Ok((
            solver::solve_stokes_wave(&config.wave)?,
            "solved".to_string(),
        )),
    }
}

fn solve(args: &SolveArgs) -> Result<(), CliError> {
    let config = layered(&args.wave)?;
    let params = &config.wave;
    let wave = match args.continuation {
        Some(0) => {
            return Err(CliError::Usage(
                "--continuation needs at least 1 step".into(),
            ))
        }
        Some(steps) if steps > 1 && params.wave_height > 0.0 => {
            let heights: Vec<f64> = (1..=steps)
                .map(|i| params.wave_height * i as f64 / steps as f64)
                .collect();
            let mut waves = solver::continuation_sweep(params, &heights)?;
            waves.pop().expect("non-empty continuation")
        }
        _ => solver::solve_stokes_wave(params)?,
    };
    let dir = &config.output_dir;
    io::save_wave(&dir.join("wave.json"), &wave)?;
    let profile = field::surface_profile(&wave, 4 * wave.modes);
    io::write_atomic(&dir.join("profile.csv"), &io::points_csv(&profile))?;
    println!("lambda         {}", wave.lambda);
    println!("c              {}", wave.c);
    println!("B              {}", wave.bernoulli);
    println!("steepness      {}", wave.steepness);
    println!("residual_norm  {:e}", wave.residual_norm);
    println!("wrote {}", dir.join("wave.json").display());
    Ok(())
}

fn file_stem(kind: FunctionalKind, s: f64) -> String {
    if kind.uses_exponent() {
        format!("{}_s{s}", kind.name())
    } else {
        kind.name().to_string()
    }
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut config = layered(&args.wave)?;
    apply_grid(&mut config, &args.grid);
    if !args.s.is_empty() {
        config.s_values = args.s.clone();
    }
    let kinds = if args.kinds.is_empty() {
        vec![FunctionalKind::Period]
    } else {
        args.kinds
            .iter()
            .map(|k| {
                k.trim()
                    .parse::<FunctionalKind>()
                    .map_err(|e| CliError::Usage(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let (wave, label) = obtain_wave(&config, args.wave_file.as_deref())?;
    let grid = config.sweep.grid(&wave)?;
    let f = match config.quadrature_nodes {
        Some(n) => Functionals::with_nodes(&wave, n),
        None => Functionals::new(&wave),
    };
    for kind in kinds {
        let exponents = if kind.uses_exponent() {
            config.s_values.clone()
        } else {
            vec![0.0]
        };
        for s in exponents {
            let curve = f.sweep(kind, s, &grid).map_err(|e| match e {
                functionals::FunctionalError::NonPositiveRootExponent(_) => {
                    CliError::Usage(e.to_string())
                }
                other => CliError::Computation(other.to_string()),
            })?;
            let path = config
                .output_dir
                .join(format!("{}.csv", file_stem(kind, s)));
            io::write_atomic(&path, &io::curve_csv(&curve, &label))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn trajectory(args: &TrajectoryArgs) -> Result<(), CliError> {
    let config = layered(&args.wave)?;
    let (wave, _) = obtain_wave(&config, args.wave_file.as_deref())?;
    let t0 = args.t0.unwrap_or(0.0);
    let x0 = args.x0.unwrap_or(wave.c * t0);
    let y0 = args.y0.unwrap_or_else(|| wave.crest_elevation());
    let periods = args.periods.unwrap_or(1.0);
    if !(periods > 0.0 && periods.is_finite()) {
        return Err(CliError::Usage("--periods must be positive".into()));
    }
    let summary = trajectories::period_from_initial_data(&wave, x0, y0, t0)?;
    let step = args
        .step
        .unwrap_or(summary.period / trajectories::DEFAULT_STEPS_PER_PERIOD as f64);
    let path = trajectories::particle_path(&wave, x0, y0, t0, periods * summary.period, step)?;
    let out = config.output_dir.join("path.csv");
    io::write_atomic(&out, &io::path_csv(&path, Some(&summary), args.diagnostic))?;
    println!("T      {}", summary.period);
    println!("drift  {:e}", summary.drift);
    println!("closed {}", summary.closed);
    println!("wrote {}", out.display());
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let mut config = layered(&args.wave)?;
    apply_grid(&mut config, &args.grid);
    let (wave, label) = obtain_wave(&config, args.wave_file.as_deref())?;
    let mut vc = VerifyConfig {
        p_grid: Some(config.sweep.grid(&wave)?),
        nodes: config.quadrature_nodes,
        ..VerifyConfig::default()
    };
    for (name, value) in &config.tolerances {
        vc.tolerances
            .set(name, *value)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let report = properties::verify_all(&wave, &vc, &label);
    let dir = &config.output_dir;
    io::write_atomic(&dir.join("report.json"), &(report.to_json() + "\n"))?;
    let text = report.to_text();
    io::write_atomic(&dir.join("report.txt"), &text)?;
    print!("{text}");
    if report.has_errors() {
        return Err(CliError::Computation(
            "some checks could not be evaluated".into(),
        ));
    }
    let failed = report.failures().count();
    if failed > 0 {
        return Err(CliError::Violation(failed));
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Trajectory(a) => trajectory(a),
        Command::Verify(a) => verify(a),
    }
}

/// Parses the process arguments, runs the command and maps errors to exit codes.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"wave": {"wavelength": 20, "wave_height": 0.4}, "sweep": {"count": 5}}"#,
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "stokes-kinetic",
            "sweep",
            "--config",
            path.to_str().unwrap(),
            "--height",
            "0.2",
            "--p-count",
            "7",
        ])
        .unwrap();
        let Command::Sweep(args) = cli.command else {
            panic!("expected sweep")
        };
        let mut config = layered(&args.wave).unwrap();
        apply_grid(&mut config, &args.grid);
        assert_eq!(config.wave.wavelength, 20.0);
        assert_eq!(config.wave.wave_height, 0.2);
        assert_eq!(config.wave.gravity, 9.8);
        assert_eq!(config.sweep.count, 7);
        assert_eq!(config.sweep.spacing, Spacing::Log);
    }

    #[test]
    fn default_grid_matches_suite_grid() {
        let wave = StokesWave::flat(10.0, 9.8, 8);
        let grid = SweepConfig::default().grid(&wave).unwrap();
        assert_eq!(grid, functionals::default_p_grid(&wave));
        let bad = SweepConfig {
            p_min: Some(0.0),
            ..SweepConfig::default()
        };
        assert!(matches!(bad.grid(&wave), Err(CliError::Usage(_))));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Violation(1).exit_code(), 2);
        let not_in_fluid = TrajectoryError::Field(FieldError::NotInFluid {
            x: 0.0,
            y: 1.0,
            p: -1.0,
        });
        assert_eq!(CliError::Trajectory(not_in_fluid).exit_code(), 2);
        let nc = SolveError::NoConvergence {
            iterations: 1,
            residual: 1.0,
        };
        assert_eq!(CliError::Solve(nc).exit_code(), 3);
        assert_eq!(CliError::Computation(String::new()).exit_code(), 3);
    }
}
