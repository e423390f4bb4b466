//! Steady deep-water Stokes waves in conformal (hodograph) coordinates, the
//! kinetic-energy functionals they carry along streamlines, fluid-particle
//! paths, and numerical certification of the monotonicity, convexity and
//! bound properties of those functionals.

pub mod cli;
pub mod field;
pub mod functionals;
pub mod io;
pub mod properties;
pub mod solver;
pub mod trajectories;

pub use field::{ConformalPoint, FieldError, PhysicalPoint, VelocitySample};
pub use functionals::{FunctionalCurve, FunctionalKind, Functionals};
pub use properties::{CheckResult, PropertyReport, VerifyConfig};
pub use solver::{SolveError, StokesWave, WaveParameters};
pub use trajectories::{ParticlePath, PeriodResult, TrajectoryError};
