//! Transient thermal reduced-order models for multi-body power-electronics
//! assemblies.
//!
//! The crate has four layers:
//!
//! * [`system`] and [`power`]: bodies, materials, boundary conditions and
//!   piecewise-constant power schedules.
//! * [`oracle`]: an explicit finite-difference heat-equation solver used as
//!   ground truth.
//! * [`rom`]: the reduced-order model. Every probe temperature is the
//!   system-wide linear curve `T0 + (P_T/C_T)·t` plus a per-body exponential
//!   deviation built by superposing unit-power responses.
//! * [`charfit`]: characterization. Unit-power trials on the oracle are fitted
//!   with `A·(1 − e^{−k t})` to obtain the resistance matrix and time constants.
//!
//! [`compare`] scores one trace against another.

pub mod charfit;
pub mod compare;
pub mod error;
pub mod optimize;
pub mod oracle;
pub mod power;
pub mod rom;
pub mod system;
pub mod trace;

pub use charfit::{characterize, fit_exponential, fit_h, run_unit_trials, ExponentialFit, FitReport, TrialResult};
pub use compare::{compare_traces, ComparisonReport};
pub use error::{Error, Result};
pub use oracle::{build_grid, simulate, VoxelGrid};
pub use power::{power_at, PowerProfile, Segment};
pub use rom::CharacterizedModel;
pub use system::{slope_total, thermal_capacitance, BodySpec, Boundary, Cuboid, Material, SystemConfig};
pub use trace::TemperatureTrace;
