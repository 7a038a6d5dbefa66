//! Explicit finite-difference reference solver for
//! `ρ c_p ∂T/∂t = ∇·(k ∇T) + P` on a uniform voxel grid.
//!
//! Bodies are painted onto the grid cell by cell; each body's power is spread
//! uniformly over its cells. Faces between solids use harmonic-mean
//! conductivity, faces towards void or the domain edge are either adiabatic or
//! exchange `h·A·(T_ambient − T)` depending on the system boundary.

mod grid;
mod solver;

pub use grid::{build_grid, stable_dt, VoxelGrid, ALIGN_TOLERANCE, MIN_CELLS_PER_AXIS, SAFETY_FACTOR};
pub use solver::{sample_times, simulate, simulate_full, step, SimulationOutput};
