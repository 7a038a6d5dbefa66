use rayon::prelude::*;

use super::grid::{build_grid, VoxelGrid};
use crate::error::{Error, Result};
use crate::power::merged_change_times;
use crate::system::SystemConfig;
use crate::trace::TemperatureTrace;

/// Grids at least this large are stepped in parallel, one z-slab per task.
const PARALLEL_CELLS: usize = 1 << 15;

/// Relative slack when comparing a requested step against the stable limit.
const DT_SLACK: f64 = 1e-12;

impl VoxelGrid {
    /// Writes the updated temperatures of z-slab `z` into `out`.
    ///
    /// Face terms are summed as `(x− + x+) + (y− + y+) + (z− + z+)`, which keeps
    /// mirror-image cells bit-identical.
    fn update_slab(&self, z: usize, dt: f64, out: &mut [f64]) {
        let [nx, ny, nz] = self.dims;
        let (sy, sz) = (nx, nx * ny);
        let t = &self.temperature;
        let [gx, gy, gz] = &self.face_g;
        for y in 0..ny {
            let row = nx * (y + ny * z);
            let (has_ym, has_yp) = (y > 0, y + 1 < ny);
            let (has_zm, has_zp) = (z > 0, z + 1 < nz);
            for x in 0..nx {
                let i = row + x;
                let inv_c = self.inv_capacity[i];
                if inv_c == 0.0 {
                    out[i - nx * ny * z] = t[i];
                    continue;
                }
                let ti = t[i];
                let xm = if x > 0 { gx[i - 1] * (t[i - 1] - ti) } else { 0.0 };
                let xp = if x + 1 < nx { gx[i] * (t[i + 1] - ti) } else { 0.0 };
                let ym = if has_ym { gy[i - sy] * (t[i - sy] - ti) } else { 0.0 };
                let yp = if has_yp { gy[i] * (t[i + sy] - ti) } else { 0.0 };
                let zm = if has_zm { gz[i - sz] * (t[i - sz] - ti) } else { 0.0 };
                let zp = if has_zp { gz[i] * (t[i + sz] - ti) } else { 0.0 };
                let flux = (xm + xp) + (ym + yp) + (zm + zp) + self.ambient_g[i] * (self.ambient - ti);
                out[i - nx * ny * z] = ti + dt * inv_c * (flux + self.source[i]);
            }
        }
    }

    /// Advances the field by one forward-Euler step of length `dt` starting
    /// at time `t`. Sources take the schedule values at `t`.
    pub fn step(&mut self, dt: f64, t: f64) -> Result<()> {
        if dt.is_nan() || dt <= 0.0 || dt > self.stable_dt() * (1.0 + DT_SLACK) {
            return Err(Error::StabilityViolation {
                dt,
                limit: self.stable_dt(),
            });
        }
        self.refresh_sources(t);
        let slab = self.dims[0] * self.dims[1];
        let mut next = std::mem::take(&mut self.scratch);
        if self.cell_count() >= PARALLEL_CELLS {
            next.par_chunks_mut(slab)
                .enumerate()
                .for_each(|(z, out)| self.update_slab(z, dt, out));
        } else {
            for (z, out) in next.chunks_mut(slab).enumerate() {
                self.update_slab(z, dt, out);
            }
        }
        self.scratch = std::mem::replace(&mut self.temperature, next);
        Ok(())
    }
}

/// Free-function form of [`VoxelGrid::step`].
pub fn step(grid: &mut VoxelGrid, dt: f64, t: f64) -> Result<()> {
    grid.step(dt, t)
}

/// Full result of an oracle run.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub trace: TemperatureTrace,
    /// Field at the end of the run.
    pub grid: VoxelGrid,
    pub steps: usize,
}

/// Sample instants `0, Δ, 2Δ, …` up to `duration`, with `duration` appended
/// when it does not fall on the sampling grid.
pub fn sample_times(duration: f64, sample_dt: f64) -> Vec<f64> {
    let n = (duration / sample_dt * (1.0 + 1e-12)).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * sample_dt).collect();
    if let Some(&last) = times.last() {
        if duration - last > 1e-9 * sample_dt {
            times.push(duration);
        }
    }
    times
}

/// Runs the explicit solver to `duration` and records every body's probe
/// temperature at `sample_dt` intervals (index 0 is `t = 0`).
///
/// Steps are aligned to sample instants and to every change in the power
/// schedules, so the injected energy equals the exact schedule integral.
pub fn simulate(system: &SystemConfig, duration: f64, dx: f64, sample_dt: f64) -> Result<TemperatureTrace> {
    simulate_full(system, duration, dx, sample_dt).map(|out| out.trace)
}

pub fn simulate_full(system: &SystemConfig, duration: f64, dx: f64, sample_dt: f64) -> Result<SimulationOutput> {
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::config(
            "duration",
            format!("must be non-negative, got {duration}"),
        ));
    }
    if !(sample_dt.is_finite() && sample_dt > 0.0) {
        return Err(Error::config("sample_dt", format!("must be positive, got {sample_dt}")));
    }
    let mut grid = build_grid(system, dx)?;
    let samples = sample_times(duration, sample_dt);

    let mut events = samples.clone();
    events.extend(
        merged_change_times(system.bodies().iter().map(|b| b.power()))
            .into_iter()
            .filter(|&t| t > 0.0 && t < duration),
    );
    events.sort_by(f64::total_cmp);
    events.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * sample_dt);

    let mut trace = TemperatureTrace::with_ids(grid.body_ids().to_vec());
    let n_bodies = grid.body_ids().len();
    let record = |grid: &VoxelGrid, trace: &mut TemperatureTrace, t: f64| {
        trace.push(t, (0..n_bodies).map(|b| grid.probe_temperature(b)));
    };
    record(&grid, &mut trace, 0.0);

    let limit = grid.stable_dt();
    let mut steps = 0;
    let mut next_sample = 1;
    for w in events.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = b - a;
        let n = (span / limit).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for m in 0..n {
            grid.step(h, a + m as f64 * h)?;
        }
        steps += n;
        if next_sample < samples.len() && (samples[next_sample] - b).abs() <= 1e-12 * sample_dt.max(1.0) {
            record(&grid, &mut trace, samples[next_sample]);
            next_sample += 1;
        }
    }
    debug_assert_eq!(next_sample, samples.len());

    Ok(SimulationOutput { trace, grid, steps })
}
