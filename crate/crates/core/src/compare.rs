//! Error metrics between a reference trace and a candidate trace.
//!
//! Percent errors are taken on the temperature rise above `T0`:
//! `mean |T_b − T_a| / (|T_a − T0| + ε)`, trace `a` being the reference.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::TemperatureTrace;

/// Regularizer of the rise-basis denominator (K).
pub const RISE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyError {
    pub id: String,
    /// Mean rise-basis error in percent.
    pub mean_percent_error: f64,
    pub max_abs_error: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Runtimes {
    pub oracle_s: f64,
    pub rom_s: f64,
    pub speedup: f64,
}

impl Runtimes {
    pub fn new(oracle_s: f64, rom_s: f64) -> Self {
        Self {
            oracle_s,
            rom_s,
            speedup: oracle_s / rom_s.max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub basis: String,
    pub t0: f64,
    pub samples: usize,
    pub bodies: Vec<BodyError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtimes: Option<Runtimes>,
}

impl ComparisonReport {
    pub fn body(&self, id: &str) -> Option<&BodyError> {
        self.bodies.iter().find(|b| b.id == id)
    }

    /// Largest per-body mean percent error.
    pub fn worst_percent_error(&self) -> f64 {
        self.bodies.iter().map(|b| b.mean_percent_error).fold(0.0, f64::max)
    }

    pub fn with_runtimes(mut self, runtimes: Runtimes) -> Self {
        self.runtimes = Some(runtimes);
        self
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "error basis: {} (T0 = {} °C, {} samples)",
            self.basis, self.t0, self.samples
        )?;
        writeln!(
            f,
            "{:<16} {:>12} {:>14} {:>12}",
            "body", "mean err %", "max |err| K", "rmse K"
        )?;
        for b in &self.bodies {
            writeln!(
                f,
                "{:<16} {:>12.4} {:>14.6} {:>12.6}",
                b.id, b.mean_percent_error, b.max_abs_error, b.rmse
            )?;
        }
        if let Some(r) = self.runtimes {
            writeln!(
                f,
                "runtime: oracle {:.4} s, rom {:.6} s, speedup {:.1}x",
                r.oracle_s, r.rom_s, r.speedup
            )?;
        }
        Ok(())
    }
}

/// Compares `candidate` against `reference` on the overlap of their time
/// ranges. Both are evaluated on the sample times of whichever trace is
/// coarser within the overlap, interpolating the other linearly.
pub fn compare_traces(reference: &TemperatureTrace, candidate: &TemperatureTrace, t0: f64) -> Result<ComparisonReport> {
    let missing: Vec<String> = reference
        .ids()
        .iter()
        .filter(|id| !candidate.ids().contains(id))
        .chain(candidate.ids().iter().filter(|id| !reference.ids().contains(id)))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::IdMismatch(missing));
    }
    let (ra, ca) = (reference.times(), candidate.times());
    let (Some(&ra0), Some(&ra1), Some(&ca0), Some(&ca1)) = (ra.first(), ra.last(), ca.first(), ca.last()) else {
        return Err(Error::NoOverlap);
    };
    let (lo, hi) = (ra0.max(ca0), ra1.min(ca1));
    if lo > hi {
        return Err(Error::NoOverlap);
    }
    let within = |times: &[f64]| -> Vec<f64> { times.iter().copied().filter(|&t| t >= lo && t <= hi).collect() };
    let (ref_grid, cand_grid) = (within(ra), within(ca));
    let grid = if cand_grid.len() < ref_grid.len() {
        cand_grid
    } else {
        ref_grid
    };
    if grid.is_empty() {
        return Err(Error::NoOverlap);
    }

    let mut bodies = Vec::with_capacity(reference.ids().len());
    for (ri, id) in reference.ids().iter().enumerate() {
        let ci = candidate.ids().iter().position(|c| c == id).expect("checked above");
        let (mut pct, mut max_abs, mut sq) = (0.0, 0.0f64, 0.0);
        for &t in &grid {
            let a = reference.interpolate(ri, t).expect("t within range");
            let b = candidate.interpolate(ci, t).expect("t within range");
            let err = (b - a).abs();
            pct += err / ((a - t0).abs() + RISE_EPSILON);
            max_abs = max_abs.max(err);
            sq += err * err;
        }
        let n = grid.len() as f64;
        bodies.push(BodyError {
            id: id.clone(),
            mean_percent_error: 100.0 * pct / n,
            max_abs_error: max_abs,
            rmse: (sq / n).sqrt(),
        });
    }
    Ok(ComparisonReport {
        basis: "temperature rise above T0".into(),
        t0,
        samples: grid.len(),
        bodies,
        runtimes: None,
    })
}
