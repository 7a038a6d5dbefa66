//! Characterization: unit-power trials on the oracle and exponential fits of
//! the resulting deviations from the linear curve.
//!
//! For every source the oracle is run with that source at 1 W and all other
//! bodies unpowered. Each body's deviation `T_sim − T0 − T_L` is fitted with
//! `A·(1 − e^{−k t})`. With unit power the asymptote `A` is numerically the
//! characteristic resistance, so the fitted amplitudes fill the resistance
//! matrix column by column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::oracle::{simulate, simulate_full};
use crate::power::PowerProfile;
use crate::rom::{linear_curve, CharacterizedModel};
use crate::system::{Boundary, SystemConfig};
use crate::trace::TemperatureTrace;

/// Default characterization horizon (s).
pub const DEFAULT_HORIZON: f64 = 20.0;

/// Samples recorded per unit trial.
pub const TRIAL_SAMPLES: usize = 200;

/// Deviations smaller than this (K) carry no usable signal.
pub const IDENTIFIABILITY_FLOOR: f64 = 1e-9;

/// Largest `|d dev/dt|·t_m / |dev(t_m)|` accepted as stationary.
pub const STATIONARY_SLOPE: f64 = 0.05;

/// Relative spread of per-trial rates above which a body is flagged.
pub const K_DISAGREEMENT: f64 = 0.2;

/// Deviations of every body in a trial where one source carries constant power.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub source_id: String,
    /// Index of the source body in the system.
    pub source_body: usize,
    /// Power applied to the source (W).
    pub power: f64,
    pub t_m: f64,
    pub body_ids: Vec<String>,
    pub times: Vec<f64>,
    /// `deviations[body][sample]` = T_sim − T0 − T_L (K).
    pub deviations: Vec<Vec<f64>>,
}

impl TrialResult {
    /// Deviations as a trace, for CSV export.
    pub fn to_trace(&self) -> Result<TemperatureTrace> {
        TemperatureTrace::new(self.body_ids.clone(), self.times.clone(), self.deviations.clone())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrialOptions {
    /// Constant power applied to the active source (W).
    pub power: f64,
    /// Output sampling interval; defaults to `t_m / TRIAL_SAMPLES`.
    pub sample_dt: Option<f64>,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            power: 1.0,
            sample_dt: None,
        }
    }
}

/// One oracle run per source at 1 W.
pub fn run_unit_trials(system: &SystemConfig, t_m: f64, dx: f64) -> Result<Vec<TrialResult>> {
    run_trials(system, t_m, dx, TrialOptions::default())
}

pub fn run_trials(system: &SystemConfig, t_m: f64, dx: f64, opts: TrialOptions) -> Result<Vec<TrialResult>> {
    if !(t_m.is_finite() && t_m > 0.0) {
        return Err(Error::config("t_m", format!("must be positive, got {t_m}")));
    }
    if !(opts.power.is_finite() && opts.power > 0.0) {
        return Err(Error::config("power", format!("must be positive, got {}", opts.power)));
    }
    let sources = system.source_indices();
    if sources.is_empty() {
        return Err(Error::config(
            "bodies",
            "no body has non-zero power; nothing to characterize",
        ));
    }
    let sample_dt = opts.sample_dt.unwrap_or(t_m / TRIAL_SAMPLES as f64);
    let n_bodies = system.bodies().len();
    let c_total = system.total_capacitance();
    let t0 = system.initial_temperature();

    sources
        .par_iter()
        .map(|&src| {
            let powers = (0..n_bodies)
                .map(|b| {
                    if b == src {
                        PowerProfile::constant(opts.power)
                    } else {
                        PowerProfile::zero()
                    }
                })
                .collect();
            let trial_system = system.with_powers(powers);
            let trace = simulate(&trial_system, t_m, dx, sample_dt)?;
            let total = PowerProfile::constant(opts.power);
            let deviations = (0..n_bodies)
                .map(|b| {
                    trace
                        .times()
                        .iter()
                        .zip(trace.series(b))
                        .map(|(&t, &temp)| temp - t0 - linear_curve(&total, c_total, t))
                        .collect()
                })
                .collect();
            log::debug!("trial for source `{}` finished", system.bodies()[src].id());
            Ok(TrialResult {
                source_id: system.bodies()[src].id().to_string(),
                source_body: src,
                power: opts.power,
                t_m,
                body_ids: trace.ids().to_vec(),
                times: trace.times().to_vec(),
                deviations,
            })
        })
        .collect()
}

/// Result of fitting `A·(1 − e^{−k t})` to a deviation series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub a: f64,
    pub k: f64,
    pub sse: f64,
    pub rmse: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Least-squares fit of `A·(1 − e^{−k t})` by simplex search.
///
/// The search runs on the series normalized by its largest magnitude, over
/// `(A, ln k)`, so the result is scale-equivariant and `k` stays positive.
/// `c_total`, when known, seeds `k` with `1/(|A₀|·C_T)`.
pub fn fit_exponential(times: &[f64], values: &[f64], c_total: Option<f64>) -> Result<ExponentialFit> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "need matching series of at least 2 samples, got {} times and {} values",
            times.len(),
            values.len()
        )));
    }
    let n = values.len();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let end = values[n - 1];
    if !scale.is_finite() || end.abs() <= IDENTIFIABILITY_FLOOR.max(1e-6 * scale) {
        return Err(Error::NonIdentifiable(format!(
            "deviation at the horizon is {end:.3e} K"
        )));
    }
    let horizon = times[n - 1] - times[0];
    let y: Vec<f64> = values.iter().map(|v| v / scale).collect();
    let sse = |a: f64, k: f64| -> f64 {
        times
            .iter()
            .zip(&y)
            .map(|(&t, &v)| {
                let r = v - a * (1.0 - (-k * t).exp());
                r * r
            })
            .sum()
    };

    let a0 = end / scale;
    let k0 = match c_total {
        Some(c) if c > 0.0 => 1.0 / (end.abs() * c),
        _ => 3.0 / horizon,
    }
    .clamp(0.1 / horizon, 100.0 / horizon);

    let opts = NelderMeadOptions::default();
    let min = nelder_mead(|p| sse(p[0], p[1].exp()), &[a0, k0.ln()], &opts);
    if !min.converged {
        return Err(Error::NoConvergence {
            iterations: min.iterations,
            sse: min.f * scale * scale,
        });
    }
    let (a, k) = (min.x[0] * scale, min.x[1].exp());
    let sse = min.f * scale * scale;

    let mut warnings = Vec::new();
    if n < 10 {
        warnings.push(format!("only {n} samples"));
    }
    if k * horizon < 1.0 {
        warnings.push(format!(
            "time constant {:.3} s exceeds the horizon {horizon:.3} s",
            1.0 / k
        ));
    }
    Ok(ExponentialFit {
        a,
        k,
        sse,
        rmse: (sse / n as f64).sqrt(),
        iterations: min.iterations,
        warnings,
    })
}

/// Endpoint estimate `dev_i(t_m)/P`, valid once the deviation has settled.
pub fn resistance_from_trial(trial: &TrialResult, body: usize, power: f64) -> Result<f64> {
    let dev = &trial.deviations[body];
    let times = &trial.times;
    let n = dev.len();
    let end = dev[n - 1];
    if end.abs() <= IDENTIFIABILITY_FLOOR {
        return Ok(end / power);
    }
    let tail = (n / 10).max(3).min(n);
    let slope = ls_slope(&times[n - tail..], &dev[n - tail..]);
    let relative_slope = slope.abs() * (times[n - 1] - times[0]) / end.abs();
    if relative_slope > STATIONARY_SLOPE {
        return Err(Error::NotStationary { relative_slope });
    }
    Ok(end / power)
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    NonIdentifiable,
    NoConvergence,
}

/// Fit outcome for one (body, source) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub body_id: String,
    pub source_id: String,
    pub status: FitStatus,
    /// Fitted amplitude divided by the trial power (K/W).
    pub a: f64,
    pub k: Option<f64>,
    pub sse: f64,
    pub rmse: f64,
    pub iterations: usize,
    /// Endpoint estimate, when the trial passed the stationarity check.
    pub endpoint_resistance: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Per-body spread of the rates fitted in different trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSpread {
    pub body_id: String,
    pub k_min: f64,
    pub k_max: f64,
    /// `(k_max − k_min) / k_used`
    pub relative_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub entries: Vec<FitEntry>,
    /// False if any fit failed to converge.
    pub converged: bool,
    /// Bodies whose per-trial rates disagree by more than 20 %.
    pub rate_disagreements: Vec<RateSpread>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn entry(&self, body_id: &str, source_id: &str) -> Option<&FitEntry> {
        self.entries
            .iter()
            .find(|e| e.body_id == body_id && e.source_id == source_id)
    }
}

#[derive(Debug, Clone)]
pub struct Characterization {
    pub model: CharacterizedModel,
    pub report: FitReport,
    pub trials: Vec<TrialResult>,
}

/// Runs the unit trials and builds the resistance matrix and rates.
pub fn characterize(system: &SystemConfig, t_m: f64, dx: f64) -> Result<Characterization> {
    let trials = run_unit_trials(system, t_m, dx)?;
    characterize_from_trials(system, &trials)
}

/// Builds a model from already-computed trials (one per source, any order).
pub fn characterize_from_trials(system: &SystemConfig, trials: &[TrialResult]) -> Result<Characterization> {
    let mut trials = trials.to_vec();
    trials.sort_by_key(|t| t.source_body);
    let n_bodies = system.bodies().len();
    let c_total = system.total_capacitance();
    let t_m = trials
        .first()
        .map(|t| t.t_m)
        .ok_or_else(|| Error::config("bodies", "no trials to characterize"))?;

    // fits[s][i]
    let fits: Vec<Vec<Result<ExponentialFit>>> = trials
        .par_iter()
        .map(|trial| {
            (0..n_bodies)
                .map(|i| fit_exponential(&trial.times, &trial.deviations[i], Some(c_total / trial.power)))
                .collect()
        })
        .collect();

    let mut entries = Vec::new();
    let mut r_char = vec![vec![0.0; trials.len()]; n_bodies];
    let mut warnings = Vec::new();
    let mut converged = true;
    for (s, trial) in trials.iter().enumerate() {
        for i in 0..n_bodies {
            let body_id = system.bodies()[i].id().to_string();
            let endpoint = resistance_from_trial(trial, i, trial.power).ok();
            let entry = match &fits[s][i] {
                Ok(fit) => {
                    r_char[i][s] = fit.a / trial.power;
                    FitEntry {
                        body_id,
                        source_id: trial.source_id.clone(),
                        status: FitStatus::Ok,
                        a: fit.a / trial.power,
                        k: Some(fit.k),
                        sse: fit.sse,
                        rmse: fit.rmse,
                        iterations: fit.iterations,
                        endpoint_resistance: endpoint,
                        warnings: fit.warnings.clone(),
                    }
                }
                Err(err) => {
                    let status = match err {
                        Error::NonIdentifiable(_) => FitStatus::NonIdentifiable,
                        _ => {
                            converged = false;
                            FitStatus::NoConvergence
                        }
                    };
                    warnings.push(format!("body `{body_id}`, source `{}`: {err}", trial.source_id));
                    FitEntry {
                        body_id,
                        source_id: trial.source_id.clone(),
                        status,
                        a: 0.0,
                        k: None,
                        sse: 0.0,
                        rmse: 0.0,
                        iterations: 0,
                        endpoint_resistance: endpoint,
                        warnings: vec![err.to_string()],
                    }
                }
            };
            entries.push(entry);
        }
    }

    let mut k = Vec::with_capacity(n_bodies);
    let mut rate_disagreements = Vec::new();
    for i in 0..n_bodies {
        let fitted: Vec<(usize, &ExponentialFit)> = fits
            .iter()
            .enumerate()
            .filter_map(|(s, row)| row[i].as_ref().ok().map(|f| (s, f)))
            .collect();
        let own = fitted.iter().find(|(s, _)| trials[*s].source_body == i);
        let chosen = own.or_else(|| fitted.iter().max_by(|a, b| a.1.a.abs().total_cmp(&b.1.a.abs())));
        let body_k = match chosen {
            Some((_, f)) => f.k,
            None => {
                let fallback = 3.0 / t_m;
                warnings.push(format!(
                    "body `{}` has no identifiable deviation; rate set to {fallback:.4} 1/s",
                    system.bodies()[i].id()
                ));
                fallback
            }
        };
        if fitted.len() > 1 {
            let k_min = fitted.iter().map(|(_, f)| f.k).fold(f64::INFINITY, f64::min);
            let k_max = fitted.iter().map(|(_, f)| f.k).fold(0.0, f64::max);
            let relative_spread = (k_max - k_min) / body_k;
            if relative_spread > K_DISAGREEMENT {
                rate_disagreements.push(RateSpread {
                    body_id: system.bodies()[i].id().to_string(),
                    k_min,
                    k_max,
                    relative_spread,
                });
            }
        }
        k.push(body_k);
    }

    let model = CharacterizedModel::new(
        system.bodies().iter().map(|b| b.id().to_string()).collect(),
        trials.iter().map(|t| t.source_id.clone()).collect(),
        system.initial_temperature(),
        c_total,
        r_char,
        k,
        t_m,
    )?;
    Ok(Characterization {
        model,
        report: FitReport {
            entries,
            converged,
            rate_disagreements,
            warnings,
        },
        trials,
    })
}

/// Convection resistance and heat-transfer coefficient recovered from an
/// oracle run of a single body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvectionFit {
    /// Body-to-fluid resistance (K/W).
    pub r_bf: f64,
    /// `1/(A·R)` in W/(m²·K).
    pub h_est: f64,
    /// Exposed area used for `h_est` (m²).
    pub area: f64,
    pub sse: f64,
    pub iterations: usize,
}

/// Fits `T0 + P·R·(1 − e^{−t/(R·C_T)})` to the oracle response of a single
/// convectively cooled body under constant power `power`.
pub fn fit_h(system: &SystemConfig, power: f64, duration: f64, dx: f64) -> Result<ConvectionFit> {
    let Boundary::Convection { ambient, .. } = system.boundary() else {
        return Err(Error::config("boundary", "fit_h needs a convection boundary"));
    };
    if system.bodies().len() != 1 {
        return Err(Error::config(
            "bodies",
            format!("fit_h needs exactly one body, got {}", system.bodies().len()),
        ));
    }
    let t0 = system.initial_temperature();
    if (ambient - t0).abs() > 1e-9 {
        return Err(Error::config(
            "boundary.ambient",
            format!("must equal the initial temperature {t0} for the single-body model"),
        ));
    }
    if !(power.is_finite() && power > 0.0) {
        return Err(Error::config("power", format!("must be positive, got {power}")));
    }
    let powered = system.with_powers(vec![PowerProfile::constant(power)]);
    let out = simulate_full(&powered, duration, dx, duration / 400.0)?;
    let area = out.grid.exposed_area(0);
    let c_total = system.total_capacitance();
    let times = out.trace.times();
    let rise: Vec<f64> = out.trace.series(0).iter().map(|v| v - t0).collect();
    let scale = rise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= IDENTIFIABILITY_FLOOR {
        return Err(Error::NonIdentifiable("no temperature rise".into()));
    }

    let sse = |r: f64| -> f64 {
        times
            .iter()
            .zip(&rise)
            .map(|(&t, &v)| {
                let e = (v - power * r * (1.0 - (-t / (r * c_total)).exp())) / scale;
                e * e
            })
            .sum()
    };
    // The rise never exceeds P·R, so the final rise bounds R from below.
    let r0 = (rise[rise.len() - 1] / power).max(1e-12) * 1.5;
    let min = nelder_mead(
        |p| sse(p[0].exp()),
        &[r0.ln()],
        &NelderMeadOptions {
            f_tolerance: 1e-14,
            ..Default::default()
        },
    );
    if !min.converged {
        return Err(Error::NoConvergence {
            iterations: min.iterations,
            sse: min.f * scale * scale,
        });
    }
    let r_bf = min.x[0].exp();
    Ok(ConvectionFit {
        r_bf,
        h_est: 1.0 / (area * r_bf),
        area,
        sse: min.f * scale * scale,
        iterations: min.iterations,
    })
}
