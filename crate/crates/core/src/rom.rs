//! The reduced-order model.
//!
//! Each probe temperature is modelled as
//!
//! ```text
//! T_i(t) = T0 + T_L(t) + T_D,i(t)
//! ```
//!
//! where `T_L` is the linear curve of slope `P_T/C_T` (total power over total
//! capacitance) and `T_D,i` is a first-order exponential deviation obtained by
//! superposing the characteristic resistances of every source. Both terms are
//! accumulated over the changes of a piecewise-constant schedule, so any
//! schedule is handled exactly by superposition in time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::{merged_change_times, PowerProfile};
use crate::system::BodySpec;
use crate::trace::TemperatureTrace;

/// Parameters of a characterized system.
///
/// `r_char[i][s]` is the signed characteristic resistance (K/W) of body `i`
/// for unit power at source `s`: positive when the body runs above the linear
/// curve. `k[i]` is the rate (1/s) of body `i`'s deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct CharacterizedModel {
    body_ids: Vec<String>,
    source_ids: Vec<String>,
    t0: f64,
    c_total: f64,
    r_char: Vec<Vec<f64>>,
    k: Vec<f64>,
    t_m: f64,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    body_ids: Vec<String>,
    source_ids: Vec<String>,
    t0: f64,
    c_total: f64,
    t_m: f64,
    r_char: Vec<Vec<f64>>,
    k: Vec<f64>,
}

impl CharacterizedModel {
    pub fn new(
        body_ids: Vec<String>,
        source_ids: Vec<String>,
        t0: f64,
        c_total: f64,
        r_char: Vec<Vec<f64>>,
        k: Vec<f64>,
        t_m: f64,
    ) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::config("t0", "must be finite"));
        }
        if !(c_total.is_finite() && c_total > 0.0) {
            return Err(Error::config("c_total", format!("must be positive, got {c_total}")));
        }
        if !(t_m.is_finite() && t_m > 0.0) {
            return Err(Error::config("t_m", format!("must be positive, got {t_m}")));
        }
        if r_char.len() != body_ids.len() {
            return Err(Error::config(
                "r_char",
                format!("{} rows for {} bodies", r_char.len(), body_ids.len()),
            ));
        }
        for (i, row) in r_char.iter().enumerate() {
            if row.len() != source_ids.len() {
                return Err(Error::config(
                    format!("r_char[{i}]"),
                    format!("{} entries for {} sources", row.len(), source_ids.len()),
                ));
            }
            if let Some(s) = row.iter().position(|r| !r.is_finite()) {
                return Err(Error::config(format!("r_char[{i}][{s}]"), "must be finite"));
            }
        }
        if k.len() != body_ids.len() {
            return Err(Error::config(
                "k",
                format!("{} rates for {} bodies", k.len(), body_ids.len()),
            ));
        }
        if let Some(i) = k.iter().position(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::config(
                format!("k[{i}]"),
                format!("must be positive, got {}", k[i]),
            ));
        }
        Ok(Self {
            body_ids,
            source_ids,
            t0,
            c_total,
            r_char,
            k,
            t_m,
        })
    }

    pub fn body_ids(&self) -> &[String] {
        &self.body_ids
    }

    pub fn source_ids(&self) -> &[String] {
        &self.source_ids
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn c_total(&self) -> f64 {
        self.c_total
    }

    pub fn r_char(&self) -> &[Vec<f64>] {
        &self.r_char
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn t_m(&self) -> f64 {
        self.t_m
    }

    pub fn body_index(&self, id: &str) -> Option<usize> {
        self.body_ids.iter().position(|b| b == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Σ_s powers[s]·R[i][s], the bracketed sum shared by every deviation form.
    #[inline]
    fn weighted_resistance(&self, body: usize, powers: impl IntoIterator<Item = f64>) -> f64 {
        self.r_char[body].iter().zip(powers).map(|(r, p)| p * r).sum()
    }
}

impl TryFrom<RawModel> for CharacterizedModel {
    type Error = Error;

    fn try_from(r: RawModel) -> Result<Self> {
        Self::new(r.body_ids, r.source_ids, r.t0, r.c_total, r.r_char, r.k, r.t_m)
    }
}

impl From<CharacterizedModel> for RawModel {
    fn from(m: CharacterizedModel) -> Self {
        Self {
            body_ids: m.body_ids,
            source_ids: m.source_ids,
            t0: m.t0,
            c_total: m.c_total,
            t_m: m.t_m,
            r_char: m.r_char,
            k: m.k,
        }
    }
}

/// Linear curve rise above `T0` at time `t` for a total-power schedule:
/// `Σ_j (P_j − P_{j−1})/C_T · (t − t_j)` over changes with `t_j <= t`.
pub fn linear_curve(total_power: &PowerProfile, c_total: f64, t: f64) -> f64 {
    let mut previous = 0.0;
    let mut rise = 0.0;
    for seg in total_power.segments() {
        if seg.start_time > t {
            break;
        }
        rise += (seg.watts - previous) / c_total * (t - seg.start_time);
        previous = seg.watts;
    }
    rise
}

/// Deviation of body `body` under constant source powers applied from `t = 0`.
pub fn deviation_constant(model: &CharacterizedModel, body: usize, powers: &[f64], t: f64) -> f64 {
    debug_assert_eq!(powers.len(), model.source_ids.len());
    model.weighted_resistance(body, powers.iter().copied()) * (1.0 - (-model.k[body] * t).exp())
}

/// Deviation of body `body` under piecewise-constant source schedules
/// (one per model source, in model order).
///
/// Every change instant `t_j` contributes its power step, weighted by the
/// resistances, times `1 − e^{−k (t − t_j)}`.
pub fn deviation_piecewise(model: &CharacterizedModel, body: usize, profiles: &[PowerProfile], t: f64) -> f64 {
    debug_assert_eq!(profiles.len(), model.source_ids.len());
    let k = model.k[body];
    let mut previous = vec![0.0; profiles.len()];
    let mut deviation = 0.0;
    for t_j in merged_change_times(profiles) {
        if t_j > t {
            break;
        }
        let current: Vec<f64> = profiles.iter().map(|p| p.power_at(t_j)).collect();
        let step = model.weighted_resistance(body, current.iter().zip(&previous).map(|(c, p)| c - p));
        deviation += step * (1.0 - (-k * (t - t_j)).exp());
        previous = current;
    }
    deviation
}

/// Power steps of a multi-source schedule, precomputed for fast evaluation.
struct Transients {
    times: Vec<f64>,
    /// Step in total power at each change.
    total_step: Vec<f64>,
    /// `weighted[i][j]`: Σ_s ΔP_s,j · R[i][s]
    weighted: Vec<Vec<f64>>,
}

impl Transients {
    fn new(model: &CharacterizedModel, profiles: &[PowerProfile]) -> Self {
        let times = merged_change_times(profiles);
        let mut previous = vec![0.0; profiles.len()];
        let mut total_step = Vec::with_capacity(times.len());
        let mut weighted = vec![Vec::with_capacity(times.len()); model.body_ids.len()];
        for &t_j in &times {
            let current: Vec<f64> = profiles.iter().map(|p| p.power_at(t_j)).collect();
            let delta: Vec<f64> = current.iter().zip(&previous).map(|(c, p)| c - p).collect();
            total_step.push(delta.iter().sum());
            for (i, w) in weighted.iter_mut().enumerate() {
                w.push(model.weighted_resistance(i, delta.iter().copied()));
            }
            previous = current;
        }
        Self {
            times,
            total_step,
            weighted,
        }
    }
}

/// ROM probe temperatures for every body at the requested times.
///
/// `profiles` holds one schedule per model source, in model order.
pub fn predict(model: &CharacterizedModel, profiles: &[PowerProfile], times: &[f64]) -> Result<TemperatureTrace> {
    if profiles.len() != model.source_ids.len() {
        return Err(Error::DegenerateInput(format!(
            "{} schedules for {} model sources",
            profiles.len(),
            model.source_ids.len()
        )));
    }
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::DegenerateInput("times must be non-negative".into()));
    }
    let tr = Transients::new(model, profiles);
    let n_bodies = model.body_ids.len();
    let mut values = vec![Vec::with_capacity(times.len()); n_bodies];
    let mut decay = Vec::with_capacity(tr.times.len());
    for &t in times {
        let active = tr.times.partition_point(|&tj| tj <= t);
        let linear: f64 = (0..active)
            .map(|j| tr.total_step[j] / model.c_total * (t - tr.times[j]))
            .sum();
        for (i, series) in values.iter_mut().enumerate() {
            let k = model.k[i];
            decay.clear();
            decay.extend((0..active).map(|j| 1.0 - (-k * (t - tr.times[j])).exp()));
            let deviation: f64 = tr.weighted[i][..active].iter().zip(&decay).map(|(w, d)| w * d).sum();
            series.push(model.t0 + linear + deviation);
        }
    }
    TemperatureTrace::new(model.body_ids.clone(), times.to_vec(), values)
}

/// Source schedules keyed by source id; the file format for predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSchedule {
    pub sources: Vec<SourceSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSchedule {
    pub id: String,
    pub power: PowerProfile,
}

impl PowerSchedule {
    /// One profile per model source, in model order. Sources the schedule
    /// does not mention are held at zero; unknown ids are an error.
    pub fn resolve(&self, model: &CharacterizedModel) -> Result<Vec<PowerProfile>> {
        let unknown: Vec<String> = self
            .sources
            .iter()
            .filter(|s| !model.source_ids.contains(&s.id))
            .map(|s| s.id.clone())
            .collect();
        if !unknown.is_empty() {
            return Err(Error::IdMismatch(unknown));
        }
        Ok(model
            .source_ids
            .iter()
            .map(|id| {
                self.sources
                    .iter()
                    .find(|s| &s.id == id)
                    .map_or_else(PowerProfile::zero, |s| s.power.clone())
            })
            .collect())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Single solid body cooled by a fluid:
/// `T0 + P·R·(1 − e^{−t/(R·C_T)})` with `R = 1/(h·A)`.
pub fn convection_single_body(t0: f64, power: f64, h: f64, area: f64, c_total: f64, t: f64) -> f64 {
    let r = 1.0 / (h * area);
    t0 + power * r * (1.0 - (-t / (r * c_total)).exp())
}

/// Direct exponential model without the linear curve, for bodies that settle
/// to a steady state: `T0 + Σ_s P_s·R_s·(1 − e^{−k_s t})`.
pub fn steady_state_model(t0: f64, powers: &[f64], r_row: &[f64], k_row: &[f64], t: f64) -> f64 {
    t0 + powers
        .iter()
        .zip(r_row)
        .zip(k_row)
        .map(|((p, r), k)| p * r * (1.0 - (-k * t).exp()))
        .sum::<f64>()
}

/// Conduction resistance `L/(K·A)` between a body centre and the reference
/// point of the linear curve.
pub fn analytical_resistance(center: [f64; 3], reference: [f64; 3], conductivity: f64, cross_section: f64) -> f64 {
    let length = (0..3).map(|a| (center[a] - reference[a]).powi(2)).sum::<f64>().sqrt();
    length / (conductivity * cross_section)
}

/// Default reference point: midway between the two body centres.
pub fn reference_midpoint(a: &BodySpec, b: &BodySpec) -> [f64; 3] {
    let (ca, cb) = (a.bounds().center(), b.bounds().center());
    std::array::from_fn(|i| 0.5 * (ca[i] + cb[i]))
}

/// Ordinary least-squares fit `fitted ≈ m·calculated + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub m: f64,
    pub c: f64,
    pub r_squared: f64,
}

pub fn resistance_linear_map(fitted: &[f64], calculated: &[f64]) -> Result<LinearMap> {
    if fitted.len() != calculated.len() {
        return Err(Error::DegenerateInput(format!(
            "{} fitted values but {} calculated",
            fitted.len(),
            calculated.len()
        )));
    }
    if fitted.len() < 3 {
        return Err(Error::DegenerateInput("at least 3 paired points are required".into()));
    }
    let n = fitted.len() as f64;
    let mean_x = calculated.iter().sum::<f64>() / n;
    let mean_y = fitted.iter().sum::<f64>() / n;
    let sxx: f64 = calculated.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx <= f64::EPSILON * mean_x.abs().max(1.0) * n {
        return Err(Error::DegenerateInput("all calculated values are equal".into()));
    }
    let sxy: f64 = calculated
        .iter()
        .zip(fitted)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let m = sxy / sxx;
    let c = mean_y - m * mean_x;
    let ss_res: f64 = calculated
        .iter()
        .zip(fitted)
        .map(|(x, y)| (y - (m * x + c)).powi(2))
        .sum();
    let ss_tot: f64 = fitted.iter().map(|y| (y - mean_y).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearMap { m, c, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model(r: Vec<Vec<f64>>, k: Vec<f64>, c_total: f64) -> CharacterizedModel {
        let bodies = (0..r.len()).map(|i| format!("b{i}")).collect();
        let sources = (0..r[0].len()).map(|s| format!("s{s}")).collect();
        CharacterizedModel::new(bodies, sources, 20.0, c_total, r, k, 20.0).unwrap()
    }

    fn pp(pairs: &[(f64, f64)]) -> PowerProfile {
        PowerProfile::from_pairs(pairs).unwrap()
    }

    #[test]
    fn linear_curve_constant_power() {
        let p = PowerProfile::constant(3.0);
        assert_relative_eq!(linear_curve(&p, 60.0, 40.0), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn linear_curve_power_off() {
        // 10/100·100 + (0 − 10)/100·50
        let p = pp(&[(0.0, 10.0), (50.0, 0.0)]);
        assert_relative_eq!(linear_curve(&p, 100.0, 100.0), 5.0, max_relative = 1e-14);
        assert_eq!(linear_curve(&PowerProfile::zero(), 100.0, 77.0), 0.0);
    }

    #[test]
    fn deviation_constant_values() {
        let m = model(vec![vec![5.0]], vec![0.1], 10.0);
        assert_eq!(deviation_constant(&m, 0, &[3.0], 0.0), 0.0);
        assert_relative_eq!(
            deviation_constant(&m, 0, &[2.0], 10.0),
            6.321205588285577,
            max_relative = 1e-12
        );
        assert_relative_eq!(deviation_constant(&m, 0, &[2.0], 1e4), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn asymptote_is_resistance_dot_power() {
        let m = model(vec![vec![2.0, -1.5], vec![-0.5, 4.0]], vec![0.3, 0.2], 10.0);
        assert_relative_eq!(
            deviation_constant(&m, 0, &[1.0, 2.0], 1e5),
            2.0 - 3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            deviation_constant(&m, 1, &[1.0, 2.0], 1e5),
            -0.5 + 8.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn piecewise_single_segment_is_bitwise_constant() {
        let m = model(vec![vec![2.0, -1.5], vec![-0.5, 4.0]], vec![0.3, 0.2], 10.0);
        let profiles = [PowerProfile::constant(1.25), PowerProfile::constant(0.7)];
        for &t in &[0.0, 0.3, 7.0, 55.5] {
            for i in 0..2 {
                assert_eq!(
                    deviation_piecewise(&m, i, &profiles, t),
                    deviation_constant(&m, i, &[1.25, 0.7], t)
                );
            }
        }
    }

    #[test]
    fn pulse_decays_to_zero() {
        let m = model(vec![vec![3.0]], vec![0.5], 10.0);
        let p = [pp(&[(0.0, 2.0), (5.0, 0.0)])];
        assert!(deviation_piecewise(&m, 0, &p, 5.0) > 5.0);
        assert!(deviation_piecewise(&m, 0, &p, 200.0).abs() < 1e-12);
    }

    #[test]
    fn staggered_sources_superpose() {
        // Term-by-term expansion of the piecewise sum for two sources that
        // switch on at different times.
        let m = model(vec![vec![2.0, 1.0]], vec![0.2], 10.0);
        let p = [pp(&[(0.0, 0.0), (3.0, 1.0)]), pp(&[(0.0, 0.0), (8.0, 1.0)])];
        let t = 12.0;
        let expected = 2.0 * (1.0 - (-0.2f64 * 9.0).exp()) + 1.0 * (1.0 - (-0.2f64 * 4.0).exp());
        assert_relative_eq!(deviation_piecewise(&m, 0, &p, t), expected, max_relative = 1e-14);
        let only_a = [p[0].clone(), PowerProfile::zero()];
        let only_b = [PowerProfile::zero(), p[1].clone()];
        assert_relative_eq!(
            deviation_piecewise(&m, 0, &p, t),
            deviation_piecewise(&m, 0, &only_a, t) + deviation_piecewise(&m, 0, &only_b, t),
            max_relative = 1e-14
        );
    }

    #[test]
    fn predict_zero_power_is_flat() {
        let m = model(vec![vec![2.0], vec![-1.0]], vec![0.2, 0.3], 10.0);
        let tr = predict(&m, &[PowerProfile::zero()], &[0.0, 1.0, 50.0]).unwrap();
        for i in 0..2 {
            assert!(tr.series(i).iter().all(|&v| v == 20.0));
        }
    }

    #[test]
    fn predict_single_insulated_body_is_a_line() {
        let m = model(vec![vec![0.0]], vec![1.0], 50.0);
        let times: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let tr = predict(&m, &[PowerProfile::constant(1.0)], &times).unwrap();
        assert_relative_eq!(tr.series(0)[100], 22.0, max_relative = 1e-14);
        for w in tr.series(0).windows(3) {
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_agrees_with_piecewise_terms() {
        let m = model(vec![vec![2.0, -1.0], vec![-0.7, 3.0]], vec![0.25, 0.15], 8.0);
        let p = [
            pp(&[(0.0, 1.0), (10.0, 0.0), (20.0, 2.0), (35.0, 0.5)]),
            pp(&[(0.0, 0.0), (15.0, 1.0)]),
        ];
        let total = PowerProfile::sum(&p);
        let times = [0.0, 5.0, 12.5, 20.0, 33.0, 60.0];
        let tr = predict(&m, &p, &times).unwrap();
        for (n, &t) in times.iter().enumerate() {
            for i in 0..2 {
                let expect = 20.0 + linear_curve(&total, 8.0, t) + deviation_piecewise(&m, i, &p, t);
                assert_relative_eq!(tr.series(i)[n], expect, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn convection_model() {
        let (h, a, c) = (56.19, 0.00015, 0.4);
        let r = 1.0 / (h * a);
        assert_relative_eq!(
            convection_single_body(20.0, 0.2, h, a, c, 1e6),
            20.0 + 0.2 * r,
            max_relative = 1e-12
        );
        assert_eq!(convection_single_body(20.0, 0.2, h, a, c, 0.0), 20.0);
        let mut last = 20.0;
        // 60 steps of 10 s span about 12 time constants
        for i in 1..60 {
            let v = convection_single_body(20.0, 0.2, h, a, c, i as f64 * 10.0);
            assert!(v > last && v <= 20.0 + 0.2 * r);
            last = v;
        }
    }

    #[test]
    fn tabulated_convection_resistances() {
        let a: f64 = 0.00015;
        // R = 1/(hA) for the low-velocity row, three significant figures
        let r = 1.0 / (21.95 * a);
        assert!((r - 303.692).abs() / 303.692 < 1e-3, "{r}");
        // h = 1/(A·R) for the high-velocity row
        let h = 1.0 / (a * 28.47);
        assert!((h - 234.09).abs() / 234.09 < 1e-3, "{h}");
    }

    #[test]
    fn steady_state_values() {
        assert_eq!(steady_state_model(20.0, &[1.0], &[10.0], &[0.05], 0.0), 20.0);
        assert_relative_eq!(
            steady_state_model(20.0, &[1.0], &[10.0], &[0.05], 20.0),
            20.0 + 6.321205588285577,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            steady_state_model(20.0, &[1.0, 2.0], &[10.0, 3.0], &[0.05, 1.0], 1e6),
            36.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn analytical_resistance_values() {
        assert_relative_eq!(
            analytical_resistance([0.01, 0.0, 0.0], [0.0; 3], 400.0, 1e-4),
            0.25,
            max_relative = 1e-12
        );
        assert_eq!(analytical_resistance([0.3; 3], [0.3; 3], 1.0, 1.0), 0.0);
        let r1 = analytical_resistance([0.02, 0.0, 0.0], [0.0; 3], 10.0, 1e-4);
        let r2 = analytical_resistance([0.02, 0.0, 0.0], [0.0; 3], 10.0, 2e-4);
        assert_relative_eq!(r2, 0.5 * r1, max_relative = 1e-14);
    }

    #[test]
    fn linear_map_exact_data() {
        let x = [0.5, 1.0, 2.0, 4.0];
        let same = resistance_linear_map(&x, &x).unwrap();
        assert_relative_eq!(same.m, 1.0, max_relative = 1e-12);
        assert!(same.c.abs() < 1e-12);
        assert_relative_eq!(same.r_squared, 1.0, max_relative = 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.5).collect();
        let fit = resistance_linear_map(&y, &x).unwrap();
        assert_relative_eq!(fit.m, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.c, 0.5, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn linear_map_degenerate() {
        assert!(matches!(
            resistance_linear_map(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]),
            Err(Error::DegenerateInput(_))
        ));
        assert!(resistance_linear_map(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn model_validation_and_json() {
        let ids = vec!["a".to_string()];
        assert!(
            CharacterizedModel::new(ids.clone(), ids.clone(), 20.0, 1.0, vec![vec![1.0]], vec![0.0], 20.0).is_err()
        );
        assert!(CharacterizedModel::new(
            ids.clone(),
            ids.clone(),
            20.0,
            1.0,
            vec![vec![1.0, 2.0]],
            vec![1.0],
            20.0
        )
        .is_err());
        assert!(
            CharacterizedModel::new(ids.clone(), ids.clone(), 20.0, 0.0, vec![vec![1.0]], vec![1.0], 20.0).is_err()
        );
        let m = CharacterizedModel::new(ids.clone(), ids, 20.0, 1.5, vec![vec![-2.5]], vec![0.1], 20.0).unwrap();
        let back = CharacterizedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"body_ids":["a"],"source_ids":["a"],"t0":20,"c_total":1,"t_m":20,"r_char":[[1]],"k":[-1]}"#;
        assert!(CharacterizedModel::from_json(bad).is_err());
    }

    #[test]
    fn schedule_resolution() {
        let m = model(vec![vec![1.0, 2.0]], vec![0.1], 1.0);
        let s = PowerSchedule::from_json(r#"{"sources":[{"id":"s1","power":[{"start_time":0,"watts":2}]}]}"#).unwrap();
        let p = s.resolve(&m).unwrap();
        assert!(p[0].is_zero());
        assert_eq!(p[1].power_at(3.0), 2.0);
        let bad =
            PowerSchedule::from_json(r#"{"sources":[{"id":"nope","power":[{"start_time":0,"watts":2}]}]}"#).unwrap();
        match bad.resolve(&m) {
            Err(Error::IdMismatch(ids)) => assert_eq!(ids, vec!["nope".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    fn schedule() -> impl Strategy<Value = PowerProfile> {
        prop::collection::vec((0.5f64..15.0, 0.0f64..5.0), 1..5).prop_map(|parts| {
            let mut t = 0.0;
            let pairs: Vec<(f64, f64)> = parts
                .into_iter()
                .enumerate()
                .map(|(i, (w, p))| {
                    if i > 0 {
                        t += w;
                    }
                    (t, p)
                })
                .collect();
            PowerProfile::from_pairs(&pairs).unwrap()
        })
    }

    fn two_by_two() -> impl Strategy<Value = CharacterizedModel> {
        (
            prop::collection::vec(-20.0f64..20.0, 4),
            prop::collection::vec(0.01f64..2.0, 2),
        )
            .prop_map(|(r, k)| model(vec![vec![r[0], r[1]], vec![r[2], r[3]]], k, 5.0))
    }

    proptest! {
        #[test]
        fn deviation_is_linear_in_power(
            m in two_by_two(),
            p1 in (schedule(), schedule()),
            p2 in (schedule(), schedule()),
            alpha in 0.0f64..3.0,
            beta in 0.0f64..3.0,
            t in 0.0f64..80.0,
        ) {
            let a = [p1.0.clone(), p1.1.clone()];
            let b = [p2.0.clone(), p2.1.clone()];
            let combo = [
                PowerProfile::sum([&p1.0.scaled(alpha), &p2.0.scaled(beta)]),
                PowerProfile::sum([&p1.1.scaled(alpha), &p2.1.scaled(beta)]),
            ];
            for i in 0..2 {
                let lhs = deviation_piecewise(&m, i, &combo, t);
                let rhs = alpha * deviation_piecewise(&m, i, &a, t) + beta * deviation_piecewise(&m, i, &b, t);
                let r_sum: f64 = m.r_char[i].iter().map(|r| r.abs()).sum();
                let scale = 1.0 + 5.0 * 8.0 * (1.0 + alpha + beta) * r_sum;
                prop_assert!((lhs - rhs).abs() <= 64.0 * f64::EPSILON * scale, "{} vs {}", lhs, rhs);
            }
        }

        #[test]
        fn refinement_leaves_deviation_unchanged(
            m in two_by_two(),
            p in schedule(),
            cut in 0.05f64..0.95,
            t in 0.0f64..80.0,
        ) {
            // Split the last segment into two identical-power pieces.
            let segs = p.segments();
            let last = segs[segs.len() - 1];
            let mut pairs: Vec<(f64, f64)> = segs.iter().map(|s| (s.start_time, s.watts)).collect();
            pairs.push((last.start_time + cut * 10.0, last.watts));
            let refined = PowerProfile::from_pairs(&pairs).unwrap();
            let base = [p.clone(), PowerProfile::zero()];
            let split = [refined, PowerProfile::zero()];
            for i in 0..2 {
                prop_assert_eq!(deviation_piecewise(&m, i, &base, t), deviation_piecewise(&m, i, &split, t));
            }
        }

        #[test]
        fn delayed_schedule_delays_deviation(
            m in two_by_two(),
            p in schedule(),
            delay in 0.1f64..20.0,
            t in 0.0f64..60.0,
        ) {
            let base = [p.clone(), PowerProfile::zero()];
            let shifted = [p.delayed(delay), PowerProfile::zero()];
            for i in 0..2 {
                let a = deviation_piecewise(&m, i, &base, t);
                let b = deviation_piecewise(&m, i, &shifted, t + delay);
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn convection_monotone_and_bounded(
            p in 0.01f64..5.0, h in 1.0f64..500.0, area in 1e-5f64..1e-2, c in 0.01f64..100.0,
            t1 in 0.0f64..1e3, dt in 1e-3f64..1e3,
        ) {
            let a = convection_single_body(20.0, p, h, area, c, t1);
            let b = convection_single_body(20.0, p, h, area, c, t1 + dt);
            prop_assert!(b >= a);
            prop_assert!(b <= 20.0 + p / (h * area) * (1.0 + 1e-12));
        }
    }
}
