//! Piecewise-constant power schedules.
//!
//! Segments are left-closed and right-open: a segment starting at `t0` owns
//! every instant `t0 <= t < t1`, where `t1` is the next segment's start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Start of the segment in seconds.
    pub start_time: f64,
    /// Dissipated power in watts.
    pub watts: f64,
}

/// A source schedule: ordered, non-negative, starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Segment>", into = "Vec<Segment>")]
pub struct PowerProfile {
    segments: Vec<Segment>,
}

impl PowerProfile {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::config("power", "profile must have at least one segment"))?;
        if first.start_time != 0.0 {
            return Err(Error::config(
                "power[0].start_time",
                format!("first segment must start at 0, got {}", first.start_time),
            ));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !seg.start_time.is_finite() {
                return Err(Error::config(format!("power[{i}].start_time"), "must be finite"));
            }
            if !(seg.watts.is_finite() && seg.watts >= 0.0) {
                return Err(Error::config(
                    format!("power[{i}].watts"),
                    format!("must be finite and non-negative, got {}", seg.watts),
                ));
            }
            if i > 0 && seg.start_time <= segments[i - 1].start_time {
                return Err(Error::config(
                    format!("power[{i}].start_time"),
                    "start times must be strictly increasing",
                ));
            }
        }
        Ok(Self { segments })
    }

    /// Builds a profile from `(start_time, watts)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(start_time, watts)| Segment { start_time, watts })
                .collect(),
        )
    }

    pub fn constant(watts: f64) -> Self {
        assert!(watts.is_finite() && watts >= 0.0, "power must be non-negative");
        Self {
            segments: vec![Segment { start_time: 0.0, watts }],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Watts of the last segment with `start_time <= t`.
    pub fn power_at(&self, t: f64) -> f64 {
        let idx = self.segments.partition_point(|s| s.start_time <= t);
        // t < 0 falls before the first segment; treat as the initial value.
        self.segments[idx.saturating_sub(1)].watts
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.watts == 0.0)
    }

    /// Segment start times, including `0`.
    pub fn change_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().map(|s| s.start_time)
    }

    /// Exact integral of the schedule over `[0, t_end]` in joules.
    pub fn energy(&self, t_end: f64) -> f64 {
        let mut total = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.start_time >= t_end {
                break;
            }
            let end = self
                .segments
                .get(i + 1)
                .map_or(t_end, |next| next.start_time.min(t_end));
            total += (end - seg.start_time) * seg.watts;
        }
        total
    }

    /// Multiplies every segment by `factor` (which must be non-negative).
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor.is_finite() && factor >= 0.0, "scale must be non-negative");
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    start_time: s.start_time,
                    watts: s.watts * factor,
                })
                .collect(),
        }
    }

    /// The same schedule shifted later by `delay` seconds, zero before it.
    pub fn delayed(&self, delay: f64) -> Self {
        assert!(delay.is_finite() && delay >= 0.0, "delay must be non-negative");
        if delay == 0.0 {
            return self.clone();
        }
        let mut segments = vec![Segment {
            start_time: 0.0,
            watts: 0.0,
        }];
        segments.extend(self.segments.iter().map(|s| Segment {
            start_time: s.start_time + delay,
            watts: s.watts,
        }));
        Self { segments }
    }

    /// Pointwise sum of several schedules.
    pub fn sum<'a>(profiles: impl IntoIterator<Item = &'a PowerProfile>) -> Self {
        let profiles: Vec<&PowerProfile> = profiles.into_iter().collect();
        let times = merged_change_times(profiles.iter().copied());
        let segments = times
            .into_iter()
            .map(|t| Segment {
                start_time: t,
                watts: profiles.iter().map(|p| p.power_at(t)).sum(),
            })
            .collect();
        Self { segments }
    }
}

impl TryFrom<Vec<Segment>> for PowerProfile {
    type Error = Error;

    fn try_from(segments: Vec<Segment>) -> Result<Self> {
        Self::new(segments)
    }
}

impl From<PowerProfile> for Vec<Segment> {
    fn from(p: PowerProfile) -> Self {
        p.segments
    }
}

impl Default for PowerProfile {
    fn default() -> Self {
        Self::zero()
    }
}

/// Sorted, de-duplicated union of the change times of several schedules.
pub fn merged_change_times<'a>(profiles: impl IntoIterator<Item = &'a PowerProfile>) -> Vec<f64> {
    let mut times: Vec<f64> = profiles.into_iter().flat_map(|p| p.change_times()).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.first() != Some(&0.0) {
        times.insert(0, 0.0);
    }
    times
}

/// Free-function form of [`PowerProfile::power_at`].
pub fn power_at(profile: &PowerProfile, t: f64) -> f64 {
    profile.power_at(t)
}
