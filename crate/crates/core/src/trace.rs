//! Sampled probe temperatures and their CSV form.
//!
//! CSV layout: header `time,<id>...`, one row per sample, values written with
//! Rust's shortest round-trip float formatting so that re-reading is lossless.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureTrace {
    ids: Vec<String>,
    times: Vec<f64>,
    /// `values[series][sample]`
    values: Vec<Vec<f64>>,
}

impl TemperatureTrace {
    pub fn new(ids: Vec<String>, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != values.len() {
            return Err(Error::MalformedTrace(format!(
                "{} ids but {} series",
                ids.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|s| s.len() != times.len()) {
            return Err(Error::MalformedTrace(format!(
                "series `{}` has {} samples, expected {}",
                ids[bad],
                values[bad].len(),
                times.len()
            )));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::MalformedTrace("times must be strictly increasing".into()));
        }
        Ok(Self { ids, times, values })
    }

    /// Empty trace with the given ids, to be filled with [`push`](Self::push).
    pub fn with_ids(ids: Vec<String>) -> Self {
        let values = vec![Vec::new(); ids.len()];
        Self {
            ids,
            times: Vec::new(),
            values,
        }
    }

    pub(crate) fn push(&mut self, t: f64, sample: impl IntoIterator<Item = f64>) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        let mut n = 0;
        for (series, v) in self.values.iter_mut().zip(sample) {
            series.push(v);
            n += 1;
        }
        debug_assert_eq!(n, self.ids.len());
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn series(&self, index: usize) -> &[f64] {
        &self.values[index]
    }

    pub fn series_by_id(&self, id: &str) -> Option<&[f64]> {
        self.ids
            .iter()
            .position(|i| i == id)
            .map(|idx| self.values[idx].as_slice())
    }

    /// Piecewise-linear interpolation of one series; `None` outside the time range.
    pub fn interpolate(&self, index: usize, t: f64) -> Option<f64> {
        let times = &self.times;
        let (&first, &last) = (times.first()?, times.last()?);
        if t < first || t > last {
            return None;
        }
        let hi = times.partition_point(|&x| x < t);
        let series = &self.values[index];
        if times[hi] == t || hi == 0 {
            return Some(series[hi]);
        }
        let lo = hi - 1;
        let w = (t - times[lo]) / (times[hi] - times[lo]);
        Some(series[lo] + w * (series[hi] - series[lo]))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = Vec::with_capacity(self.ids.len() + 1);
        header.push("time".to_string());
        header.extend(self.ids.iter().cloned());
        w.write_record(&header)?;
        for (row, t) in self.times.iter().enumerate() {
            let mut record = Vec::with_capacity(self.ids.len() + 1);
            record.push(t.to_string());
            record.extend(self.values.iter().map(|s| s[row].to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::MalformedTrace(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some("time") {
            return Err(Error::MalformedTrace("first column must be named `time`".into()));
        }
        let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut trace = Self::with_ids(ids);
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::MalformedTrace(format!("row {}: `{s}`: {e}", line + 2)))
            };
            let t = parse(&record[0])?;
            let vals = record.iter().skip(1).map(parse).collect::<Result<Vec<f64>>>()?;
            if trace.times.last().is_some_and(|&last| t <= last) {
                return Err(Error::MalformedTrace(format!(
                    "row {}: time {t} is not increasing",
                    line + 2
                )));
            }
            trace.times.push(t);
            for (s, v) in trace.values.iter_mut().zip(vals) {
                s.push(v);
            }
        }
        Ok(trace)
    }
}
