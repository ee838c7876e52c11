//! CSV tables written by the scenarios.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qchain::noise::{EnsembleResult, PulseSchedule};

use crate::Result;

pub const TIME_SERIES_HEADER: &str = "time_us,observable_id,mean,sem,M";
pub const WALK_HEADER: &str = "time_us,site,mean_n";
pub const PULSE_HEADER: &str = "section,start_us,duration_us,amplitude_rad_per_us,phase_rad";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRow {
    pub time_us: f64,
    pub observable_id: String,
    pub mean: f64,
    pub sem: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkRow {
    pub time_us: f64,
    pub site: usize,
    pub mean_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseRow {
    pub section: usize,
    pub start_us: f64,
    pub duration_us: f64,
    pub amplitude_rad_per_us: f64,
    pub phase_rad: f64,
}

/// Rows grouped by observable, times ascending within each.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeriesTable {
    pub rows: Vec<TimeSeriesRow>,
}

impl TimeSeriesTable {
    /// Appends every observable of `result`, prefixing ids with `prefix`.
    pub fn push_ensemble(&mut self, prefix: &str, result: &EnsembleResult) {
        for (k, id) in result.observable_ids.iter().enumerate() {
            for (i, &t) in result.times.iter().enumerate() {
                self.rows.push(TimeSeriesRow {
                    time_us: t,
                    observable_id: format!("{prefix}{id}"),
                    mean: result.mean[k][i],
                    sem: result.sem[k][i],
                    m: result.m,
                });
            }
        }
    }

    pub fn push_series(&mut self, id: &str, times: &[f64], mean: &[f64], sem: &[f64], m: usize) {
        for ((&t, &v), &s) in times.iter().zip(mean).zip(sem) {
            self.rows.push(TimeSeriesRow {
                time_us: t,
                observable_id: id.to_string(),
                mean: v,
                sem: s,
                m,
            });
        }
    }

    /// `(times, means, sems)` of one observable.
    pub fn series(&self, id: &str) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let rows: Vec<&TimeSeriesRow> =
            self.rows.iter().filter(|r| r.observable_id == id).collect();
        (
            rows.iter().map(|r| r.time_us).collect(),
            rows.iter().map(|r| r.mean).collect(),
            rows.iter().map(|r| r.sem).collect(),
        )
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        to_csv(&self.rows)
    }

    pub fn from_csv(bytes: &[u8]) -> Result<Self> {
        Ok(Self {
            rows: from_csv(bytes)?,
        })
    }

    /// Times non-decreasing per observable and every SEM non-negative.
    pub fn is_well_formed(&self) -> bool {
        let mut last: std::collections::HashMap<&str, f64> = Default::default();
        self.rows.iter().all(|r| {
            let ok = r.sem >= 0.0
                && last
                    .get(r.observable_id.as_str())
                    .map_or(true, |&t| r.time_us >= t);
            last.insert(&r.observable_id, r.time_us);
            ok
        })
    }
}

pub fn walk_rows(times: &[f64], occupations: &[Vec<f64>]) -> Vec<WalkRow> {
    times
        .iter()
        .zip(occupations)
        .flat_map(|(&t, occ)| {
            occ.iter().enumerate().map(move |(j, &n)| WalkRow {
                time_us: t,
                site: j + 1,
                mean_n: n,
            })
        })
        .collect()
}

pub fn pulse_rows(schedule: &PulseSchedule) -> Vec<PulseRow> {
    schedule
        .sections()
        .map(|s| PulseRow {
            section: s.index,
            start_us: s.start,
            duration_us: s.duration,
            amplitude_rad_per_us: s.amplitude,
            phase_rad: s.phase,
        })
        .collect()
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| crate::RunError::Io(e.into_error()))
}

pub fn from_csv<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(bytes);
    Ok(r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_are_exact() {
        let t = TimeSeriesTable {
            rows: vec![TimeSeriesRow {
                time_us: 0.1,
                observable_id: "z".into(),
                mean: -0.25,
                sem: 0.0,
                m: 3,
            }],
        };
        let csv = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(csv.lines().next().unwrap(), TIME_SERIES_HEADER);
        let walk = to_csv(&walk_rows(&[0.0], &[vec![1.0, 0.0]])).unwrap();
        assert!(String::from_utf8(walk).unwrap().starts_with(WALK_HEADER));
        let pulse = to_csv(&[PulseRow {
            section: 0,
            start_us: 0.0,
            duration_us: 0.0075,
            amplitude_rad_per_us: 11.5,
            phase_rad: 0.7,
        }])
        .unwrap();
        assert!(String::from_utf8(pulse).unwrap().starts_with(PULSE_HEADER));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut t = TimeSeriesTable::default();
        t.push_series(
            "a",
            &[0.0, 0.1 + 0.2, 1e-17],
            &[1.0 / 3.0, -0.0, 2.5e300],
            &[0.0, 1e-9, 0.5],
            7,
        );
        let back = TimeSeriesTable::from_csv(&t.to_csv().unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(!back.is_well_formed());
    }
}
