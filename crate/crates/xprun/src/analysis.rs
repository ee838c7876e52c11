//! Late-time values and small statistics helpers.

use serde::{Deserialize, Serialize};

use qchain::noise::TrajectoryRecord;

/// Mean and standard error (sample sd over √n; zero for one value).
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Average over the final part of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LateValue {
    pub mean: f64,
    /// Spread of the per-trajectory window averages over √M.
    pub sem: f64,
    /// Fitted linear change of the ensemble mean across the window.
    pub drift: f64,
    /// Spread of the per-trajectory drifts over √M.
    pub drift_sem: f64,
    pub window_start_us: f64,
    pub stationary: bool,
}

/// Late-time value of observable `obs`: each trajectory is averaged over
/// the final `fraction` of its samples, then averaged over trajectories.
/// The window counts as stationary unless its drift exceeds `drift_tol` by
/// more than two standard errors.
pub fn late_value(
    records: &[TrajectoryRecord],
    obs: usize,
    fraction: f64,
    drift_tol: f64,
) -> LateValue {
    let times = &records[0].times;
    let n = times.len();
    let w = ((fraction * (n - 1) as f64).round() as usize).max(1);
    let first = n - 1 - w;
    let per_traj: Vec<f64> = records
        .iter()
        .map(|r| r.values[first..].iter().map(|v| v[obs]).sum::<f64>() / (n - first) as f64)
        .collect();
    let (mean, sem) = mean_sem(&per_traj);
    let window = &times[first..];
    let span = window[window.len() - 1] - window[0];
    // The slope is linear in the data, so the mean per-trajectory drift is
    // the drift of the ensemble mean.
    let drifts: Vec<f64> = records
        .iter()
        .map(|r| {
            let ys: Vec<f64> = r.values[first..].iter().map(|v| v[obs]).collect();
            slope(window, &ys) * span
        })
        .collect();
    let (drift, drift_sem) = mean_sem(&drifts);
    LateValue {
        mean,
        sem,
        drift,
        drift_sem,
        window_start_us: times[first],
        stationary: drift.abs() - 2.0 * drift_sem <= drift_tol,
    }
}

/// Index of the sample at time `t` (within 1e-9 μs), if any.
pub fn sample_index(times: &[f64], t: f64) -> Option<usize> {
    times.iter().position(|&s| (s - t).abs() <= 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(values: &[f64]) -> TrajectoryRecord {
        TrajectoryRecord {
            times: (0..values.len()).map(|i| i as f64 * 0.1).collect(),
            values: values.iter().map(|&v| vec![v]).collect(),
            n_jumps: 0,
        }
    }

    #[test]
    fn statistics() {
        assert_eq!(mean_sem(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sem(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn late_window() {
        let flat: Vec<f64> = (0..21).map(|i| if i < 10 { 1.0 } else { 0.25 }).collect();
        let lv = late_value(&[record(&flat), record(&flat)], 0, 0.1, 0.01);
        assert_eq!(lv.mean, 0.25);
        assert_eq!(lv.sem, 0.0);
        assert!(lv.stationary && lv.drift == 0.0);
        assert!((lv.window_start_us - 1.8).abs() < 1e-12);
        let ramp: Vec<f64> = (0..21).map(|i| i as f64 * 0.1).collect();
        let lv = late_value(&[record(&ramp)], 0, 0.1, 0.01);
        assert!((lv.drift - 0.2).abs() < 1e-12 && !lv.stationary);
        // A drift that the trajectory spread cannot resolve is accepted.
        let down: Vec<f64> = ramp.iter().map(|v| -v).collect();
        let lv = late_value(&[record(&ramp), record(&down)], 0, 0.1, 0.01);
        assert!(lv.drift.abs() < 1e-12 && (lv.drift_sem - 0.2).abs() < 1e-12 && lv.stationary);
    }
}
