//! Least-squares fit of `y = a·sin²(ω t)` used for Rabi and swap calibration.

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SineSquaredFit {
    pub amplitude: f64,
    pub omega: f64,
    pub rms_residual: f64,
}

/// Optimal amplitude and sum of squared residuals at fixed `omega`.
fn profile(ts: &[f64], ys: &[f64], omega: f64) -> (f64, f64) {
    let (mut sy, mut ss) = (0.0, 0.0);
    for (&t, &y) in ts.iter().zip(ys) {
        let s = (omega * t).sin().powi(2);
        sy += s * y;
        ss += s * s;
    }
    if ss == 0.0 {
        return (0.0, ys.iter().map(|y| y * y).sum());
    }
    let a = sy / ss;
    let r = ts
        .iter()
        .zip(ys)
        .map(|(&t, &y)| (y - a * (omega * t).sin().powi(2)).powi(2))
        .sum();
    (a, r)
}

/// Fits `y = a·sin²(ω t)` with `0 < ω ≤ omega_max`: a grid search fine enough
/// to resolve the residual minimum, then golden-section refinement.
pub fn fit_sine_squared(ts: &[f64], ys: &[f64], omega_max: f64) -> Result<SineSquaredFit> {
    if ts.len() != ys.len() || ts.len() < 4 {
        return Err(Error::FitFailure("need at least four (t, y) pairs".into()));
    }
    if !(omega_max > 0.0 && omega_max.is_finite()) {
        return Err(Error::FitFailure(format!(
            "bad frequency bound {omega_max}"
        )));
    }
    let y_scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if y_scale < 1e-9 {
        return Err(Error::FitFailure("signal is flat".into()));
    }
    let t_max = ts.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let n_grid = ((8.0 * omega_max * t_max / std::f64::consts::PI).ceil() as usize).max(400);
    let step = omega_max / n_grid as f64;
    let (mut best_k, mut best_r) = (1, f64::INFINITY);
    for k in 1..=n_grid {
        let (_, r) = profile(ts, ys, k as f64 * step);
        if r < best_r {
            best_r = r;
            best_k = k;
        }
    }
    let (mut lo, mut hi) = (
        (best_k as f64 - 1.0) * step,
        (best_k as f64 + 1.0).min(n_grid as f64) * step,
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (profile(ts, ys, x1).1, profile(ts, ys, x2).1);
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = profile(ts, ys, x1).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = profile(ts, ys, x2).1;
        }
    }
    let omega = 0.5 * (lo + hi);
    let (amplitude, r) = profile(ts, ys, omega);
    let rms_residual = (r / ts.len() as f64).sqrt();
    if amplitude < 0.05 * y_scale {
        return Err(Error::FitFailure(format!(
            "no oscillation detected (amplitude {amplitude:e})"
        )));
    }
    Ok(SineSquaredFit {
        amplitude,
        omega,
        rms_residual,
    })
}
