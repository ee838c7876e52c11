//! One qubit under binary-noise pump/loss: played pulses, the Lindblad
//! solution and the direct stochastic unravelling.

use qchain::noise::{
    fit_rabi_frequency, gamma_from_rabi_frequency, rabi_curve, run_ensemble, run_records,
    sample_noise, to_pulse_schedule, EnsembleResult, Observable, PulseSchedule, TrajectoryEngine,
    TrajectoryModel, TrajectoryRecord,
};
use qchain::qcore::{
    evolve_density, evolve_state, expectation, site_op, Axis, Hamiltonian, Jump, LindbladModel,
    StateVector, TimeGrid,
};

use super::{grid, seed_list, Check, ScenarioOutput};
use crate::config::ExperimentConfig;
use crate::table::{pulse_rows, to_csv, TimeSeriesTable};
use crate::Result;

/// Required fraction of points within 3·SEM of the Lindblad curve.
const AGREEMENT_FRACTION: f64 = 0.95;
/// Analytic tolerance of the Lindblad curve.
const LME_TOL: f64 = 1e-6;
/// Relative tolerance of the Rabi-calibrated rate.
const CALIBRATION_TOL: f64 = 0.01;

fn z_observable() -> Result<Vec<Observable>> {
    Ok(vec![Observable::new("sz", site_op(1, Axis::Z, 1)?)?])
}

/// Plays `schedule` on one qubit, integrating each section with the grid's
/// step.
fn play_schedule(
    schedule: &PulseSchedule,
    psi0: &StateVector,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let z = site_op(1, Axis::Z, 1)?;
    let k = crate::config::ratio(schedule.dt_section, grid.dt());
    let mut psi = psi0.clone();
    let mut values = vec![vec![expectation(&z, &psi)?]];
    let mut step = 0;
    let mut section = 0;
    while step < grid.n_steps() {
        let n = k.min(grid.n_steps() - step);
        let h = schedule.hamiltonian(section, 1)?;
        let local = TimeGrid::new(grid.time_of_step(step), grid.dt(), n, 1)?;
        let states = evolve_state(&h, &psi, &local)?;
        for (i, s) in states.iter().enumerate().skip(1) {
            if grid.is_sample_step(step + i) {
                values.push(vec![expectation(&z, s)?]);
            }
        }
        psi = states.last().expect("non-empty").clone();
        step += n;
        section += 1;
    }
    Ok(TrajectoryRecord {
        times: grid.sample_times(),
        values,
        n_jumps: 0,
    })
}

/// Fraction of samples where `|mean − reference| ≤ 3·sem`.
pub(crate) fn agreement(mean: &[f64], sem: &[f64], reference: &[f64]) -> f64 {
    let ok = mean
        .iter()
        .zip(sem)
        .zip(reference)
        .filter(|((m, s), r)| (*m - *r).abs() <= 3.0 * *s)
        .count();
    ok as f64 / mean.len() as f64
}

pub fn run_single_qubit(
    cfg: &ExperimentConfig,
    seeds: Option<&[u64]>,
    workers: usize,
) -> Result<ScenarioOutput> {
    let gamma = cfg.gamma_per_us()?;
    let dt_section = cfg.dt_section()?;
    let grid = grid(cfg, cfg.duration_us()?)?;
    let seeds = seed_list(cfg, seeds, cfg.trajectories()?)?;
    let starts = [
        ("from_g", StateVector::ground(1)),
        ("from_e", StateVector::basis(1, 1)),
    ];
    let times = grid.sample_times();
    let mut checks = Vec::new();

    // Lindblad solution.
    let plus = site_op(1, Axis::Plus, 1)?;
    let minus = site_op(1, Axis::Minus, 1)?;
    let lme = LindbladModel::new(
        Hamiltonian::zero(1),
        vec![Jump::new(plus, gamma), Jump::new(minus, gamma)],
    )?;
    let z = site_op(1, Axis::Z, 1)?;
    let mut lme_table = TimeSeriesTable::default();
    let mut lme_curves = Vec::new();
    let mut lme_err: f64 = 0.0;
    for (label, psi) in &starts {
        let rho = evolve_density(&lme, &psi.to_density(), &grid)?;
        let curve: Vec<f64> = rho
            .iter()
            .map(|r| expectation(&z, r))
            .collect::<qchain::Result<_>>()?;
        let z0 = curve[0];
        for (&t, &v) in times.iter().zip(&curve) {
            lme_err = lme_err.max((v - z0 * (-2.0 * gamma * t).exp()).abs());
        }
        lme_table.push_series(
            &format!("sz_{label}"),
            &times,
            &curve,
            &vec![0.0; curve.len()],
            1,
        );
        lme_curves.push(curve);
    }
    checks.push(Check::new(
        "lme_matches_exponential",
        lme_err <= LME_TOL,
        format!("max |<sz> - z0 exp(-2 gamma t)| = {lme_err:.3e} (tol {LME_TOL:e})"),
    ));

    // Direct stochastic unravelling.
    let model = TrajectoryModel::new(Hamiltonian::zero(1), vec![1], gamma, dt_section);
    let engine = TrajectoryEngine::new(model, grid, z_observable()?)?;
    let mut sse_table = TimeSeriesTable::default();
    let mut summary = serde_json::Map::new();
    for ((label, psi), reference) in starts.iter().zip(&lme_curves) {
        let r = run_ensemble(&engine, psi, &seeds, workers)?;
        sse_table.push_ensemble(&format!("{label}/"), &r);
        let frac = agreement(&r.mean[0], &r.sem[0], reference);
        checks.push(Check::new(
            format!("sse_numerical_{label}_within_3sem"),
            frac >= AGREEMENT_FRACTION,
            format!(
                "{:.1}% of {} points within 3 SEM",
                100.0 * frac,
                r.times.len()
            ),
        ));
        summary.insert(format!("sse_numerical_{label}_agreement"), frac.into());
    }

    // Pulses played at a Rabi-calibrated amplitude.
    let target = (gamma / dt_section).sqrt();
    let durations: Vec<f64> = (0..=100).map(|i| i as f64 * 0.005).collect();
    let populations = rabi_curve(2.0 * target, 0.0, &durations)?;
    let rabi = fit_rabi_frequency(&durations, &populations, 4.0 * target)?;
    let amplitude = 0.5 * rabi;
    let gamma_cal = gamma_from_rabi_frequency(rabi, dt_section);
    checks.push(Check::new(
        "rabi_calibration",
        (gamma_cal / gamma - 1.0).abs() <= CALIBRATION_TOL,
        format!("calibrated gamma = {gamma_cal:.6} /us, amplitude = {amplitude:.6} rad/us"),
    ));
    summary.insert("rabi_frequency_rad_per_us".into(), rabi.into());
    summary.insert("pulse_amplitude_rad_per_us".into(), amplitude.into());
    let n_sections = grid
        .n_steps()
        .div_ceil(crate::config::ratio(dt_section, grid.dt()));
    let schedules: Vec<PulseSchedule> = seeds
        .iter()
        .map(|&s| {
            let real = sample_noise(s, n_sections, &[1], dt_section)?;
            Ok(to_pulse_schedule(&real, gamma)?
                .remove(0)
                .with_amplitude(amplitude))
        })
        .collect::<Result<_>>()?;
    let mut exp_table = TimeSeriesTable::default();
    for ((label, psi), reference) in starts.iter().zip(&lme_curves) {
        let records: Vec<TrajectoryRecord> = schedules
            .iter()
            .map(|s| play_schedule(s, psi, &grid))
            .collect::<Result<_>>()?;
        let r = EnsembleResult::from_records(&records, vec!["sz".into()], seeds.clone())?;
        exp_table.push_ensemble(&format!("{label}/"), &r);
        let frac = agreement(&r.mean[0], &r.sem[0], reference);
        checks.push(Check::new(
            format!("sse_experiment_{label}_within_3sem"),
            frac >= AGREEMENT_FRACTION,
            format!(
                "{:.1}% of {} points within 3 SEM",
                100.0 * frac,
                r.times.len()
            ),
        ));
        summary.insert(format!("sse_experiment_{label}_agreement"), frac.into());
    }
    // The pulse path and the direct path see the same noise.
    let direct = run_records(&engine, &starts[1].1, &seeds[..1], 1)?;
    let played = play_schedule(&schedules[0].with_amplitude(target), &starts[1].1, &grid)?;
    let path_diff = direct[0]
        .values
        .iter()
        .zip(&played.values)
        .map(|(a, b)| (a[0] - b[0]).abs())
        .fold(0.0, f64::max);
    summary.insert("pulse_vs_direct_max_abs".into(), path_diff.into());

    Ok(ScenarioOutput {
        files: vec![
            ("single_qubit_lme.csv".into(), lme_table.to_csv()?),
            ("single_qubit_sse_numerical.csv".into(), sse_table.to_csv()?),
            (
                "single_qubit_sse_experiment.csv".into(),
                exp_table.to_csv()?,
            ),
            (
                "single_qubit_pulses.csv".into(),
                to_csv(&pulse_rows(&schedules[0]))?,
            ),
        ],
        seeds,
        checks,
        summary: summary.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qchain::qcore::DensityOperator;

    #[test]
    fn agreement_counts() {
        assert_eq!(agreement(&[0.0, 1.0], &[0.1, 0.1], &[0.2, 1.0]), 1.0);
        assert_eq!(agreement(&[0.0, 1.0], &[0.1, 0.1], &[0.5, 1.0]), 0.5);
    }

    #[test]
    fn density_start_states() {
        let e = StateVector::basis(1, 1);
        let d: DensityOperator = e.to_density();
        assert!((expectation(&site_op(1, Axis::Z, 1).unwrap(), &d).unwrap() - 1.0).abs() < 1e-15);
    }
}
