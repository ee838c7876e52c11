//! End-to-end correlation under center pump/loss: the nine-site chain from
//! three sector states, and the five-site Bell phase sweep.

use std::f64::consts::PI;

use serde::Serialize;

use qchain::chain::{decoherence_jumps, xx_hamiltonian, ChainSpec, DissipationSpec};
use qchain::noise::{
    run_records, DecoherenceMode, EnsembleResult, TrajectoryEngine, TrajectoryRecord,
};
use qchain::qcore::{
    expectation, liouvillian_matrix, steady_states, DensityOperator, Hamiltonian, LindbladModel,
    StateVector,
};
use qchain::symmetry::{bell_chain_state, bell_prep_circuit, phi_eta_state, predicted_phase_curve};

use super::{
    center_noise_model, effective_chain, end_to_end, grid, grid_with, phase_label, seed_list,
    Check, ScenarioOutput,
};
use crate::analysis::{late_value, sample_index, LateValue};
use crate::config::{mhz, ExperimentConfig};
use crate::table::{to_csv, TimeSeriesTable};
use crate::{Result, RunError};

/// Bound on every correlation of the symmetry-broken baseline.
const BROKEN_TOL: f64 = 0.05;
/// Oracle agreement with the closed form.
const ORACLE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
struct LateRow {
    variant: String,
    state: String,
    mean: f64,
    sem: f64,
    drift: f64,
    drift_sem: f64,
    window_start_us: f64,
    expected: f64,
}

#[derive(Clone, Debug, Serialize)]
struct EvalRow {
    phi_rad: f64,
    t_e_us: f64,
    mean: f64,
    sem: f64,
    predicted: f64,
}

#[derive(Clone, Debug, Serialize)]
struct SweepRow {
    phi_rad: f64,
    late_mean: f64,
    late_sem: f64,
    drift: f64,
    drift_sem: f64,
    oracle: f64,
    predicted: f64,
}

fn reduce(records: &[TrajectoryRecord], seeds: &[u64]) -> Result<EnsembleResult> {
    Ok(EnsembleResult::from_records(
        records,
        vec!["zz".into()],
        seeds.to_vec(),
    )?)
}

/// Late value check: within `tol` of `expected` and stationary.
fn late_check(name: String, lv: &LateValue, expected: f64, tol: f64, drift_tol: f64) -> Check {
    let dev = (lv.mean - expected).abs();
    Check::new(
        name,
        dev <= tol && lv.stationary,
        format!(
            "late <zz> = {:.4} +- {:.4} (expected {expected:.4}, |dev| {dev:.4} <= {tol}); drift {:.4} +- {:.4} (tol {drift_tol})",
            lv.mean, lv.sem, lv.drift, lv.drift_sem
        ),
    )
}

/// Largest `|a − b|` in units of the combined SEM (zero SEM only tolerates
/// exact equality).
fn max_sem_distance(a: &EnsembleResult, b: &EnsembleResult) -> f64 {
    a.mean[0]
        .iter()
        .zip(&b.mean[0])
        .zip(a.sem[0].iter().zip(&b.sem[0]))
        .map(|((x, y), (s, t))| {
            let d = (x - y).abs();
            let s = s.hypot(*t);
            if d == 0.0 {
                0.0
            } else if s == 0.0 {
                f64::INFINITY
            } else {
                d / s
            }
        })
        .fold(0.0, f64::max)
}

pub fn run_nine_chain(
    cfg: &ExperimentConfig,
    seeds: Option<&[u64]>,
    workers: usize,
) -> Result<ScenarioOutput> {
    let n = cfg.n_sites()?;
    let m = cfg.trajectories()?;
    let m_dec = cfg.decoherent_trajectories()?;
    let seeds = seed_list(cfg, seeds, m.max(2 * m_dec))?;
    let (frac, drift_tol, tol) = (
        cfg.late_fraction()?,
        cfg.drift_tolerance()?,
        cfg.value_tolerance()?,
    );
    let states = [
        ("phi0", phi_eta_state(n, 0)?, predicted_phase_curve(n, 0.0)?),
        (
            "psi0",
            bell_chain_state(n, 0.0)?,
            predicted_phase_curve(n, 0.0)?,
        ),
        (
            "psipi",
            bell_chain_state(n, PI)?,
            predicted_phase_curve(n, PI)?,
        ),
    ];
    let obs = vec![end_to_end(n)?];
    let mut checks = Vec::new();
    let mut late_rows = Vec::new();
    let mut summary = serde_json::Map::new();

    // Ideal chain.
    let spec = effective_chain(cfg)?;
    let engine = TrajectoryEngine::new(
        center_noise_model(cfg, &spec)?,
        grid(cfg, cfg.duration_us()?)?,
        obs.clone(),
    )?;
    let mut ideal = TimeSeriesTable::default();
    for (label, psi, expected) in &states {
        let records = run_records(&engine, psi, &seeds[..m], workers)?;
        ideal.push_ensemble(&format!("{label}/"), &reduce(&records, &seeds[..m])?);
        let lv = late_value(&records, 0, frac, drift_tol);
        checks.push(late_check(
            format!("ideal_{label}_steady_value"),
            &lv,
            *expected,
            tol,
            drift_tol,
        ));
        late_rows.push(LateRow {
            variant: "ideal".into(),
            state: label.to_string(),
            mean: lv.mean,
            sem: lv.sem,
            drift: lv.drift,
            drift_sem: lv.drift_sem,
            window_start_us: lv.window_start_us,
            expected: *expected,
        });
    }
    drop(engine);

    // With T1/Tφ on every qubit.
    let jumps = decoherence_jumps(&vec![cfg.t1_us()?; n], &vec![cfg.tphi_us()?; n], n)?;
    let model =
        center_noise_model(cfg, &spec)?.with_decoherence(jumps, DecoherenceMode::JumpChannels);
    let engine = TrajectoryEngine::new(model, grid(cfg, cfg.duration_us()?)?, obs.clone())?;
    let mut decoherent = TimeSeriesTable::default();
    let (first, second) = (&seeds[..m_dec], &seeds[m_dec..2 * m_dec]);
    for (label, psi, _) in &states {
        let run = reduce(&run_records(&engine, psi, first, workers)?, first)?;
        let rerun = reduce(&run_records(&engine, psi, first, workers)?, first)?;
        let other = reduce(&run_records(&engine, psi, second, workers)?, second)?;
        decoherent.push_ensemble(&format!("{label}/"), &run);
        decoherent.push_ensemble(&format!("{label}_independent/"), &other);
        let d_rerun = max_sem_distance(&run, &rerun);
        let d_other = max_sem_distance(&run, &other);
        checks.push(Check::new(
            format!("decoherent_{label}_rerun_within_3sem"),
            d_rerun <= 3.0,
            format!(
                "max |run - rerun| / SEM = {d_rerun:.3} over {} points",
                run.times.len()
            ),
        ));
        summary.insert(
            format!("decoherent_{label}_independent_max_sem_distance"),
            d_other.into(),
        );
    }
    drop(engine);

    // Symmetry-broken baseline.
    let broken = ChainSpec::disordered_baseline(
        n,
        cfg.j()?,
        cfg.baseline_disorder()?,
        mhz(cfg.baseline_j2_over_2pi_mhz()?),
        cfg.baseline_seed()?,
    )?;
    let t_b = cfg.baseline_duration_us()?;
    let engine = TrajectoryEngine::new(
        center_noise_model(cfg, &broken)?,
        grid_with(
            cfg.baseline_substep_ns()?,
            cfg.baseline_sample_every_ns()?,
            t_b,
        )?,
        obs,
    )?;
    let mut broken_table = TimeSeriesTable::default();
    for (label, psi, _) in &states {
        let records = run_records(&engine, psi, &seeds[..m], workers)?;
        let r = reduce(&records, &seeds[..m])?;
        broken_table.push_ensemble(&format!("{label}/"), &r);
        let end = *r.mean[0].last().expect("samples");
        let end_sem = *r.sem[0].last().expect("samples");
        checks.push(Check::new(
            format!("broken_{label}_decays"),
            end.abs() <= BROKEN_TOL,
            format!("<zz>({t_b} us) = {end:.4} +- {end_sem:.4} (tol {BROKEN_TOL})"),
        ));
        let lv = late_value(&records, 0, frac, drift_tol);
        late_rows.push(LateRow {
            variant: "broken".into(),
            state: label.to_string(),
            mean: lv.mean,
            sem: lv.sem,
            drift: lv.drift,
            drift_sem: lv.drift_sem,
            window_start_us: lv.window_start_us,
            expected: 0.0,
        });
    }
    summary.insert("broken_chain".into(), serde_json::to_value(&broken)?);
    summary.insert("ideal_chain".into(), serde_json::to_value(&spec)?);

    Ok(ScenarioOutput {
        files: vec![
            ("nine_chain_ideal.csv".into(), ideal.to_csv()?),
            ("nine_chain_decoherent.csv".into(), decoherent.to_csv()?),
            ("nine_chain_broken.csv".into(), broken_table.to_csv()?),
            ("nine_chain_late.csv".into(), to_csv(&late_rows)?),
        ],
        seeds,
        checks,
        summary: summary.into(),
    })
}

/// Infinite-time `⟨σ₁ᶻσ_Lᶻ⟩` of `psi0` from the Liouvillian null space.
fn null_space_oracle(
    spec: &ChainSpec,
    gamma: f64,
    psi0s: &[StateVector],
) -> Result<(usize, Vec<f64>)> {
    let n = spec.n_sites;
    let h = Hamiltonian::from_static(n, xx_hamiltonian(spec)?);
    let jumps = DissipationSpec::symmetric(spec.center(), gamma).pump_loss_jumps(n)?;
    let ss = steady_states(&liouvillian_matrix(&LindbladModel::new(h, jumps)?)?)?;
    let zz = end_to_end(n)?.op;
    let values = psi0s
        .iter()
        .map(|psi| {
            let rho = DensityOperator::new(n, ss.project(psi.to_density().matrix())?)?;
            Ok(expectation(&zz, &rho)?)
        })
        .collect::<Result<_>>()?;
    Ok((ss.dimension(), values))
}

pub fn run_phase_sweep(
    cfg: &ExperimentConfig,
    seeds: Option<&[u64]>,
    workers: usize,
) -> Result<ScenarioOutput> {
    let n = cfg.n_sites()?;
    let m = cfg.trajectories()?;
    let seeds = seed_list(cfg, seeds, m)?;
    let (frac, drift_tol, tol) = (
        cfg.late_fraction()?,
        cfg.drift_tolerance()?,
        cfg.value_tolerance()?,
    );
    let phases = cfg.phases_rad()?;
    let spec = effective_chain(cfg)?;
    let grid = grid(cfg, cfg.duration_us()?)?;
    let times = grid.sample_times();
    let eval_idx: Vec<(f64, usize)> = cfg
        .eval_times_us()?
        .into_iter()
        .map(|t| {
            sample_index(&times, t).map(|i| (t, i)).ok_or_else(|| {
                RunError::Config(format!("evaluation time {t} us is not a sample time"))
            })
        })
        .collect::<Result<_>>()?;
    let engine =
        TrajectoryEngine::new(center_noise_model(cfg, &spec)?, grid, vec![end_to_end(n)?])?;
    let psi0s: Vec<StateVector> = phases
        .iter()
        .map(|&p| bell_prep_circuit(n, p))
        .collect::<qchain::Result<_>>()?;
    let (null_dim, oracle) = null_space_oracle(&spec, cfg.gamma_per_us()?, &psi0s)?;

    let mut table = TimeSeriesTable::default();
    let mut eval_rows = Vec::new();
    let mut sweep_rows = Vec::new();
    let mut checks = Vec::new();
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut all_stationary = true;
    for ((&phi, psi), &orc) in phases.iter().zip(&psi0s).zip(&oracle) {
        let predicted = predicted_phase_curve(n, phi)?;
        let records = run_records(&engine, psi, &seeds, workers)?;
        let r = reduce(&records, &seeds)?;
        table.push_ensemble(&format!("phi_{}/", phase_label(phi)), &r);
        for &(t, i) in &eval_idx {
            eval_rows.push(EvalRow {
                phi_rad: phi,
                t_e_us: t,
                mean: r.mean[0][i],
                sem: r.sem[0][i],
                predicted,
            });
        }
        let lv = late_value(&records, 0, frac, drift_tol);
        worst = worst.max((lv.mean - predicted).abs());
        worst_oracle = worst_oracle.max((orc - predicted).abs());
        all_stationary &= lv.stationary;
        sweep_rows.push(SweepRow {
            phi_rad: phi,
            late_mean: lv.mean,
            late_sem: lv.sem,
            drift: lv.drift,
            drift_sem: lv.drift_sem,
            oracle: orc,
            predicted,
        });
    }
    checks.push(Check::new(
        "late_values_match_phase_curve",
        worst <= tol && all_stationary,
        format!("max |late - cos(phi)/{n}-curve| = {worst:.4} (tol {tol}); all windows stationary: {all_stationary}"),
    ));
    checks.push(Check::new(
        "null_space_oracle_matches_phase_curve",
        worst_oracle <= ORACLE_TOL,
        format!("max |oracle - curve| = {worst_oracle:.3e} (tol {ORACLE_TOL:e}); null-space dimension {null_dim}"),
    ));
    let summary = serde_json::json!({
        "null_space_dimension": null_dim,
        "max_late_deviation": worst,
        "max_oracle_deviation": worst_oracle,
        "chain": spec,
    });

    Ok(ScenarioOutput {
        files: vec![
            ("phase_sweep.csv".into(), table.to_csv()?),
            ("phase_sweep_eval.csv".into(), to_csv(&eval_rows)?),
            ("phase_sweep_late.csv".into(), to_csv(&sweep_rows)?),
        ],
        seeds,
        checks,
        summary,
    })
}
