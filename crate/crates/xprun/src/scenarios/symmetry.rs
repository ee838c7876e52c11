//! Strong-symmetry report for short chains: classifier validation,
//! commutators on the physical chain, Liouvillian null spaces and sector
//! weights along the Lindblad evolution.

use qchain::chain::{xx_hamiltonian, ChainSpec, DissipationSpec};
use qchain::qcore::{
    evolve_density, liouvillian_matrix, steady_states, Hamiltonian, LindbladModel, StateVector,
};
use qchain::symmetry::{build_c, center_jumps, phi_eta_state, sector_projectors, SYMMETRY_TOL};
use qchain::C64;

use super::{grid, Check, ScenarioOutput};
use crate::config::ExperimentConfig;
use crate::table::TimeSeriesTable;
use crate::Result;

/// Commutator above which a chain counts as symmetry-broken.
const BROKEN_THRESHOLD: f64 = 1e-6;
/// Allowed change of any sector weight over the run.
const WEIGHT_DRIFT_TOL: f64 = 1e-6;
/// Relative perturbation of the first bond in the asymmetric control.
const ASYMMETRY: f64 = 0.1;

/// Equal superposition of the sector representatives `φ_0 … φ_l`.
fn all_sector_state(n: usize) -> Result<StateVector> {
    let l = (n - 1) / 2;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    for eta in 0..=l {
        for (a, b) in amps.iter_mut().zip(phi_eta_state(n, eta)?.amplitudes()) {
            *a += b;
        }
    }
    Ok(StateVector::normalized(n, amps)?)
}

pub fn run_symmetry_check(cfg: &ExperimentConfig) -> Result<ScenarioOutput> {
    let gamma = cfg.gamma_per_us()?;
    let mut files = Vec::new();
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for n in cfg.sizes()? {
        let l = (n - 1) / 2;
        let classifier = build_c(n)?;
        checks.push(Check::new(
            format!("classifier_L{n}_validated"),
            true,
            format!("{:?} passed on the reference chain", classifier.kind()),
        ));

        let physical = ChainSpec::uniform(n, cfg.j()?)?.with_center_nnn(cfg.j2_center()?)?;
        let h = xx_hamiltonian(&physical)?;
        let jumps = center_jumps(n)?;
        let phys = classifier.check(&h, &jumps);
        let worst = phys.hamiltonian_commutator.max(phys.jump_commutator);
        checks.push(Check::new(
            format!("physical_L{n}_commutators"),
            worst <= SYMMETRY_TOL,
            format!(
                "||[Q,H]|| = {:.3e}, max ||[Q,L]|| = {:.3e} (tol {SYMMETRY_TOL:e})",
                phys.hamiltonian_commutator, phys.jump_commutator
            ),
        ));

        let mut j = physical.j.clone();
        j[0] *= 1.0 + ASYMMETRY;
        let asymmetric = ChainSpec::new(n, j, physical.j2.clone())?;
        let asym = classifier.check(&xx_hamiltonian(&asymmetric)?, &jumps);
        checks.push(Check::new(
            format!("asymmetric_L{n}_flagged"),
            asym.hamiltonian_commutator > BROKEN_THRESHOLD,
            format!(
                "||[Q,H]|| = {:.3e} with the first bond scaled by {}",
                asym.hamiltonian_commutator,
                1.0 + ASYMMETRY
            ),
        ));

        let lme = LindbladModel::new(
            Hamiltonian::from_static(n, h),
            DissipationSpec::symmetric(physical.center(), gamma).pump_loss_jumps(n)?,
        )?;
        let null_dim = steady_states(&liouvillian_matrix(&lme)?)?.dimension();
        checks.push(Check::new(
            format!("null_space_L{n}"),
            null_dim > l,
            format!("null-space dimension {null_dim} (need >= {})", l + 1),
        ));

        let sectors = sector_projectors(&classifier)?;
        let grid = grid(cfg, cfg.duration_us()?)?;
        let rhos = evolve_density(&lme, &all_sector_state(n)?.to_density(), &grid)?;
        let weights: Vec<Vec<f64>> = rhos
            .iter()
            .map(|r| Ok(sectors.weights_of_density(r)?.weights))
            .collect::<Result<_>>()?;
        let drift = weights
            .iter()
            .flat_map(|w| w.iter().zip(&weights[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        checks.push(Check::new(
            format!("sector_weights_L{n}_conserved"),
            drift < WEIGHT_DRIFT_TOL,
            format!("max |w_eta(t) - w_eta(0)| = {drift:.3e} (tol {WEIGHT_DRIFT_TOL:e})"),
        ));

        let times = grid.sample_times();
        let mut table = TimeSeriesTable::default();
        for eta in 0..=l {
            let w: Vec<f64> = weights.iter().map(|w| w[eta]).collect();
            table.push_series(&format!("w_eta{eta}"), &times, &w, &vec![0.0; w.len()], 1);
        }
        files.push((format!("symmetry_weights_L{n}.csv"), table.to_csv()?));
        reports.push(serde_json::json!({
            "n_sites": n,
            "classifier": classifier.kind(),
            "candidates": classifier.checks(),
            "physical": phys,
            "asymmetric": asym,
            "null_space_dimension": null_dim,
            "sector_ranks": (0..=l).map(|e| sectors.rank(e)).collect::<Vec<_>>(),
            "initial_weights": weights[0],
            "weight_drift": drift,
        }));
    }
    Ok(ScenarioOutput {
        files,
        seeds: Vec::new(),
        checks,
        summary: serde_json::json!({ "sizes": reports }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_sector_state_has_equal_weights() {
        let c = build_c(5).unwrap();
        let s = sector_projectors(&c).unwrap();
        let w = s.weights_of_state(&all_sector_state(5).unwrap()).unwrap();
        for x in &w.weights {
            assert!((x - 1.0 / 3.0).abs() < 1e-10);
        }
    }
}
