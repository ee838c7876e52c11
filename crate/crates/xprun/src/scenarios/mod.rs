//! Scenario runners. Each returns its output files (name, bytes), the seeds
//! it consumed, a JSON summary and the list of validations it performed.

mod chains;
mod floquet;
mod single_qubit;
mod symmetry;
mod walk;

use serde::{Deserialize, Serialize};

use qchain::chain::{xx_hamiltonian, ChainSpec};
use qchain::noise::{Observable, TrajectoryModel};
use qchain::qcore::{pauli_string, Axis, Hamiltonian, TimeGrid};

use crate::config::{ratio, ExperimentConfig, Scenario};
use crate::{Result, RunError};

pub use chains::{run_nine_chain, run_phase_sweep};
pub use floquet::run_floquet_calibrate;
pub use single_qubit::run_single_qubit;
pub use symmetry::run_symmetry_check;
pub use walk::run_quantum_walk;

/// One named validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub files: Vec<(String, Vec<u8>)>,
    pub seeds: Vec<u64>,
    pub checks: Vec<Check>,
    pub summary: serde_json::Value,
}

impl ScenarioOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    /// Appends `<scenario>_report.json` holding the summary and checks.
    fn with_report(mut self, scenario: Scenario) -> Result<Self> {
        let report = serde_json::json!({
            "scenario": scenario.name(),
            "summary": self.summary,
            "checks": self.checks,
        });
        self.files.push((
            format!("{}_report.json", scenario.name()),
            serde_json::to_vec_pretty(&report)?,
        ));
        Ok(self)
    }
}

/// Resolves and validates `config`, then runs its scenario. `seeds`
/// overrides the `seed_base..` sequence.
pub fn run(
    config: &ExperimentConfig,
    seeds: Option<&[u64]>,
    workers: usize,
) -> Result<ScenarioOutput> {
    let cfg = config.resolve();
    cfg.validate()?;
    if workers == 0 {
        return Err(RunError::Config("workers must be at least 1".into()));
    }
    let out = match cfg.scenario {
        Scenario::SingleQubit => run_single_qubit(&cfg, seeds, workers)?,
        Scenario::QuantumWalk => run_quantum_walk(&cfg)?,
        Scenario::NineChain => run_nine_chain(&cfg, seeds, workers)?,
        Scenario::FiveChainPhaseSweep => run_phase_sweep(&cfg, seeds, workers)?,
        Scenario::FloquetCalibrate => run_floquet_calibrate(&cfg)?,
        Scenario::SymmetryCheck => run_symmetry_check(&cfg)?,
    };
    out.with_report(cfg.scenario)
}

/// The first `needed` seeds, from `explicit` or counting up from `seed_base`.
pub(crate) fn seed_list(
    cfg: &ExperimentConfig,
    explicit: Option<&[u64]>,
    needed: usize,
) -> Result<Vec<u64>> {
    match explicit {
        Some(s) if s.len() < needed => Err(RunError::Seeds(format!(
            "{} seeds supplied, {needed} needed",
            s.len()
        ))),
        Some(s) => Ok(s[..needed].to_vec()),
        None => {
            let base = cfg.seed_base()?;
            Ok((0..needed as u64).map(|i| base + i).collect())
        }
    }
}

/// Grid of `substep_ns` steps over `duration`, sampled every
/// `sample_every_ns`.
pub(crate) fn grid(cfg: &ExperimentConfig, duration_us: f64) -> Result<TimeGrid> {
    grid_with(cfg.substep_ns()?, cfg.sample_every_ns()?, duration_us)
}

pub(crate) fn grid_with(
    substep_ns: f64,
    sample_every_ns: f64,
    duration_us: f64,
) -> Result<TimeGrid> {
    if !crate::config::is_multiple(duration_us * 1e3, sample_every_ns) {
        return Err(RunError::Config(format!(
            "duration {duration_us} us is not a multiple of the {sample_every_ns} ns sampling"
        )));
    }
    let stride = ratio(sample_every_ns, substep_ns);
    let n_samples = ratio(duration_us * 1e3, sample_every_ns);
    Ok(TimeGrid::new(
        0.0,
        substep_ns * 1e-3,
        n_samples * stride,
        stride,
    )?)
}

/// Uniform chain with the center NNN bond, or the couplings of `chain_file`.
pub(crate) fn effective_chain(cfg: &ExperimentConfig) -> Result<ChainSpec> {
    let n = cfg.n_sites()?;
    if let Some(spec) = cfg.chain_file_spec(n)? {
        return Ok(spec);
    }
    Ok(ChainSpec::uniform(n, cfg.j()?)?.with_center_nnn(cfg.j2_center()?)?)
}

/// Chain Hamiltonian with binary-noise pump/loss on the center site.
pub(crate) fn center_noise_model(
    cfg: &ExperimentConfig,
    spec: &ChainSpec,
) -> Result<TrajectoryModel> {
    let h = Hamiltonian::from_static(spec.n_sites, xx_hamiltonian(spec)?);
    Ok(TrajectoryModel::new(
        h,
        vec![spec.center()],
        cfg.gamma_per_us()?,
        cfg.dt_section()?,
    ))
}

/// `σ₁ᶻσ_Lᶻ`.
pub(crate) fn end_to_end(n: usize) -> Result<Observable> {
    Ok(Observable::new(
        "zz",
        pauli_string(&[(1, Axis::Z), (n, Axis::Z)], n)?,
    )?)
}

/// Short label of a phase for file names and ids.
pub(crate) fn phase_label(phi: f64) -> String {
    let k = phi / (std::f64::consts::PI / 8.0);
    if (k - k.round()).abs() < 1e-9 {
        match k.round() as i64 {
            0 => "0".into(),
            8 => "pi".into(),
            n => format!("{n}pi_8"),
        }
    } else {
        format!("{phi:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn labels() {
        assert_eq!(phase_label(0.0), "0");
        assert_eq!(phase_label(PI), "pi");
        assert_eq!(phase_label(3.0 * PI / 8.0), "3pi_8");
        assert_eq!(phase_label(0.1), "0.100000");
    }

    #[test]
    fn seeds() {
        let cfg = ExperimentConfig::new(Scenario::NineChain).resolve();
        assert_eq!(seed_list(&cfg, None, 3).unwrap(), vec![1, 2, 3]);
        assert_eq!(seed_list(&cfg, Some(&[9, 8, 7]), 2).unwrap(), vec![9, 8]);
        assert!(seed_list(&cfg, Some(&[9]), 2).is_err());
    }

    #[test]
    fn single_qubit_grid_has_101_samples() {
        let cfg = ExperimentConfig::new(Scenario::SingleQubit).resolve();
        let g = grid(&cfg, cfg.duration_us().unwrap()).unwrap();
        assert_eq!(g.n_samples(), 101);
        assert!(g.t_end() >= 2.5);
    }
}
