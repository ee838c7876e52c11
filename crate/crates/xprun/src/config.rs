//! Scenario configuration. Keys carry their units; `*_over_2pi_MHz` values
//! are multiplied by 2π on use.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Result, RunError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleQubit,
    QuantumWalk,
    NineChain,
    FiveChainPhaseSweep,
    FloquetCalibrate,
    SymmetryCheck,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::SingleQubit,
        Scenario::QuantumWalk,
        Scenario::NineChain,
        Scenario::FiveChainPhaseSweep,
        Scenario::FloquetCalibrate,
        Scenario::SymmetryCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SingleQubit => "single_qubit",
            Scenario::QuantumWalk => "quantum_walk",
            Scenario::NineChain => "nine_chain",
            Scenario::FiveChainPhaseSweep => "five_chain_phase_sweep",
            Scenario::FloquetCalibrate => "floquet_calibrate",
            Scenario::SymmetryCheck => "symmetry_check",
        }
    }
}

impl FromStr for Scenario {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| RunError::Config(format!("unknown scenario '{s}'")))
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// NN and NNN couplings loaded from `chain_file`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    #[serde(rename = "J_over_2pi_MHz")]
    pub j_over_2pi_mhz: Vec<f64>,
    #[serde(rename = "J2_over_2pi_MHz")]
    pub j2_over_2pi_mhz: Vec<f64>,
}

/// Every knob of every scenario. Fields left out take the scenario's
/// default; [`ExperimentConfig::resolve`] fills them in so the manifest
/// records the values actually used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_per_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_section_ns: Option<f64>,
    /// Integration step; must divide `dt_section_ns`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substep_ns: Option<f64>,
    /// Sampling interval; must be a multiple of `substep_ns`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_every_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_us: Option<f64>,
    /// Trajectories per ideal curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_base: Option<u64>,
    #[serde(
        rename = "J_over_2pi_MHz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub j_over_2pi_mhz: Option<f64>,
    /// NNN coupling kept between the two center-adjacent sites.
    #[serde(
        rename = "J2_center_over_2pi_MHz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub j2_center_over_2pi_mhz: Option<f64>,
    /// Replaces the uniform chain with explicit couplings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_file: Option<PathBuf>,
    #[serde(rename = "T1_us", default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<f64>,
    #[serde(rename = "Tphi_us", default, skip_serializing_if = "Option::is_none")]
    pub tphi_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoherent_trajectories: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_disorder: Option<f64>,
    #[serde(
        rename = "baseline_J2_over_2pi_MHz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub baseline_j2_over_2pi_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_duration_us: Option<f64>,
    /// Integration step of the baseline run; 5 μs is not a multiple of 7.5 ns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_substep_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_sample_every_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases_rad: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_times_us: Option<Vec<f64>>,
    /// Fraction of the run averaged for late-time values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub late_fraction: Option<f64>,
    /// Largest linear drift accepted over the late window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_tolerance: Option<f64>,
    /// Allowed deviation of late-time values from their predictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lab_frame: Option<bool>,
    #[serde(
        rename = "g_over_2pi_MHz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub g_over_2pi_mhz: Option<f64>,
    #[serde(
        rename = "g2_over_2pi_MHz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub g2_over_2pi_mhz: Option<f64>,
    /// Starting modulation index ε/ν of every tone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation_index: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_rel_tol: Option<f64>,
    #[serde(
        rename = "check_g_over_2pi_MHz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub check_g_over_2pi_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check_index: Option<f64>,
    #[serde(
        rename = "check_nu_over_2pi_MHz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub check_nu_over_2pi_mhz: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nnn_duration_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
}

pub(crate) fn mhz(f: f64) -> f64 {
    2.0 * PI * f
}

macro_rules! fill {
    ($cfg:ident, $($field:ident = $value:expr),+ $(,)?) => {
        $( if $cfg.$field.is_none() { $cfg.$field = Some($value); } )+
    };
}

macro_rules! getter {
    ($($name:ident : $ty:ty),+ $(,)?) => {
        $(
            pub fn $name(&self) -> Result<$ty> {
                self.$name.clone().ok_or_else(|| {
                    RunError::Config(format!(
                        "'{}' is required by {}",
                        stringify!($name),
                        self.scenario
                    ))
                })
            }
        )+
    };
}

impl ExperimentConfig {
    /// Config with only the scenario set.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            n_sites: None,
            gamma_per_us: None,
            dt_section_ns: None,
            substep_ns: None,
            sample_every_ns: None,
            duration_us: None,
            trajectories: None,
            seed_base: None,
            j_over_2pi_mhz: None,
            j2_center_over_2pi_mhz: None,
            chain_file: None,
            t1_us: None,
            tphi_us: None,
            decoherent_trajectories: None,
            baseline_disorder: None,
            baseline_j2_over_2pi_mhz: None,
            baseline_seed: None,
            baseline_duration_us: None,
            baseline_substep_ns: None,
            baseline_sample_every_ns: None,
            phases_rad: None,
            eval_times_us: None,
            late_fraction: None,
            drift_tolerance: None,
            value_tolerance: None,
            lab_frame: None,
            g_over_2pi_mhz: None,
            g2_over_2pi_mhz: None,
            modulation_index: None,
            amplitude_rel_tol: None,
            check_g_over_2pi_mhz: None,
            check_index: None,
            check_nu_over_2pi_mhz: None,
            nnn_duration_us: None,
            sizes: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fills every field the scenario uses with its default.
    pub fn resolve(&self) -> Self {
        let mut c = self.clone();
        fill!(c, seed_base = 1);
        match c.scenario {
            Scenario::SingleQubit => {
                fill!(
                    c,
                    gamma_per_us = 1.0,
                    dt_section_ns = 7.5,
                    substep_ns = 1.5,
                    sample_every_ns = 25.5,
                    duration_us = 2.55,
                    trajectories = 100,
                );
            }
            Scenario::QuantumWalk => {
                fill!(
                    c,
                    n_sites = 9,
                    j_over_2pi_mhz = 11.0,
                    j2_center_over_2pi_mhz = 1.0,
                    substep_ns = 0.5,
                    sample_every_ns = 5.0,
                    duration_us = 1.0,
                    phases_rad = vec![0.0, PI],
                    lab_frame = false,
                    value_tolerance = 0.02,
                    g_over_2pi_mhz = 33.0,
                    g2_over_2pi_mhz = 1.0,
                    modulation_index = 1.2,
                    amplitude_rel_tol = 1e-3,
                );
            }
            Scenario::NineChain => {
                fill!(
                    c,
                    n_sites = 9,
                    gamma_per_us = 1.0,
                    dt_section_ns = 7.5,
                    substep_ns = 7.5,
                    sample_every_ns = 75.0,
                    duration_us = 22.5,
                    trajectories = 30,
                    j_over_2pi_mhz = 11.0,
                    j2_center_over_2pi_mhz = 1.0,
                    t1_us = 30.0,
                    tphi_us = 20.0,
                    decoherent_trajectories = 10,
                    baseline_disorder = qchain::chain::BASELINE_DISORDER,
                    baseline_j2_over_2pi_mhz = 1.0,
                    baseline_seed = qchain::chain::BASELINE_SEED,
                    baseline_duration_us = 5.0,
                    baseline_substep_ns = 2.5,
                    baseline_sample_every_ns = 50.0,
                    late_fraction = 0.1,
                    drift_tolerance = 0.01,
                    value_tolerance = 0.02,
                );
            }
            Scenario::FiveChainPhaseSweep => {
                fill!(
                    c,
                    n_sites = 5,
                    gamma_per_us = 1.0,
                    dt_section_ns = 7.5,
                    substep_ns = 2.5,
                    sample_every_ns = 50.0,
                    duration_us = 10.0,
                    trajectories = 500,
                    j_over_2pi_mhz = 11.0,
                    j2_center_over_2pi_mhz = 1.0,
                    phases_rad = (0..=8).map(|k| k as f64 * PI / 8.0).collect(),
                    eval_times_us = vec![1.4, 1.7, 2.0],
                    late_fraction = 0.1,
                    drift_tolerance = 0.01,
                    value_tolerance = 0.02,
                );
            }
            Scenario::FloquetCalibrate => {
                fill!(
                    c,
                    n_sites = 9,
                    g_over_2pi_mhz = 33.0,
                    g2_over_2pi_mhz = 1.0,
                    modulation_index = 1.2,
                    j_over_2pi_mhz = 11.0,
                    amplitude_rel_tol = 1e-3,
                    check_g_over_2pi_mhz = 11.0,
                    check_index = 1.84,
                    check_nu_over_2pi_mhz = vec![210.0, 330.0],
                    nnn_duration_us = 2.0,
                    value_tolerance = 0.05,
                );
            }
            Scenario::SymmetryCheck => {
                fill!(
                    c,
                    sizes = vec![3, 5],
                    gamma_per_us = 1.0,
                    j_over_2pi_mhz = 11.0,
                    j2_center_over_2pi_mhz = 1.0,
                    duration_us = 2.0,
                    substep_ns = 0.5,
                    sample_every_ns = 50.0,
                );
            }
        }
        c
    }

    getter!(
        n_sites: usize,
        gamma_per_us: f64,
        dt_section_ns: f64,
        substep_ns: f64,
        sample_every_ns: f64,
        duration_us: f64,
        trajectories: usize,
        seed_base: u64,
        j_over_2pi_mhz: f64,
        j2_center_over_2pi_mhz: f64,
        t1_us: f64,
        tphi_us: f64,
        decoherent_trajectories: usize,
        baseline_disorder: f64,
        baseline_j2_over_2pi_mhz: f64,
        baseline_seed: u64,
        baseline_duration_us: f64,
        baseline_substep_ns: f64,
        baseline_sample_every_ns: f64,
        phases_rad: Vec<f64>,
        eval_times_us: Vec<f64>,
        late_fraction: f64,
        drift_tolerance: f64,
        value_tolerance: f64,
        lab_frame: bool,
        g_over_2pi_mhz: f64,
        g2_over_2pi_mhz: f64,
        modulation_index: f64,
        amplitude_rel_tol: f64,
        check_g_over_2pi_mhz: f64,
        check_index: f64,
        check_nu_over_2pi_mhz: Vec<f64>,
        nnn_duration_us: f64,
        sizes: Vec<usize>,
    );

    /// NN coupling in rad/μs.
    pub fn j(&self) -> Result<f64> {
        Ok(mhz(self.j_over_2pi_mhz()?))
    }

    pub fn j2_center(&self) -> Result<f64> {
        Ok(mhz(self.j2_center_over_2pi_mhz()?))
    }

    pub fn dt_section(&self) -> Result<f64> {
        Ok(self.dt_section_ns()? * 1e-3)
    }

    /// Checks ranges and cross-field consistency of a resolved config.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RunError::Config(msg));
        let positive = [
            ("gamma_per_us", self.gamma_per_us),
            ("dt_section_ns", self.dt_section_ns),
            ("substep_ns", self.substep_ns),
            ("sample_every_ns", self.sample_every_ns),
            ("duration_us", self.duration_us),
            ("T1_us", self.t1_us),
            ("Tphi_us", self.tphi_us),
            ("baseline_duration_us", self.baseline_duration_us),
            ("baseline_substep_ns", self.baseline_substep_ns),
            ("baseline_sample_every_ns", self.baseline_sample_every_ns),
            ("late_fraction", self.late_fraction),
            ("drift_tolerance", self.drift_tolerance),
            ("value_tolerance", self.value_tolerance),
            ("amplitude_rel_tol", self.amplitude_rel_tol),
            ("nnn_duration_us", self.nnn_duration_us),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} must be positive and finite, got {v}"));
                }
            }
        }
        if let Some(f) = self.late_fraction {
            if f > 1.0 {
                return bad(format!("late_fraction must be <= 1, got {f}"));
            }
        }
        for (name, v) in [
            ("trajectories", self.trajectories),
            ("decoherent_trajectories", self.decoherent_trajectories),
        ] {
            if v == Some(0) {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if let Some(n) = self.n_sites {
            if n < 3 || n % 2 == 0 {
                return bad(format!("n_sites must be odd and >= 3, got {n}"));
            }
        }
        let grids = [
            ("", self.substep_ns, self.sample_every_ns, self.duration_us),
            (
                "baseline_",
                self.baseline_substep_ns,
                self.baseline_sample_every_ns,
                self.baseline_duration_us,
            ),
        ];
        for (pre, sub, every, d) in grids {
            if let (Some(dt), Some(sub)) = (self.dt_section_ns, sub) {
                if !is_multiple(dt, sub) {
                    return bad(format!(
                        "{pre}substep_ns = {sub} must divide dt_section_ns = {dt}"
                    ));
                }
            }
            if let (Some(every), Some(sub)) = (every, sub) {
                if !is_multiple(every, sub) {
                    return bad(format!("{pre}sample_every_ns = {every} must be a multiple of {pre}substep_ns = {sub}"));
                }
            }
            if let (Some(d), Some(every)) = (d, every) {
                if !is_multiple(d * 1e3, every) {
                    return bad(format!("{pre}duration_us = {d} must be a multiple of {pre}sample_every_ns = {every}"));
                }
            }
        }
        if let Some(p) = &self.chain_file {
            if !p.exists() {
                return bad(format!("chain_file {} does not exist", p.display()));
            }
        }
        if self.scenario == Scenario::QuantumWalk {
            if let Some(phases) = &self.phases_rad {
                if phases.is_empty() {
                    return bad("phases_rad is empty".into());
                }
            }
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() || sizes.iter().any(|&n| !(n == 3 || n == 5)) {
                return bad(format!("sizes must be drawn from {{3, 5}}, got {sizes:?}"));
            }
        }
        Ok(())
    }

    /// Explicit couplings from `chain_file`, if given.
    pub fn chain_file_spec(&self, n_sites: usize) -> Result<Option<qchain::chain::ChainSpec>> {
        let Some(path) = &self.chain_file else {
            return Ok(None);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        let f: ChainFile =
            serde_json::from_str(&text).map_err(|e| RunError::Config(e.to_string()))?;
        let spec = qchain::chain::ChainSpec::new(
            n_sites,
            f.j_over_2pi_mhz.iter().map(|&x| mhz(x)).collect(),
            f.j2_over_2pi_mhz.iter().map(|&x| mhz(x)).collect(),
        )?;
        Ok(Some(spec))
    }
}

/// `a` is an integer multiple of `b` up to rounding.
pub(crate) fn is_multiple(a: f64, b: f64) -> bool {
    let r = a / b;
    r.round() >= 1.0 && (r - r.round()).abs() <= 1e-9 * r.max(1.0)
}

/// Integer ratio `a / b` of two compatible lengths.
pub(crate) fn ratio(a: f64, b: f64) -> usize {
    (a / b).round() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_units() {
        let c = ExperimentConfig::new(Scenario::NineChain).resolve();
        c.validate().unwrap();
        assert_eq!(c.trajectories().unwrap(), 30);
        assert!((c.j().unwrap() - 2.0 * PI * 11.0).abs() < 1e-12);
        assert!((c.dt_section().unwrap() - 0.0075).abs() < 1e-15);
    }

    #[test]
    fn round_trip_and_unknown_keys() {
        let c = ExperimentConfig::from_json(r#"{"scenario":"single_qubit","gamma_per_us":2.0}"#)
            .unwrap();
        assert_eq!(c.gamma_per_us, Some(2.0));
        let r = c.resolve();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(ExperimentConfig::from_json(r#"{"scenario":"single_qubit","gama":1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"scenario":"nope"}"#).is_err());
    }

    #[test]
    fn validation_catches_inconsistency() {
        let mut c = ExperimentConfig::new(Scenario::SingleQubit).resolve();
        c.substep_ns = Some(2.0);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Scenario::NineChain).resolve();
        c.n_sites = Some(8);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Scenario::NineChain).resolve();
        c.chain_file = Some(PathBuf::from("/definitely/missing.json"));
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(Scenario::NineChain).resolve();
        c.gamma_per_us = Some(-1.0);
        assert!(c.validate().is_err());
    }
}
