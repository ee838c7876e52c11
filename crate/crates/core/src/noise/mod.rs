//! Binary-noise unravelling of symmetric pump/loss dissipation.
//!
//! A site with `γ D[σ⁺] + γ D[σ⁻]` is replaced, section by section, by the
//! Hermitian drive `√(γ/2Δt)(η₁σˣ + η₂σʸ)` with fair `η ∈ {±1}`. Averaging
//! pure-state trajectories over the signs reproduces the master equation to
//! first order in `Δt`.

mod ensemble;
mod trajectory;

use std::f64::consts::{FRAC_PI_4, PI};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::fit::fit_sine_squared;
use crate::qcore::{evolve_state, site_op, Axis, LinearOperator, StateVector, TimeGrid};
use crate::{Error, Result};

pub use ensemble::{mcwf_reference, run_ensemble, run_records, EnsembleResult};
pub use trajectory::{
    run_trajectory, DecoherenceMode, Observable, TrajectoryEngine, TrajectoryModel,
    TrajectoryRecord,
};

/// Generator used for every random draw in this module.
pub const PRNG_NAME: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64)";
/// ChaCha stream carrying the noise signs.
pub const NOISE_STREAM: u64 = 0;
/// ChaCha stream carrying jump times and channels.
pub const JUMP_STREAM: u64 = 1;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Signs `η` for every section and dissipative site, x channel first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    eta: Vec<i8>,
    n_sections: usize,
    dt_section: f64,
    seed: u64,
    sites: Vec<usize>,
}

impl NoiseRealization {
    pub fn n_sections(&self) -> usize {
        self.n_sections
    }

    pub fn dt_section(&self) -> f64 {
        self.dt_section
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// Flat sign array laid out as `[section][site][channel]`.
    pub fn as_slice(&self) -> &[i8] {
        &self.eta
    }

    /// `(η₁, η₂)` for the `k`-th dissipative site in `section`.
    pub fn eta(&self, section: usize, k: usize) -> (i8, i8) {
        let i = (section * self.sites.len() + k) * 2;
        (self.eta[i], self.eta[i + 1])
    }

    /// Index of the sign pattern of `section` in `0..4^n_sites`.
    pub(crate) fn combo(&self, section: usize) -> usize {
        (0..self.sites.len()).fold(0, |acc, k| {
            let (a, b) = self.eta(section, k);
            acc * 4 + (usize::from(a < 0) << 1 | usize::from(b < 0))
        })
    }
}

/// Decodes a pattern index from [`NoiseRealization::combo`].
pub(crate) fn combo_signs(mut combo: usize, n_sites: usize) -> Vec<(i8, i8)> {
    let mut out = vec![(1, 1); n_sites];
    for k in (0..n_sites).rev() {
        let c = combo % 4;
        out[k] = (
            if c & 2 != 0 { -1 } else { 1 },
            if c & 1 != 0 { -1 } else { 1 },
        );
        combo /= 4;
    }
    out
}

/// Draws fair ±1 signs: one bit per channel, taken LSB first from successive
/// 64-bit words of the noise stream.
pub fn sample_noise(
    seed: u64,
    n_sections: usize,
    sites: &[usize],
    dt_section: f64,
) -> Result<NoiseRealization> {
    if n_sections == 0 {
        return Err(Error::InvalidArgument(
            "n_sections must be at least 1".into(),
        ));
    }
    if !(dt_section > 0.0 && dt_section.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dt_section must be positive, got {dt_section}"
        )));
    }
    for (i, &s) in sites.iter().enumerate() {
        if s == 0 {
            return Err(Error::InvalidArgument("sites are 1-based".into()));
        }
        if sites[..i].contains(&s) {
            return Err(Error::DuplicateSite(s));
        }
    }
    let n = n_sections * sites.len() * 2;
    let mut rng = stream_rng(seed, NOISE_STREAM);
    let mut eta = Vec::with_capacity(n);
    let mut word = 0u64;
    for i in 0..n {
        if i % 64 == 0 {
            word = rng.next_u64();
        }
        eta.push(if word >> (i % 64) & 1 == 1 { 1 } else { -1 });
    }
    Ok(NoiseRealization {
        eta,
        n_sections,
        dt_section,
        seed,
        sites: sites.to_vec(),
    })
}

/// `√(γ/2Δt)(η₁σˣ + η₂σʸ)` on `site`.
pub(crate) fn noise_operator(
    eta: (i8, i8),
    gamma: f64,
    dt_section: f64,
    site: usize,
    n_qubits: usize,
) -> Result<LinearOperator> {
    let c = (gamma / (2.0 * dt_section)).sqrt();
    let x = site_op(site, Axis::X, n_qubits)?.scale_real(c * f64::from(eta.0));
    let y = site_op(site, Axis::Y, n_qubits)?.scale_real(c * f64::from(eta.1));
    Ok(x.add(&y))
}

/// Noise Hamiltonian of one section on one dissipative site.
pub fn noise_hamiltonian(
    real: &NoiseRealization,
    section: usize,
    gamma: f64,
    site: usize,
    n_qubits: usize,
) -> Result<LinearOperator> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    if section >= real.n_sections {
        return Err(Error::InvalidArgument(format!(
            "section {section} out of range 0..{}",
            real.n_sections
        )));
    }
    let k = real
        .sites
        .iter()
        .position(|&s| s == site)
        .ok_or_else(|| Error::InvalidArgument(format!("site {site} carries no noise")))?;
    noise_operator(real.eta(section, k), gamma, real.dt_section, site, n_qubits)
}

/// Phase `θ = atan2(η₂, η₁)` in `[0, 2π)`, exact for the four sign pairs.
pub fn pulse_phase(eta: (i8, i8)) -> f64 {
    match (eta.0 > 0, eta.1 > 0) {
        (true, true) => FRAC_PI_4,
        (false, true) => 3.0 * FRAC_PI_4,
        (false, false) => 5.0 * FRAC_PI_4,
        (true, false) => 7.0 * FRAC_PI_4,
    }
}

/// One played section of a [`PulseSchedule`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSection {
    pub index: usize,
    pub start: f64,
    pub duration: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Fixed-amplitude XY pulse train on one site. Section `i` plays
/// `H = amplitude · (cos θᵢ σˣ + sin θᵢ σʸ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub site: usize,
    pub amplitude: f64,
    pub dt_section: f64,
    pub phases: Vec<f64>,
}

impl PulseSchedule {
    pub fn sections(&self) -> impl Iterator<Item = PulseSection> + '_ {
        self.phases
            .iter()
            .enumerate()
            .map(|(i, &phase)| PulseSection {
                index: i,
                start: i as f64 * self.dt_section,
                duration: self.dt_section,
                amplitude: self.amplitude,
                phase,
            })
    }

    /// Resonant Rabi frequency of the played pulses in the
    /// `H = (Ω/2)(cos θ σˣ + sin θ σʸ)` convention, i.e. `2·amplitude`.
    pub fn rabi_frequency(&self) -> f64 {
        2.0 * self.amplitude
    }

    /// Dissipation rate reproduced by the schedule, `γ = amplitude²·Δt`.
    pub fn gamma(&self) -> f64 {
        self.amplitude * self.amplitude * self.dt_section
    }

    /// Same phases played at another amplitude.
    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        Self {
            amplitude,
            ..self.clone()
        }
    }

    /// Hamiltonian of `section` embedded in `n_qubits`.
    pub fn hamiltonian(&self, section: usize, n_qubits: usize) -> Result<LinearOperator> {
        let theta = *self.phases.get(section).ok_or_else(|| {
            Error::InvalidArgument(format!("section {section} beyond the schedule"))
        })?;
        let x = site_op(self.site, Axis::X, n_qubits)?;
        let y = site_op(self.site, Axis::Y, n_qubits)?;
        Ok(x.scale_real(self.amplitude * theta.cos())
            .add(&y.scale_real(self.amplitude * theta.sin())))
    }
}

/// One schedule per dissipative site, amplitude `√(γ/Δt)`.
pub fn to_pulse_schedule(real: &NoiseRealization, gamma: f64) -> Result<Vec<PulseSchedule>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    let amplitude = (gamma / real.dt_section).sqrt();
    Ok(real
        .sites
        .iter()
        .enumerate()
        .map(|(k, &site)| PulseSchedule {
            site,
            amplitude,
            dt_section: real.dt_section,
            phases: (0..real.n_sections)
                .map(|i| pulse_phase(real.eta(i, k)))
                .collect(),
        })
        .collect())
}

/// Integration step used by [`rabi_curve`].
const RABI_DT: f64 = 1e-4;

/// Excited population after a resonant drive `H = (Ω/2)(cos θ σˣ + sin θ σʸ)`
/// of each duration, starting from `|g⟩`.
pub fn rabi_curve(omega: f64, theta: f64, durations: &[f64]) -> Result<Vec<f64>> {
    let h = site_op(1, Axis::X, 1)?
        .scale_real(0.5 * omega * theta.cos())
        .add(&site_op(1, Axis::Y, 1)?.scale_real(0.5 * omega * theta.sin()));
    durations
        .iter()
        .map(|&t| {
            if t < 0.0 {
                return Err(Error::InvalidArgument(format!("negative duration {t}")));
            }
            if t == 0.0 {
                return Ok(0.0);
            }
            let n = ((t / RABI_DT).ceil() as usize).max(1);
            let grid = TimeGrid::new(0.0, t / n as f64, n, n)?;
            let out = evolve_state(&h, &StateVector::ground(1), &grid)?;
            Ok(out[1].amplitudes()[1].norm_sqr())
        })
        .collect()
}

/// Fits `P_e(T) = sin²(ΩT/2)` (free amplitude) and returns `Ω`.
pub fn fit_rabi_frequency(durations: &[f64], populations: &[f64], omega_max: f64) -> Result<f64> {
    Ok(2.0 * fit_sine_squared(durations, populations, 0.5 * omega_max)?.omega)
}

/// Calibrated rate for a measured Rabi frequency: the pulse amplitude is
/// `Ω/2` and `γ = amplitude²·Δt`.
pub fn gamma_from_rabi_frequency(rabi_frequency: f64, dt_section: f64) -> f64 {
    (0.5 * rabi_frequency).powi(2) * dt_section
}

/// Section rotation: eigenphase of `exp(−iHΔt)` for the noise drive, `√(γΔt)`.
pub fn section_eigenphase(gamma: f64, dt_section: f64) -> f64 {
    (gamma * dt_section).sqrt()
}

/// Converts an `*_over_2pi` frequency in MHz to rad/μs.
pub fn angular_from_mhz(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_noise(42, 8, &[1], 0.0075).unwrap();
        let b = sample_noise(42, 8, &[1], 0.0075).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_noise(43, 8, &[1], 0.0075).unwrap());
        assert!(a.as_slice().iter().all(|&e| e == 1 || e == -1));
    }

    #[test]
    fn combo_round_trip() {
        let r = sample_noise(7, 20, &[2, 4], 0.01).unwrap();
        for s in 0..20 {
            let signs = combo_signs(r.combo(s), 2);
            assert_eq!(signs, vec![r.eta(s, 0), r.eta(s, 1)]);
        }
    }

    #[test]
    fn noise_operator_norm() {
        let r = NoiseRealization {
            eta: vec![1, -1],
            n_sections: 1,
            dt_section: 0.0075,
            seed: 0,
            sites: vec![1],
        };
        let h = noise_hamiltonian(&r, 0, 1.0, 1, 1).unwrap();
        assert!(h.is_hermitian());
        let ev = h.to_dense().symmetric_eigenvalues();
        let top = ev.iter().cloned().fold(f64::MIN, f64::max);
        assert!((top - (1.0f64 / 0.0075).sqrt()).abs() < 1e-12);
        assert!((top - 11.547005383792516).abs() < 1e-9);
        assert_eq!(noise_hamiltonian(&r, 0, 0.0, 1, 1).unwrap().nnz(), 0);
        assert!((section_eigenphase(1.0, 0.0075) - 0.08660254037844387).abs() < 1e-15);
    }

    #[test]
    fn schedule_phases_and_amplitude() {
        assert_eq!(pulse_phase((1, 1)), PI / 4.0);
        assert_eq!(pulse_phase((-1, -1)), 5.0 * PI / 4.0);
        for e in [(1, 1), (-1, 1), (-1, -1), (1, -1)] {
            let atan = (f64::from(e.1)).atan2(f64::from(e.0)).rem_euclid(2.0 * PI);
            assert!((pulse_phase(e) - atan).abs() < 1e-15);
        }
        let r = sample_noise(1, 50, &[1], 0.0075).unwrap();
        let s = &to_pulse_schedule(&r, 1.0).unwrap()[0];
        assert!((s.amplitude / (2.0 * PI) - 1.8378).abs() < 1e-3);
        assert!((s.gamma() - 1.0).abs() < 1e-12);
        for (k, sec) in s.sections().enumerate() {
            let played = s.hamiltonian(k, 1).unwrap();
            let direct = noise_hamiltonian(&r, k, 1.0, 1, 1).unwrap();
            assert!((played.to_dense() - direct.to_dense()).camax() < 1e-12);
            assert_eq!(sec.amplitude, s.amplitude);
        }
    }

    #[test]
    fn rabi_curve_and_fit() {
        let omega = 2.0 * PI;
        let p = rabi_curve(omega, 0.0, &[0.0, 0.5]).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 1.0).abs() < 1e-9);
        let ts: Vec<f64> = (0..60).map(|k| k as f64 * 0.02).collect();
        let pe = rabi_curve(omega, 0.3, &ts).unwrap();
        let fit = fit_rabi_frequency(&ts, &pe, 40.0).unwrap();
        assert!((fit / omega - 1.0).abs() < 1e-3);
    }
}
