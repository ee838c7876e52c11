//! XX chains, their Floquet-engineered lab-frame realization, and qubit
//! decoherence channels.

mod bessel;
mod floquet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::qcore::{pauli_string, site_mask, site_op, Axis, Jump, LinearOperator};
use crate::{Error, Result};

pub use bessel::bessel_j;
pub use floquet::{
    effective_couplings, lab_frame_hamiltonian, lab_frame_model, lab_frame_populations,
    nnn_suppression_metric, solve_symmetric_amplitudes, BondCoupling, CouplingReport,
    FloquetDeviceSpec, Modulation, Tone,
};

/// Seed of the disordered baseline couplings.
pub const BASELINE_SEED: u64 = 20_240_517;
/// Relative NN disorder of the baseline.
pub const BASELINE_DISORDER: f64 = 0.05;

/// NN couplings `j[i]` on bond `(i+1, i+2)` and NNN couplings `j2[i]` on
/// `(i+1, i+3)`, all in rad/μs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub j: Vec<f64>,
    pub j2: Vec<f64>,
}

impl ChainSpec {
    pub fn new(n_sites: usize, j: Vec<f64>, j2: Vec<f64>) -> Result<Self> {
        let spec = Self { n_sites, j, j2 };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform NN coupling, no NNN.
    pub fn uniform(n_sites: usize, j: f64) -> Result<Self> {
        Self::new(
            n_sites,
            vec![j; n_sites.saturating_sub(1)],
            vec![0.0; n_sites.saturating_sub(2)],
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidArgument(
                "a chain needs at least two sites".into(),
            ));
        }
        if self.j.len() != self.n_sites - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites - 1,
                got: self.j.len(),
            });
        }
        if self.j2.len() != self.n_sites - 2 {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites - 2,
                got: self.j2.len(),
            });
        }
        if self.j.iter().chain(&self.j2).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("couplings must be finite".into()));
        }
        Ok(())
    }

    /// Odd length, as required by the center-site constructions.
    pub fn require_odd(&self) -> Result<()> {
        if self.n_sites % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "chain length {} must be odd",
                self.n_sites
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> usize {
        self.n_sites / 2 + 1
    }

    /// Palindromic NN and NNN couplings within `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        palindromic(&self.j, tol) && palindromic(&self.j2, tol)
    }

    /// Sets the NNN bond between the two center-adjacent sites.
    pub fn with_center_nnn(mut self, j2: f64) -> Result<Self> {
        self.require_odd()?;
        if self.n_sites < 3 {
            return Err(Error::InvalidArgument("no center NNN bond".into()));
        }
        let c = self.center();
        self.j2[c - 2] = j2;
        Ok(self)
    }

    /// Static device baseline: NN couplings `j·(1 + δ)` with `δ` uniform in
    /// `±disorder`, drawn from `seed`, and every NNN equal to `j2`.
    pub fn disordered_baseline(
        n_sites: usize,
        j: f64,
        disorder: f64,
        j2: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let nn = (0..n_sites.saturating_sub(1))
            .map(|_| j * (1.0 + rng.gen_range(-disorder..=disorder)))
            .collect();
        Self::new(n_sites, nn, vec![j2; n_sites.saturating_sub(2)])
    }
}

fn palindromic(v: &[f64], tol: f64) -> bool {
    v.iter()
        .zip(v.iter().rev())
        .all(|(a, b)| (a - b).abs() <= tol)
}

/// `σ_a⁺σ_b⁻ + σ_a⁻σ_b⁺`.
pub(crate) fn hopping(a: usize, b: usize, n: usize) -> Result<LinearOperator> {
    let p = pauli_string(&[(a, Axis::Plus), (b, Axis::Minus)], n)?;
    Ok(p.add(&p.adjoint()))
}

/// `Σ J_{i,i+1}(σ_i⁺σ_{i+1}⁻ + h.c.) + Σ J_{i,i+2}(σ_i⁺σ_{i+2}⁻ + h.c.)`.
pub fn xx_hamiltonian(spec: &ChainSpec) -> Result<LinearOperator> {
    spec.validate()?;
    let n = spec.n_sites;
    let mut h = LinearOperator::zeros(1 << n);
    for (i, &j) in spec.j.iter().enumerate() {
        if j != 0.0 {
            h = h.add(&hopping(i + 1, i + 2, n)?.scale_real(j));
        }
    }
    for (i, &j) in spec.j2.iter().enumerate() {
        if j != 0.0 {
            h = h.add(&hopping(i + 1, i + 3, n)?.scale_real(j));
        }
    }
    Ok(h)
}

/// Permutation mapping site `j` to `L + 1 − j`.
pub fn reflection_operator(n_sites: usize) -> LinearOperator {
    let dim = 1usize << n_sites;
    LinearOperator::from_triplets(
        dim,
        (0..dim).map(|b| {
            let r = (1..=n_sites)
                .filter(|&j| b & site_mask(j, n_sites) != 0)
                .fold(0, |acc, j| acc | site_mask(n_sites + 1 - j, n_sites));
            (r, b, num_complex::Complex64::new(1.0, 0.0))
        }),
    )
}

/// Per-qubit channels: `σ⁻` at `1/T1` and `σᶻ` at `1/(2Tφ)`, so that
/// coherences decay at `1/Tφ` from dephasing alone. Infinite times add
/// nothing.
pub fn decoherence_jumps(t1: &[f64], tphi: &[f64], n_qubits: usize) -> Result<Vec<Jump>> {
    if t1.len() != n_qubits || tphi.len() != n_qubits {
        return Err(Error::DimensionMismatch {
            expected: n_qubits,
            got: t1.len().min(tphi.len()),
        });
    }
    let mut out = Vec::new();
    for (q, (&a, &b)) in t1.iter().zip(tphi).enumerate() {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "T1 and Tphi must be positive (qubit {}: {a}, {b})",
                q + 1
            )));
        }
        if a.is_finite() {
            out.push(Jump::new(site_op(q + 1, Axis::Minus, n_qubits)?, 1.0 / a));
        }
        if b.is_finite() {
            out.push(Jump::new(
                site_op(q + 1, Axis::Z, n_qubits)?,
                1.0 / (2.0 * b),
            ));
        }
    }
    Ok(out)
}

/// Pump/loss on one site plus optional uniform T1/Tφ on every qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationSpec {
    pub site: usize,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub t1: Option<f64>,
    pub tphi: Option<f64>,
}

impl DissipationSpec {
    /// Symmetric pump/loss at rate `gamma` on `site`, no decoherence.
    pub fn symmetric(site: usize, gamma: f64) -> Self {
        Self {
            site,
            gamma_plus: gamma,
            gamma_minus: gamma,
            t1: None,
            tphi: None,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.gamma_plus == self.gamma_minus
    }

    /// `√γ₊σ⁺` and `√γ₋σ⁻` channels on the dissipative site.
    pub fn pump_loss_jumps(&self, n_qubits: usize) -> Result<Vec<Jump>> {
        Ok(vec![
            Jump::new(site_op(self.site, Axis::Plus, n_qubits)?, self.gamma_plus),
            Jump::new(site_op(self.site, Axis::Minus, n_qubits)?, self.gamma_minus),
        ])
    }

    pub fn decoherence(&self, n_qubits: usize) -> Result<Vec<Jump>> {
        let t1 = self.t1.unwrap_or(f64::INFINITY);
        let tphi = self.tphi.unwrap_or(f64::INFINITY);
        decoherence_jumps(&vec![t1; n_qubits], &vec![tphi; n_qubits], n_qubits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::excitation_number;
    use std::f64::consts::PI;

    #[test]
    fn two_site_eigenvalues() {
        let j = 2.0 * PI * 11.0;
        let h = xx_hamiltonian(&ChainSpec::uniform(2, j).unwrap()).unwrap();
        // Single-excitation block is [[0, J], [J, 0]].
        assert_eq!(h.get(0b10, 0b01).re, j);
        let ev = h.to_dense().symmetric_eigenvalues();
        let mut v: Vec<f64> = ev.iter().cloned().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((v[0] + j).abs() < 1e-9 && (v[3] - j).abs() < 1e-9);
    }

    #[test]
    fn reflection_and_number_commute() {
        let spec = ChainSpec::new(5, vec![1.0, 2.0, 2.0, 1.0], vec![0.0, 0.3, 0.0]).unwrap();
        assert!(spec.is_symmetric(0.0));
        let h = xx_hamiltonian(&spec).unwrap();
        let r = reflection_operator(5);
        assert!(h.commutator(&r).max_abs() <= 1e-12);
        assert!(h.commutator(&excitation_number(5)).max_abs() <= 1e-12);
        let bad = ChainSpec::new(5, vec![1.0, 2.0, 2.0, 1.5], vec![0.0; 3]).unwrap();
        assert!(!bad.is_symmetric(1e-12));
        assert!(xx_hamiltonian(&bad).unwrap().commutator(&r).max_abs() > 1e-6);
    }

    #[test]
    fn zero_couplings_give_zero() {
        let spec = ChainSpec::new(3, vec![0.0; 2], vec![0.0]).unwrap();
        assert_eq!(xx_hamiltonian(&spec).unwrap().nnz(), 0);
    }

    #[test]
    fn baseline_is_reproducible_and_bounded() {
        let j = 2.0 * PI * 11.0;
        let a = ChainSpec::disordered_baseline(9, j, 0.05, 2.0 * PI, BASELINE_SEED).unwrap();
        let b = ChainSpec::disordered_baseline(9, j, 0.05, 2.0 * PI, BASELINE_SEED).unwrap();
        assert_eq!(a, b);
        assert!(a.j.iter().all(|x| (x / j - 1.0).abs() <= 0.05));
        assert!(!a.is_symmetric(1e-9));
    }

    #[test]
    fn infinite_times_give_no_channels() {
        let inf = vec![f64::INFINITY; 3];
        assert!(decoherence_jumps(&inf, &inf, 3).unwrap().is_empty());
        assert!(decoherence_jumps(&[0.0], &[1.0], 1).is_err());
        assert_eq!(
            decoherence_jumps(&[30.0; 2], &[20.0; 2], 2).unwrap().len(),
            4
        );
    }
}
