use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::qcore::{check_site, site_mask, LinearOperator, StateVector};
use crate::{Error, Result};

/// Relative phase χ left by `x(a)` followed by `half_swap(a, b)`:
/// `(|e_a g_b⟩ + e^{iχ}|g_a e_b⟩)/√2`.
pub const HALF_SWAP_PHASE: f64 = FRAC_PI_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "gate")]
pub enum Gate {
    /// `exp(−iσ^zθ/2)`.
    Rz {
        theta: f64,
        site: usize,
    },
    X {
        site: usize,
    },
    /// `exp(i(π/4)(σ_a⁺σ_b⁻ + h.c.))`, the square root of iSWAP.
    HalfSwap {
        a: usize,
        b: usize,
    },
    /// `exp(i(π/2)(σ_a⁺σ_b⁻ + h.c.))`.
    ISwap {
        a: usize,
        b: usize,
    },
}

/// Exchange rotation by `angle` on the single-excitation block of `(a, b)`.
fn exchange(a: usize, b: usize, angle: f64, n: usize) -> Result<LinearOperator> {
    check_site(a, n)?;
    check_site(b, n)?;
    if a == b {
        return Err(Error::DuplicateSite(a));
    }
    let (ma, mb) = (site_mask(a, n), site_mask(b, n));
    let (c, s) = (C64::new(angle.cos(), 0.0), C64::new(0.0, angle.sin()));
    let dim = 1usize << n;
    Ok(LinearOperator::from_triplets(
        dim,
        (0..dim).flat_map(|i| {
            let single = ((i & ma) != 0) != ((i & mb) != 0);
            if single {
                vec![(i, i, c), (i ^ ma ^ mb, i, s)]
            } else {
                vec![(i, i, C64::new(1.0, 0.0))]
            }
        }),
    ))
}

pub fn gate_operator(gate: Gate, n_qubits: usize) -> Result<LinearOperator> {
    let dim = 1usize << n_qubits;
    match gate {
        Gate::Rz { theta, site } => {
            check_site(site, n_qubits)?;
            let m = site_mask(site, n_qubits);
            let d: Vec<C64> = (0..dim)
                .map(|i| {
                    let z = if i & m != 0 { 1.0 } else { -1.0 };
                    C64::from_polar(1.0, -0.5 * theta * z)
                })
                .collect();
            Ok(LinearOperator::diagonal(&d))
        }
        Gate::X { site } => {
            check_site(site, n_qubits)?;
            let m = site_mask(site, n_qubits);
            Ok(LinearOperator::from_triplets(
                dim,
                (0..dim).map(|i| (i ^ m, i, C64::new(1.0, 0.0))),
            ))
        }
        Gate::HalfSwap { a, b } => exchange(a, b, FRAC_PI_4, n_qubits),
        Gate::ISwap { a, b } => exchange(a, b, FRAC_PI_2, n_qubits),
    }
}

pub fn apply_gate(gate: Gate, state: &StateVector) -> Result<StateVector> {
    let u = gate_operator(gate, state.n_qubits())?;
    StateVector::new(state.n_qubits(), u.apply(state.amplitudes()))
}

/// `x(c−1)`, `half_swap(c−1, c+1)`, then `rz(χ − φ)` on `c+1`, which lands
/// on `|Ψ(φ)⟩` up to a global phase.
pub fn bell_prep_circuit(n_sites: usize, phi: f64) -> Result<StateVector> {
    if n_sites < 3 || n_sites % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "Bell preparation needs an odd chain of at least 3 sites, got {n_sites}"
        )));
    }
    let c = n_sites / 2 + 1;
    [
        Gate::X { site: c - 1 },
        Gate::HalfSwap { a: c - 1, b: c + 1 },
        Gate::Rz {
            theta: HALF_SWAP_PHASE - phi,
            site: c + 1,
        },
    ]
    .into_iter()
    .try_fold(StateVector::ground(n_sites), |psi, g| apply_gate(g, &psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::bell_chain_state;
    use std::f64::consts::PI;

    fn unitarity_defect(u: &LinearOperator) -> f64 {
        u.adjoint()
            .matmul(u)
            .sub(&LinearOperator::identity(u.dim()))
            .max_abs()
    }

    #[test]
    fn gates_are_unitary() {
        for g in [
            Gate::Rz {
                theta: 0.7,
                site: 2,
            },
            Gate::X { site: 1 },
            Gate::HalfSwap { a: 1, b: 3 },
            Gate::ISwap { a: 3, b: 2 },
        ] {
            assert!(unitarity_defect(&gate_operator(g, 3).unwrap()) <= 1e-12);
        }
        assert!(gate_operator(Gate::ISwap { a: 2, b: 2 }, 3).is_err());
        assert!(gate_operator(Gate::X { site: 4 }, 3).is_err());
    }

    #[test]
    fn rz_full_turn_is_minus_identity() {
        let u = gate_operator(
            Gate::Rz {
                theta: 2.0 * PI,
                site: 1,
            },
            2,
        )
        .unwrap();
        assert!(u.add(&LinearOperator::identity(4)).max_abs() < 1e-12);
    }

    #[test]
    fn iswap_and_half_swap() {
        let eg = StateVector::excited_sites(2, &[1]).unwrap();
        let out = apply_gate(Gate::ISwap { a: 1, b: 2 }, &eg).unwrap();
        assert!((out.amplitudes()[0b01] - C64::new(0.0, 1.0)).norm() < 1e-15);
        let half = apply_gate(
            Gate::HalfSwap { a: 1, b: 2 },
            &apply_gate(Gate::X { site: 1 }, &StateVector::ground(2)).unwrap(),
        )
        .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((half.amplitudes()[0b10] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((half.amplitudes()[0b01] - C64::from_polar(s, HALF_SWAP_PHASE)).norm() < 1e-15);
    }

    #[test]
    fn circuit_prepares_bell_pair() {
        for n in [3, 5, 9] {
            for phi in [0.0, PI / 2.0, PI] {
                let out = bell_prep_circuit(n, phi).unwrap();
                assert!(out.fidelity(&bell_chain_state(n, phi).unwrap()) >= 0.999);
            }
            let a = bell_prep_circuit(n, 0.0).unwrap();
            let b = bell_prep_circuit(n, PI).unwrap();
            assert!(a.inner(&b).norm() < 1e-12);
        }
    }
}
