//! Single-qubit operators and their embeddings.
//!
//! Basis convention: qubit 1 is the most significant bit, so basis index `b`
//! has qubit `j` excited iff bit `L − j` of `b` is set. On a single qubit
//! `|g⟩ = |0⟩` and `|e⟩ = |1⟩`, with `σ^z = |e⟩⟨e| − |g⟩⟨g|` and
//! `σ^+ = |e⟩⟨g|`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::LinearOperator;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
    /// `σ^+ = |e⟩⟨g|`
    Plus,
    /// `σ^− = |g⟩⟨e|`
    Minus,
    /// `n = |e⟩⟨e|`
    N,
}

impl Axis {
    /// Image of the single-qubit basis state `bit` as `(new_bit, amplitude)`,
    /// or `None` when annihilated.
    fn act(self, bit: u8) -> Option<(u8, C64)> {
        let one = C64::new(1.0, 0.0);
        match (self, bit) {
            (Axis::X, b) => Some((1 - b, one)),
            // σ^y = −i|e⟩⟨g| + i|g⟩⟨e|
            (Axis::Y, 0) => Some((1, C64::new(0.0, -1.0))),
            (Axis::Y, _) => Some((0, C64::new(0.0, 1.0))),
            (Axis::Z, 0) => Some((0, -one)),
            (Axis::Z, _) => Some((1, one)),
            (Axis::Plus, 0) => Some((1, one)),
            (Axis::Plus, _) => None,
            (Axis::Minus, 0) => None,
            (Axis::Minus, _) => Some((0, one)),
            (Axis::N, 0) => None,
            (Axis::N, _) => Some((1, one)),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Plus => "+",
            Axis::Minus => "-",
            Axis::N => "n",
        };
        f.write_str(s)
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            "+" | "plus" => Ok(Axis::Plus),
            "-" | "−" | "minus" => Ok(Axis::Minus),
            "n" | "N" => Ok(Axis::N),
            other => Err(Error::InvalidArgument(format!("unknown axis {other:?}"))),
        }
    }
}

/// Bit mask of `site` (1-based) in an `n_qubits` register.
#[inline]
pub fn site_mask(site: usize, n_qubits: usize) -> usize {
    1 << (n_qubits - site)
}

pub fn check_site(site: usize, n_qubits: usize) -> Result<()> {
    if site == 0 || site > n_qubits {
        return Err(Error::SiteOutOfRange { site, n_qubits });
    }
    Ok(())
}

/// Tensor product of the named single-qubit operators at distinct sites,
/// identity elsewhere.
pub fn pauli_string(spec: &[(usize, Axis)], n_qubits: usize) -> Result<LinearOperator> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument(
            "register needs at least one qubit".into(),
        ));
    }
    let mut seen = HashSet::new();
    for &(site, _) in spec {
        check_site(site, n_qubits)?;
        if !seen.insert(site) {
            return Err(Error::DuplicateSite(site));
        }
    }
    let dim = 1usize << n_qubits;
    let mut triplets = Vec::with_capacity(dim);
    'basis: for col in 0..dim {
        let mut row = col;
        let mut amp = C64::new(1.0, 0.0);
        for &(site, axis) in spec {
            let mask = site_mask(site, n_qubits);
            let bit = u8::from(row & mask != 0);
            match axis.act(bit) {
                Some((nb, a)) => {
                    row = if nb == 1 { row | mask } else { row & !mask };
                    amp *= a;
                }
                None => continue 'basis,
            }
        }
        triplets.push((row, col, amp));
    }
    Ok(LinearOperator::from_triplets(dim, triplets))
}

/// Single-site shorthand for [`pauli_string`].
pub fn site_op(site: usize, axis: Axis, n_qubits: usize) -> Result<LinearOperator> {
    pauli_string(&[(site, axis)], n_qubits)
}

/// `Σ_j n_j`, the total excitation number.
pub fn excitation_number(n_qubits: usize) -> LinearOperator {
    let dim = 1usize << n_qubits;
    LinearOperator::from_triplets(
        dim,
        (0..dim).map(|b| (b, b, C64::new(b.count_ones() as f64, 0.0))),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::StateVector;

    #[test]
    fn sigma_z_on_ground_is_minus_one() {
        let z = pauli_string(&[(1, Axis::Z)], 1).unwrap();
        let g = StateVector::ground(1);
        assert_eq!(z.sandwich(g.amplitudes()).re, -1.0);
    }

    #[test]
    fn raising_maps_ground_to_excited() {
        let p = pauli_string(&[(1, Axis::Plus)], 1).unwrap();
        let out = p.apply(StateVector::ground(1).amplitudes());
        assert_eq!(out, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
    }

    #[test]
    fn hopping_matrix_element() {
        // ⟨e g| σ_1^+ σ_2^- |g e⟩ = 1; |e g⟩ has qubit 1 excited = index 0b10.
        let op = pauli_string(&[(1, Axis::Plus), (2, Axis::Minus)], 2).unwrap();
        assert_eq!(op.get(0b10, 0b01), C64::new(1.0, 0.0));
        assert_eq!(op.nnz(), 1);
    }

    #[test]
    fn hermitian_flag_follows_axes() {
        assert!(pauli_string(&[(1, Axis::X), (3, Axis::Y)], 3)
            .unwrap()
            .is_hermitian());
        assert!(!pauli_string(&[(2, Axis::Plus)], 3).unwrap().is_hermitian());
        assert!(site_op(2, Axis::N, 3).unwrap().is_hermitian());
    }

    #[test]
    fn pauli_algebra() {
        let x = site_op(1, Axis::X, 1).unwrap();
        let y = site_op(1, Axis::Y, 1).unwrap();
        let z = site_op(1, Axis::Z, 1).unwrap();
        let p = site_op(1, Axis::Plus, 1).unwrap();
        // σ^x σ^y = i σ^z
        let lhs = x.matmul(&y).to_dense();
        let rhs = z.scale(C64::new(0.0, 1.0)).to_dense();
        assert!((lhs - rhs).norm() < 1e-15);
        // σ^+ = (σ^x + iσ^y)/2
        let built = x.add(&y.scale(C64::new(0.0, 1.0))).scale_real(0.5);
        assert!((built.to_dense() - p.to_dense()).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_sites() {
        assert!(matches!(
            pauli_string(&[(0, Axis::X)], 2),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            pauli_string(&[(3, Axis::X)], 2),
            Err(Error::SiteOutOfRange { .. })
        ));
        assert!(matches!(
            pauli_string(&[(1, Axis::X), (1, Axis::Z)], 2),
            Err(Error::DuplicateSite(1))
        ));
    }
}
