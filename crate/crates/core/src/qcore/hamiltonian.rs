use num_complex::Complex64 as C64;

use super::LinearOperator;
use crate::{Error, Result};

/// Scalar time dependence of one Hamiltonian term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coefficient {
    Constant(C64),
    /// `amplitude · sin(angular_frequency · t + phase)`
    Sine {
        amplitude: f64,
        angular_frequency: f64,
        phase: f64,
    },
    /// `amplitude · exp(i · angular_frequency · t)`
    Rotating {
        amplitude: C64,
        angular_frequency: f64,
    },
}

impl Coefficient {
    pub fn at(&self, t: f64) -> C64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Sine {
                amplitude,
                angular_frequency,
                phase,
            } => C64::new(amplitude * (angular_frequency * t + phase).sin(), 0.0),
            Coefficient::Rotating {
                amplitude,
                angular_frequency,
            } => amplitude * C64::from_polar(1.0, angular_frequency * t),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            Coefficient::Constant(_) => true,
            Coefficient::Sine {
                amplitude,
                angular_frequency,
                ..
            } => amplitude == 0.0 || angular_frequency == 0.0,
            Coefficient::Rotating {
                amplitude,
                angular_frequency,
            } => amplitude == C64::new(0.0, 0.0) || angular_frequency == 0.0,
        }
    }
}

/// Anything that can act as `H(t)` on a state vector.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    /// `out += alpha · H(t)·x`.
    fn apply_add(&self, t: f64, alpha: C64, x: &[C64], out: &mut [C64]);
}

impl Generator for LinearOperator {
    fn dim(&self) -> usize {
        LinearOperator::dim(self)
    }

    fn apply_add(&self, _t: f64, alpha: C64, x: &[C64], out: &mut [C64]) {
        LinearOperator::apply_add(self, alpha, x, out)
    }
}

/// `H(t) = Σ_k c_k(t) A_k`.
///
/// Hermiticity at every `t` is the builder's responsibility (pair each
/// rotating term with its conjugate); [`Hamiltonian::check_hermitian_at`]
/// verifies it.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<(Coefficient, LinearOperator)>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_static(n_qubits: usize, op: LinearOperator) -> Self {
        let mut h = Self::new(n_qubits);
        h.push(Coefficient::Constant(C64::new(1.0, 0.0)), op);
        h
    }

    pub fn zero(n_qubits: usize) -> Self {
        Self::new(n_qubits)
    }

    pub fn push(&mut self, coefficient: Coefficient, op: LinearOperator) {
        assert_eq!(op.dim(), 1 << self.n_qubits, "term dimension mismatch");
        self.terms.push((coefficient, op));
    }

    pub fn with_term(mut self, coefficient: Coefficient, op: LinearOperator) -> Self {
        self.push(coefficient, op);
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(Coefficient, LinearOperator)] {
        &self.terms
    }

    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|(c, _)| c.is_constant())
    }

    /// Materializes `H(t)`.
    pub fn at(&self, t: f64) -> LinearOperator {
        let d = 1usize << self.n_qubits;
        LinearOperator::from_triplets(
            d,
            self.terms.iter().flat_map(|(c, op)| {
                let s = c.at(t);
                op.entries().map(move |(r, col, v)| (r, col, s * v))
            }),
        )
    }

    /// The operator of a static Hamiltonian.
    pub fn static_operator(&self) -> Result<LinearOperator> {
        if !self.is_static() {
            return Err(Error::NotStatic);
        }
        Ok(self.at(0.0))
    }

    pub fn check_hermitian_at(&self, t: f64) -> Result<()> {
        let h = self.at(t);
        if !h.is_hermitian() {
            return Err(Error::NotHermitian(h.hermitian_defect()));
        }
        Ok(())
    }

    /// Appends every term of `other`.
    pub fn extend(&mut self, other: &Hamiltonian) {
        assert_eq!(self.n_qubits, other.n_qubits);
        self.terms.extend(other.terms.iter().cloned());
    }
}

impl Generator for Hamiltonian {
    fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn apply_add(&self, t: f64, alpha: C64, x: &[C64], out: &mut [C64]) {
        for (c, op) in &self.terms {
            let s = c.at(t);
            if s != C64::new(0.0, 0.0) {
                op.apply_add(alpha * s, x, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli_string, Axis};

    #[test]
    fn rotating_pair_is_hermitian() {
        let p = pauli_string(&[(1, Axis::Plus), (2, Axis::Minus)], 2).unwrap();
        let h = Hamiltonian::new(2)
            .with_term(
                Coefficient::Rotating {
                    amplitude: C64::new(2.0, 0.0),
                    angular_frequency: 3.0,
                },
                p.clone(),
            )
            .with_term(
                Coefficient::Rotating {
                    amplitude: C64::new(2.0, 0.0),
                    angular_frequency: -3.0,
                },
                p.adjoint(),
            );
        assert!(!h.is_static());
        for t in [0.0, 0.1, 1.7] {
            h.check_hermitian_at(t).unwrap();
        }
    }

    #[test]
    fn apply_matches_materialized() {
        let n = pauli_string(&[(1, Axis::N)], 1).unwrap();
        let h = Hamiltonian::new(1).with_term(
            Coefficient::Sine {
                amplitude: 2.0,
                angular_frequency: 1.0,
                phase: 0.3,
            },
            n,
        );
        let x = vec![C64::new(0.2, 0.0), C64::new(0.5, 0.1)];
        let mut out = vec![C64::default(); 2];
        h.apply_add(0.4, C64::new(1.0, 0.0), &x, &mut out);
        let direct = h.at(0.4).apply(&x);
        assert!((out[1] - direct[1]).norm() < 1e-15);
        assert!(h.static_operator().is_err());
    }
}
