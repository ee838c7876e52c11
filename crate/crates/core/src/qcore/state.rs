use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{pauli::site_mask, LinearOperator};
use crate::{Error, Result};

pub const NORM_TOL: f64 = 1e-9;

/// Pure state of an `n_qubits` register; amplitudes follow the basis
/// convention of [`crate::qcore::pauli`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes after checking the length and unit norm.
    pub fn new(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument(
                "register needs at least one qubit".into(),
            ));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        let norm = l2_norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(n_qubits: usize, mut amps: Vec<C64>) -> Result<Self> {
        let norm = l2_norm(&amps);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(n_qubits, amps)
    }

    /// Product state with every qubit in `|g⟩`.
    pub fn ground(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// Product state with the listed sites excited, all others ground.
    pub fn excited_sites(n_qubits: usize, sites: &[usize]) -> Result<Self> {
        let mut index = 0;
        for &s in sites {
            super::pauli::check_site(s, n_qubits)?;
            index |= site_mask(s, n_qubits);
        }
        Ok(Self::basis(n_qubits, index))
    }

    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `⟨n_j⟩` for every site, ordered 1..=L.
    pub fn site_occupations(&self) -> Vec<f64> {
        occupations(self.n_qubits, self.amps.iter().map(|a| a.norm_sqr()))
    }

    pub fn to_density(&self) -> DensityOperator {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityOperator {
            n_qubits: self.n_qubits,
            matrix: &v * v.adjoint(),
        }
    }
}

pub(crate) fn l2_norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn occupations(n_qubits: usize, probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; n_qubits];
    for (b, p) in probs.enumerate() {
        for (j, o) in out.iter_mut().enumerate() {
            if b & site_mask(j + 1, n_qubits) != 0 {
                *o += p;
            }
        }
    }
    out
}

pub const DENSITY_HERMITIAN_TOL: f64 = 1e-9;
pub const DENSITY_TRACE_TOL: f64 = 1e-9;
pub const DENSITY_MIN_EIGENVALUE: f64 = -1e-8;

/// Mixed state: Hermitian, unit trace, positive semidefinite within the
/// module tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let rho = Self::unchecked(n_qubits, matrix)?;
        rho.validate(DENSITY_MIN_EIGENVALUE)?;
        Ok(rho)
    }

    /// `I / 2^L`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            n_qubits,
            matrix: DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0),
        }
    }

    pub(crate) fn unchecked(n_qubits: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let d = 1usize << n_qubits;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows(),
            });
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Checks Hermiticity, trace and `λ_min ≥ min_eigenvalue`.
    pub fn validate(&self, min_eigenvalue: f64) -> Result<()> {
        let defect = (&self.matrix - self.matrix.adjoint()).camax();
        if defect > DENSITY_HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "Hermiticity defect {defect:e}"
            )));
        }
        let tr = self.matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let lmin = self.min_eigenvalue();
        if lmin < min_eigenvalue {
            return Err(Error::InvalidDensity(format!(
                "minimum eigenvalue {lmin:e}"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn site_occupations(&self) -> Vec<f64> {
        occupations(
            self.n_qubits,
            (0..self.dim()).map(|b| self.matrix[(b, b)].re),
        )
    }
}

/// Anything an observable can be evaluated on.
pub trait QuantumState {
    fn n_qubits(&self) -> usize;
    /// Raw `⟨A⟩`, possibly with an imaginary residue.
    fn raw_expectation(&self, op: &LinearOperator) -> C64;
}

impl QuantumState for StateVector {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn raw_expectation(&self, op: &LinearOperator) -> C64 {
        op.sandwich(&self.amps)
    }
}

impl QuantumState for DensityOperator {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn raw_expectation(&self, op: &LinearOperator) -> C64 {
        op.trace_with(&self.matrix)
    }
}

/// Largest imaginary residue tolerated by [`expectation`].
pub const EXPECTATION_IMAG_TOL: f64 = 1e-9;

/// `⟨ψ|A|ψ⟩` or `Tr(Aρ)` for Hermitian `A`.
pub fn expectation<S: QuantumState + ?Sized>(op: &LinearOperator, state: &S) -> Result<f64> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(op.hermitian_defect()));
    }
    let d = 1usize << state.n_qubits();
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: op.dim(),
        });
    }
    let v = state.raw_expectation(op);
    if v.im.abs() > EXPECTATION_IMAG_TOL * v.re.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "expectation has imaginary residue {:e}",
            v.im
        )));
    }
    Ok(v.re)
}
