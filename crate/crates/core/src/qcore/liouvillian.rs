//! Dense superoperators and their null spaces.
//!
//! Vectorization is row-major: `vec(ρ)[i·d + j] = ρ[i, j]`, so that
//! `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::evolve::LindbladModel;
use super::LinearOperator;
use crate::{Error, Result};

/// Largest register accepted by [`liouvillian_matrix`].
pub const MAX_SUPEROPERATOR_QUBITS: usize = 6;
/// Relative singular-value cutoff for the null space.
pub const NULL_SPACE_RTOL: f64 = 1e-10;

pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    let d = rho.nrows();
    DVector::from_iterator(d * d, (0..d).flat_map(|i| (0..d).map(move |j| rho[(i, j)])))
}

pub fn unvectorize(v: &DVector<C64>) -> DMatrix<C64> {
    let d = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(d * d, v.len(), "vector length is not a square");
    DMatrix::from_fn(d, d, |i, j| v[i * d + j])
}

/// Superoperator `M` with `vec(dρ/dt) = M·vec(ρ)`.
pub fn liouvillian_matrix(model: &LindbladModel) -> Result<LinearOperator> {
    let n = model.n_qubits();
    if n > MAX_SUPEROPERATOR_QUBITS {
        return Err(Error::DimensionGuard {
            n_qubits: n,
            limit: MAX_SUPEROPERATOR_QUBITS,
        });
    }
    let h = model.hamiltonian().static_operator()?;
    let d = 1usize << n;
    let id = LinearOperator::identity(d);
    let mi = C64::new(0.0, -1.0);
    let mut m = h.kron(&id).sub(&id.kron(&h.transpose())).scale(mi);
    for j in model.jumps().iter().filter(|j| j.rate > 0.0) {
        let l = &j.op;
        let ldl = l.adjoint().matmul(l);
        let term = l
            .kron(&l.conj())
            .sub(&ldl.kron(&id).scale_real(0.5))
            .sub(&id.kron(&ldl.transpose()).scale_real(0.5));
        m = m.add(&term.scale_real(j.rate));
    }
    Ok(m)
}

/// Null space of a Liouvillian.
#[derive(Clone, Debug)]
pub struct SteadyStates {
    /// Orthonormal (Hilbert–Schmidt) basis of right null vectors, as operators.
    pub basis: Vec<DMatrix<C64>>,
    /// Orthonormal basis of left null vectors (conserved quantities), as
    /// operators `X` with `Tr(X† dρ/dt) = 0`.
    pub conserved: Vec<DMatrix<C64>>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
}

impl SteadyStates {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Infinite-time limit of `ρ0`: the oblique projection onto the null
    /// space along the range of the Liouvillian.
    pub fn project(&self, rho0: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let k = self.basis.len();
        let n = rho0.nrows() * rho0.ncols();
        let v0 = DMatrix::from_fn(n, k, |r, c| vectorize(&self.basis[c])[r]);
        let u0 = DMatrix::from_fn(n, k, |r, c| vectorize(&self.conserved[c])[r]);
        let overlap = u0.adjoint() * &v0;
        let inv = overlap.try_inverse().ok_or_else(|| {
            Error::InvalidArgument("left and right null spaces are not dual".into())
        })?;
        let coeffs = inv * (u0.adjoint() * vectorize(rho0));
        Ok(unvectorize(&(v0 * coeffs)))
    }
}

/// Null space from a full SVD of the dense superoperator. Singular values
/// below `1e-10 · σ_max` count as zero; any value within a factor 10 of that
/// cutoff is reported as ambiguous.
pub fn steady_states(liouvillian: &LinearOperator) -> Result<SteadyStates> {
    let n = liouvillian.dim();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n {
        return Err(Error::InvalidArgument(format!(
            "superoperator dimension {n} is not a square"
        )));
    }
    let m = liouvillian.to_dense();
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        // M = 0: everything is stationary.
        let basis: Vec<_> = (0..n)
            .map(|k| {
                let mut e = DVector::zeros(n);
                e[k] = C64::new(1.0, 0.0);
                unvectorize(&e)
            })
            .collect();
        return Ok(SteadyStates {
            conserved: basis.clone(),
            basis,
            singular_values: sv,
            threshold: 0.0,
        });
    }
    let threshold = NULL_SPACE_RTOL * smax;
    if let Some(&s) = sv
        .iter()
        .find(|&&s| s > threshold / 10.0 && s < threshold * 10.0)
    {
        return Err(Error::AmbiguousCutoff {
            value: s,
            threshold,
        });
    }
    let mut basis = Vec::new();
    let mut conserved = Vec::new();
    for (k, &s) in sv.iter().enumerate() {
        if s < threshold {
            let right = v_t.row(k).adjoint();
            basis.push(unvectorize(&right));
            conserved.push(unvectorize(&u.column(k).into_owned()));
        }
    }
    Ok(SteadyStates {
        basis,
        conserved,
        singular_values: sv,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::evolve::{lindblad_rhs, Jump};
    use crate::qcore::{site_op, Axis, Hamiltonian};

    fn thermal(gamma: f64) -> LindbladModel {
        LindbladModel::new(
            Hamiltonian::zero(1),
            vec![
                Jump::new(site_op(1, Axis::Plus, 1).unwrap(), gamma),
                Jump::new(site_op(1, Axis::Minus, 1).unwrap(), gamma),
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_qubit_spectrum() {
        // M is normal here, so singular values are |eigenvalues|: coherences
        // decay at γ, the population imbalance at 2γ.
        let m = liouvillian_matrix(&thermal(1.0)).unwrap().to_dense();
        let sv = m.singular_values();
        let mut svs: Vec<f64> = sv.iter().cloned().collect();
        svs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (s, want) in svs.iter().zip([0.0, 1.0, 1.0, 2.0]) {
            assert!((s - want).abs() < 1e-12, "{svs:?}");
        }
    }

    #[test]
    fn matches_rhs_and_is_trace_preserving() {
        let model = thermal(0.7);
        let m = liouvillian_matrix(&model).unwrap();
        let rho = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.6, 0.0),
                C64::new(0.1, 0.2),
                C64::new(0.1, -0.2),
                C64::new(0.4, 0.0),
            ],
        );
        let lhs = unvectorize(&DVector::from_vec(m.apply(vectorize(&rho).as_slice())));
        assert!((lhs - lindblad_rhs(&model, 0.0, &rho)).camax() < 1e-12);
        let id = vectorize(&DMatrix::identity(2, 2));
        let left = m.adjoint().apply(id.as_slice());
        assert!(left.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn zero_model_gives_zero_matrix() {
        let model = LindbladModel::new(Hamiltonian::zero(2), vec![]).unwrap();
        assert_eq!(liouvillian_matrix(&model).unwrap().nnz(), 0);
    }

    #[test]
    fn unique_steady_state_is_maximally_mixed() {
        let ss = steady_states(&liouvillian_matrix(&thermal(1.0)).unwrap()).unwrap();
        assert_eq!(ss.dimension(), 1);
        let rho = ss
            .project(&DMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(1.0, 0.0),
                    C64::new(0.0, 0.0),
                    C64::new(0.0, 0.0),
                    C64::new(0.0, 0.0),
                ],
            ))
            .unwrap();
        let half = DMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((rho - half).camax() < 1e-12);
    }

    #[test]
    fn guard_rejects_large_registers() {
        let model = LindbladModel::new(Hamiltonian::zero(7), vec![]).unwrap();
        assert!(matches!(
            liouvillian_matrix(&model),
            Err(Error::DimensionGuard { .. })
        ));
    }
}
