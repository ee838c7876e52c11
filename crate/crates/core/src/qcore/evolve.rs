//! Fixed-step RK4 integrators for the Schrödinger and Lindblad equations.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::state::{l2_norm, DensityOperator, StateVector};
use super::{Generator, Hamiltonian, LinearOperator};
use crate::{Error, Result};

/// Largest per-step norm drift tolerated before renormalization.
pub const MAX_STEP_NORM_DRIFT: f64 = 1e-6;
/// Most negative eigenvalue tolerated in a sampled density matrix.
pub const MAX_NEGATIVITY: f64 = -1e-6;

/// Integration grid: `n_steps` steps of `dt` from `t_start`, sampled every
/// `sample_stride` steps (the initial time is always sampled).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_steps: usize,
    sample_stride: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize, sample_stride: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        if sample_stride == 0 || n_steps % sample_stride != 0 {
            return Err(Error::InvalidArgument(format!(
                "sample_stride {sample_stride} must be >= 1 and divide n_steps {n_steps}"
            )));
        }
        Ok(Self {
            t_start,
            dt,
            n_steps,
            sample_stride,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn sample_stride(&self) -> usize {
        self.sample_stride
    }

    pub fn n_samples(&self) -> usize {
        self.n_steps / self.sample_stride + 1
    }

    pub fn t_end(&self) -> f64 {
        self.time_of_step(self.n_steps)
    }

    pub fn time_of_step(&self, step: usize) -> f64 {
        self.t_start + step as f64 * self.dt
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|k| self.time_of_step(k * self.sample_stride))
            .collect()
    }

    pub fn is_sample_step(&self, step: usize) -> bool {
        step % self.sample_stride == 0
    }
}

/// Reusable RK4 stepper for `dψ/dt = −i·G(t)·ψ`, where `G` may be
/// non-Hermitian (effective jump Hamiltonians).
pub(crate) struct SchrodingerRk4 {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl SchrodingerRk4 {
    pub(crate) fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    pub(crate) fn step<G: Generator + ?Sized>(&mut self, g: &G, t: f64, dt: f64, psi: &mut [C64]) {
        let mi = C64::new(0.0, -1.0);
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;

        zero(k1);
        g.apply_add(t, mi, psi, k1);

        axpy_into(tmp, psi, 0.5 * dt, k1);
        zero(k2);
        g.apply_add(t + 0.5 * dt, mi, tmp, k2);

        axpy_into(tmp, psi, 0.5 * dt, k2);
        zero(k3);
        g.apply_add(t + 0.5 * dt, mi, tmp, k3);

        axpy_into(tmp, psi, dt, k3);
        zero(k4);
        g.apply_add(t + dt, mi, tmp, k4);

        let w = dt / 6.0;
        for i in 0..psi.len() {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
        }
    }
}

fn zero(v: &mut [C64]) {
    v.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
}

fn axpy_into(out: &mut [C64], base: &[C64], s: f64, k: &[C64]) {
    for ((o, b), kk) in out.iter_mut().zip(base).zip(k) {
        *o = b + kk * s;
    }
}

/// Renormalizes `psi`, failing if the norm drifted by more than
/// [`MAX_STEP_NORM_DRIFT`].
pub(crate) fn renormalize_checked(psi: &mut [C64], t: f64) -> Result<()> {
    let norm = l2_norm(psi);
    let drift = (norm - 1.0).abs();
    if drift > MAX_STEP_NORM_DRIFT || !norm.is_finite() {
        return Err(Error::StepInstability { t, drift });
    }
    psi.iter_mut().for_each(|a| *a /= norm);
    Ok(())
}

/// RK4 integration of the Schrödinger equation with per-step
/// renormalization. Returns one state per grid sample, starting at `t_start`.
pub fn evolve_state<G: Generator + ?Sized>(
    h: &G,
    psi0: &StateVector,
    grid: &TimeGrid,
) -> Result<Vec<StateVector>> {
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi0.dim(),
            got: h.dim(),
        });
    }
    let n = psi0.n_qubits();
    let mut psi = psi0.amplitudes().to_vec();
    let mut rk = SchrodingerRk4::new(psi.len());
    let mut out = Vec::with_capacity(grid.n_samples());
    out.push(psi0.clone());
    for step in 0..grid.n_steps() {
        let t = grid.time_of_step(step);
        rk.step(h, t, grid.dt(), &mut psi);
        renormalize_checked(&mut psi, t + grid.dt())?;
        if grid.is_sample_step(step + 1) {
            out.push(StateVector::from_raw(n, psi.clone()));
        }
    }
    Ok(out)
}

/// A dissipator channel `rate · D[op]`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub op: LinearOperator,
    pub rate: f64,
}

impl Jump {
    pub fn new(op: LinearOperator, rate: f64) -> Self {
        Self { op, rate }
    }
}

/// Lindblad generator: Hamiltonian plus jump channels with rates.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    hamiltonian: Hamiltonian,
    jumps: Vec<Jump>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Hamiltonian, jumps: Vec<Jump>) -> Result<Self> {
        let d = 1usize << hamiltonian.n_qubits();
        for j in &jumps {
            if j.op.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: j.op.dim(),
                });
            }
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "jump rates must be finite and >= 0, got {}",
                    j.rate
                )));
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    /// `Σ_k rate_k · L_k† L_k`.
    pub fn decay_operator(&self) -> LinearOperator {
        let d = 1usize << self.n_qubits();
        self.jumps
            .iter()
            .filter(|j| j.rate > 0.0)
            .fold(LinearOperator::zeros(d), |acc, j| {
                acc.add(&j.op.adjoint().matmul(&j.op).scale_real(j.rate))
            })
    }
}

/// Cached pieces of the Lindblad right-hand side.
pub(crate) struct LindbladRhs<'a> {
    hamiltonian: &'a Hamiltonian,
    channels: Vec<(f64, LinearOperator, LinearOperator)>,
    decay: LinearOperator,
}

impl<'a> LindbladRhs<'a> {
    pub(crate) fn new(model: &'a LindbladModel) -> Self {
        let channels = model
            .jumps
            .iter()
            .filter(|j| j.rate > 0.0)
            .map(|j| (j.rate, j.op.clone(), j.op.adjoint()))
            .collect();
        Self {
            hamiltonian: &model.hamiltonian,
            channels,
            decay: model.decay_operator(),
        }
    }

    /// `dρ/dt` with an optional extra static Hamiltonian term.
    pub(crate) fn eval(
        &self,
        t: f64,
        rho: &DMatrix<C64>,
        extra: Option<&LinearOperator>,
    ) -> DMatrix<C64> {
        let d = rho.nrows();
        let mut out = DMatrix::zeros(d, d);
        let mi = C64::new(0.0, -1.0);
        for (c, op) in self.hamiltonian.terms() {
            let s = c.at(t);
            if s != C64::new(0.0, 0.0) {
                op.mul_dense_add(mi * s, rho, &mut out);
                op.dense_mul_add(-mi * s, rho, &mut out);
            }
        }
        if let Some(h) = extra {
            h.mul_dense_add(mi, rho, &mut out);
            h.dense_mul_add(-mi, rho, &mut out);
        }
        for (rate, l, ldag) in &self.channels {
            let lr = l.mul_dense(rho);
            ldag.dense_mul_add(C64::new(*rate, 0.0), &lr, &mut out);
        }
        if self.decay.nnz() > 0 {
            self.decay.mul_dense_add(C64::new(-0.5, 0.0), rho, &mut out);
            self.decay.dense_mul_add(C64::new(-0.5, 0.0), rho, &mut out);
        }
        out
    }

    pub(crate) fn rk4_step(
        &self,
        t: f64,
        dt: f64,
        rho: &DMatrix<C64>,
        extra: Option<&LinearOperator>,
    ) -> DMatrix<C64> {
        let k1 = self.eval(t, rho, extra);
        let k2 = self.eval(t + 0.5 * dt, &(rho + &k1 * C64::new(0.5 * dt, 0.0)), extra);
        let k3 = self.eval(t + 0.5 * dt, &(rho + &k2 * C64::new(0.5 * dt, 0.0)), extra);
        let k4 = self.eval(t + dt, &(rho + &k3 * C64::new(dt, 0.0)), extra);
        rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
    }
}

/// Lindblad right-hand side `dρ/dt` at time `t`.
pub fn lindblad_rhs(model: &LindbladModel, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
    LindbladRhs::new(model).eval(t, rho, None)
}

/// Hermitizes a sampled density matrix and checks it against the positivity
/// budget.
pub(crate) fn checked_sample(
    n_qubits: usize,
    rho: &DMatrix<C64>,
    t: f64,
) -> Result<DensityOperator> {
    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let sample = DensityOperator::unchecked(n_qubits, h)?;
    let lmin = sample.min_eigenvalue();
    if lmin < MAX_NEGATIVITY {
        return Err(Error::PositivityViolation {
            t,
            min_eigenvalue: lmin,
        });
    }
    Ok(sample)
}

/// RK4 integration of the Lindblad master equation.
pub fn evolve_density(
    model: &LindbladModel,
    rho0: &DensityOperator,
    grid: &TimeGrid,
) -> Result<Vec<DensityOperator>> {
    if model.n_qubits() != rho0.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            got: 1 << model.n_qubits(),
        });
    }
    let rhs = LindbladRhs::new(model);
    let mut rho = rho0.matrix().clone();
    let mut out = Vec::with_capacity(grid.n_samples());
    out.push(rho0.clone());
    for step in 0..grid.n_steps() {
        let t = grid.time_of_step(step);
        rho = rhs.rk4_step(t, grid.dt(), &rho, None);
        if grid.is_sample_step(step + 1) {
            let t1 = t + grid.dt();
            let sample = checked_sample(rho0.n_qubits(), &rho, t1)?;
            sample.validate(MAX_NEGATIVITY)?;
            out.push(sample);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{expectation, pauli_string, site_op, Axis};
    use std::f64::consts::PI;

    fn single_qubit_thermal(gamma: f64) -> LindbladModel {
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
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 0.0, 10, 1).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 0, 1).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 10, 3).is_err());
        let g = TimeGrid::new(0.0, 0.1, 10, 5).unwrap();
        assert_eq!(g.n_samples(), 3);
        assert!((g.sample_times()[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let psi0 = StateVector::normalized(
            2,
            vec![
                C64::new(1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 10, 5).unwrap();
        let out = evolve_state(&LinearOperator::zeros(4), &psi0, &grid).unwrap();
        assert!(out.iter().all(|s| s == &psi0));
    }

    #[test]
    fn rabi_pi_pulse() {
        let omega = 2.0 * PI;
        let h = site_op(1, Axis::X, 1).unwrap().scale_real(omega / 2.0);
        let grid = TimeGrid::new(0.0, 5e-4, 1000, 100).unwrap();
        let out = evolve_state(&h, &StateVector::ground(1), &grid).unwrap();
        let times = grid.sample_times();
        for (s, t) in out.iter().zip(&times) {
            let pe = s.amplitudes()[1].norm_sqr();
            assert!((pe - (omega * t / 2.0).sin().powi(2)).abs() < 1e-9);
        }
        assert!((out.last().unwrap().amplitudes()[1].norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_site_swap() {
        let j = 2.0 * PI * 11.0;
        let hop = pauli_string(&[(1, Axis::Plus), (2, Axis::Minus)], 2).unwrap();
        let h = hop.add(&hop.adjoint()).scale_real(j);
        let t_swap = PI / (2.0 * j);
        let n = 200;
        let grid = TimeGrid::new(0.0, t_swap / n as f64, n, n).unwrap();
        let psi0 = StateVector::excited_sites(2, &[1]).unwrap();
        let out = evolve_state(&h, &psi0, &grid).unwrap();
        let occ = out[1].site_occupations();
        assert!((occ[1] - 1.0).abs() < 1e-9, "{occ:?}");
    }

    #[test]
    fn step_instability_is_reported() {
        let h = site_op(1, Axis::X, 1).unwrap().scale_real(1000.0);
        let grid = TimeGrid::new(0.0, 0.01, 10, 1).unwrap();
        assert!(matches!(
            evolve_state(&h, &StateVector::ground(1), &grid),
            Err(Error::StepInstability { .. })
        ));
    }

    #[test]
    fn thermal_decay_of_sigma_z() {
        let gamma = 1.0;
        let model = single_qubit_thermal(gamma);
        let rho0 = StateVector::excited_sites(1, &[1]).unwrap().to_density();
        let grid = TimeGrid::new(0.0, 1e-3, 1000, 100).unwrap();
        let out = evolve_density(&model, &rho0, &grid).unwrap();
        let z = site_op(1, Axis::Z, 1).unwrap();
        for (rho, t) in out.iter().zip(grid.sample_times()) {
            let sz = expectation(&z, rho).unwrap();
            assert!((sz - (-2.0 * gamma * t).exp()).abs() < 1e-10);
        }
        let last = expectation(&z, out.last().unwrap()).unwrap();
        assert!((last - 0.1353352832366127).abs() < 1e-9);
    }

    #[test]
    fn maximally_mixed_is_fixed() {
        let model = single_qubit_thermal(1.0);
        let rho0 = DensityOperator::maximally_mixed(1);
        let grid = TimeGrid::new(0.0, 1e-2, 100, 10).unwrap();
        for rho in evolve_density(&model, &rho0, &grid).unwrap() {
            assert!((rho.matrix() - rho0.matrix()).camax() < 1e-14);
        }
    }

    #[test]
    fn converges_to_unpolarized_state() {
        let model = single_qubit_thermal(1.0);
        let z = site_op(1, Axis::Z, 1).unwrap();
        let grid = TimeGrid::new(0.0, 2.5e-3, 1000, 1000).unwrap();
        for sites in [&[][..], &[1][..]] {
            let rho0 = StateVector::excited_sites(1, sites).unwrap().to_density();
            let out = evolve_density(&model, &rho0, &grid).unwrap();
            assert!(expectation(&z, out.last().unwrap()).unwrap().abs() < 0.01);
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let gamma = 1.0;
        let model = single_qubit_thermal(gamma);
        let rho0 = StateVector::excited_sites(1, &[1]).unwrap().to_density();
        let z = site_op(1, Axis::Z, 1).unwrap();
        let err = |n: usize| {
            let grid = TimeGrid::new(0.0, 1.0 / n as f64, n, n).unwrap();
            let out = evolve_density(&model, &rho0, &grid).unwrap();
            (expectation(&z, &out[1]).unwrap() - (-2.0f64).exp()).abs()
        };
        let (e1, e2) = (err(10), err(20));
        assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn rejects_negative_rates() {
        let j = Jump::new(site_op(1, Axis::Minus, 1).unwrap(), -1.0);
        assert!(LindbladModel::new(Hamiltonian::zero(1), vec![j]).is_err());
    }
}
