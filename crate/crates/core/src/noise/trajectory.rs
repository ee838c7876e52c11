use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{combo_signs, noise_operator, sample_noise, stream_rng, NoiseRealization, JUMP_STREAM};
use crate::qcore::{
    checked_sample, l2_norm, renormalize_checked, DenseOperator, Generator, Hamiltonian, Jump,
    LindbladModel, LindbladRhs, LinearOperator, SchrodingerRk4, StateVector, TimeGrid,
};
use crate::{Error, Result};

/// Largest number of noise sign patterns for which section operators are
/// cached (two dissipative sites).
const MAX_CACHED_COMBOS: usize = 16;
/// Largest Hilbert-space dimension for precomputed dense propagators.
const MAX_EXACT_DIM: usize = 1024;

/// How decoherence channels enter a noisy trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoherenceMode {
    /// Quantum jumps inside each pure-state trajectory.
    #[default]
    JumpChannels,
    /// One density matrix per noise realization.
    DensityMatrix,
}

/// Named Hermitian observable.
#[derive(Clone, Debug)]
pub struct Observable {
    pub id: String,
    pub op: LinearOperator,
}

impl Observable {
    pub fn new(id: impl Into<String>, op: LinearOperator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian(op.hermitian_defect()));
        }
        Ok(Self { id: id.into(), op })
    }
}

/// Chain Hamiltonian, noise sites with their rate, and optional decoherence.
#[derive(Clone, Debug)]
pub struct TrajectoryModel {
    pub hamiltonian: Hamiltonian,
    pub noise_sites: Vec<usize>,
    pub gamma: f64,
    pub dt_section: f64,
    pub decoherence: Vec<Jump>,
    pub mode: DecoherenceMode,
}

impl TrajectoryModel {
    pub fn new(
        hamiltonian: Hamiltonian,
        noise_sites: Vec<usize>,
        gamma: f64,
        dt_section: f64,
    ) -> Self {
        Self {
            hamiltonian,
            noise_sites,
            gamma,
            dt_section,
            decoherence: Vec::new(),
            mode: DecoherenceMode::default(),
        }
    }

    pub fn with_decoherence(mut self, jumps: Vec<Jump>, mode: DecoherenceMode) -> Self {
        self.decoherence = jumps;
        self.mode = mode;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.hamiltonian.n_qubits()
    }

    fn has_jumps(&self) -> bool {
        self.decoherence.iter().any(|j| j.rate > 0.0)
    }
}

/// Observable values of one trajectory at the grid samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `values[sample][observable]`
    pub values: Vec<Vec<f64>>,
    pub n_jumps: usize,
}

/// `H(t) + extra`, with `extra` a static (possibly non-Hermitian) section term.
struct Shifted<'a> {
    base: &'a Hamiltonian,
    extra: &'a LinearOperator,
}

impl Generator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply_add(&self, t: f64, alpha: C64, x: &[C64], out: &mut [C64]) {
        self.base.apply_add(t, alpha, x, out);
        self.extra.apply_add(alpha, x, out);
    }
}

enum Kernel {
    /// Dense propagators per sign pattern: one integration step and one full
    /// section.
    Exact {
        step: Vec<DenseOperator>,
        section: Vec<DenseOperator>,
    },
    /// RK4 on `H(t) + section term`; section terms cached when few.
    Rk4 { cache: Vec<LinearOperator> },
    Density {
        model: LindbladModel,
        cache: Vec<LinearOperator>,
    },
}

/// Precomputed machinery shared by every trajectory of an ensemble.
pub struct TrajectoryEngine {
    model: TrajectoryModel,
    grid: TimeGrid,
    observables: Vec<Observable>,
    steps_per_section: usize,
    n_sections: usize,
    noisy: bool,
    jumps: Vec<(f64, LinearOperator)>,
    kernel: Kernel,
}

impl TrajectoryEngine {
    pub fn new(
        model: TrajectoryModel,
        grid: TimeGrid,
        observables: Vec<Observable>,
    ) -> Result<Self> {
        let n = model.n_qubits();
        let dim = 1usize << n;
        for o in &observables {
            if o.op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: o.op.dim(),
                });
            }
        }
        for j in &model.decoherence {
            if j.op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: j.op.dim(),
                });
            }
            if !(j.rate >= 0.0 && j.rate.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "jump rate {} must be >= 0",
                    j.rate
                )));
            }
        }
        if !(model.gamma >= 0.0 && model.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be >= 0, got {}",
                model.gamma
            )));
        }
        for &s in &model.noise_sites {
            crate::qcore::check_site(s, n)?;
        }
        let ratio = model.dt_section / grid.dt();
        let k = ratio.round();
        if !(k >= 1.0 && (ratio - k).abs() <= 1e-9 * ratio) {
            return Err(Error::SectionMismatch {
                dt: grid.dt(),
                dt_section: model.dt_section,
            });
        }
        let k = k as usize;
        let noisy = model.gamma > 0.0 && !model.noise_sites.is_empty();
        let n_combos = if noisy {
            4usize.pow(model.noise_sites.len() as u32)
        } else {
            1
        };
        let jump_mode = model.has_jumps() && model.mode == DecoherenceMode::JumpChannels;
        let density_mode = model.has_jumps() && model.mode == DecoherenceMode::DensityMatrix;
        let jumps: Vec<(f64, LinearOperator)> = if jump_mode {
            model
                .decoherence
                .iter()
                .filter(|j| j.rate > 0.0)
                .map(|j| (j.rate, j.op.clone()))
                .collect()
        } else {
            Vec::new()
        };

        let mut engine = Self {
            n_sections: grid.n_steps().div_ceil(k),
            steps_per_section: k,
            noisy,
            jumps,
            grid,
            observables,
            kernel: Kernel::Rk4 { cache: Vec::new() },
            model,
        };
        let cache: Vec<LinearOperator> = if n_combos <= MAX_CACHED_COMBOS {
            (0..n_combos)
                .map(|c| engine.section_term(c, !density_mode))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        engine.kernel = if density_mode {
            Kernel::Density {
                model: LindbladModel::new(
                    engine.model.hamiltonian.clone(),
                    engine.model.decoherence.clone(),
                )?,
                cache,
            }
        } else if engine.model.hamiltonian.is_static() && !cache.is_empty() && dim <= MAX_EXACT_DIM
        {
            let h = engine.model.hamiltonian.static_operator()?.to_dense();
            let mut step = Vec::with_capacity(cache.len());
            let mut section = Vec::with_capacity(cache.len());
            for term in &cache {
                let (u_step, u_section) = propagators(&(&h + term.to_dense()), grid.dt(), k);
                step.push(DenseOperator::from_matrix(&u_step));
                section.push(DenseOperator::from_matrix(&u_section));
            }
            Kernel::Exact { step, section }
        } else {
            Kernel::Rk4 { cache }
        };
        Ok(engine)
    }

    pub fn model(&self) -> &TrajectoryModel {
        &self.model
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    /// Noise sections needed to cover the grid.
    pub fn n_sections(&self) -> usize {
        self.n_sections
    }

    pub fn steps_per_section(&self) -> usize {
        self.steps_per_section
    }

    /// Noise drive of one sign pattern, plus `−(i/2)Σ rL†L` in jump mode.
    fn section_term(&self, combo: usize, with_decay: bool) -> Result<LinearOperator> {
        let n = self.model.n_qubits();
        let mut op = LinearOperator::zeros(1 << n);
        if self.noisy {
            let signs = combo_signs(combo, self.model.noise_sites.len());
            for (&site, &eta) in self.model.noise_sites.iter().zip(&signs) {
                op = op.add(&noise_operator(
                    eta,
                    self.model.gamma,
                    self.model.dt_section,
                    site,
                    n,
                )?);
            }
        }
        if with_decay && !self.jumps.is_empty() {
            let decay = self
                .jumps
                .iter()
                .fold(LinearOperator::zeros(1 << n), |acc, (r, l)| {
                    acc.add(&l.adjoint().matmul(l).scale_real(*r))
                });
            op = op.add(&decay.scale(C64::new(0.0, -0.5)));
        }
        Ok(op)
    }

    fn cached_term<'a>(
        &self,
        cache: &'a [LinearOperator],
        combo: usize,
        scratch: &'a mut Option<LinearOperator>,
        with_decay: bool,
    ) -> Result<&'a LinearOperator> {
        if cache.is_empty() {
            *scratch = Some(self.section_term(combo, with_decay)?);
            Ok(scratch.as_ref().expect("just set"))
        } else {
            Ok(&cache[combo])
        }
    }

    /// Runs one trajectory with noise drawn from `seed`.
    pub fn run(&self, seed: u64, psi0: &StateVector) -> Result<TrajectoryRecord> {
        let sites = if self.noisy {
            self.model.noise_sites.clone()
        } else {
            Vec::new()
        };
        let real = sample_noise(seed, self.n_sections, &sites, self.model.dt_section)?;
        self.run_realization(&real, psi0)
    }

    /// Runs one trajectory for a given noise realization; jump draws use the
    /// realization's seed.
    pub fn run_realization(
        &self,
        real: &NoiseRealization,
        psi0: &StateVector,
    ) -> Result<TrajectoryRecord> {
        if psi0.n_qubits() != self.model.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.model.n_qubits(),
                got: psi0.dim(),
            });
        }
        if self.noisy {
            if real.sites() != self.model.noise_sites.as_slice() {
                return Err(Error::InvalidArgument(
                    "realization sites differ from the model".into(),
                ));
            }
            if real.n_sections() < self.n_sections {
                return Err(Error::InvalidArgument(format!(
                    "realization has {} sections, grid needs {}",
                    real.n_sections(),
                    self.n_sections
                )));
            }
            if (real.dt_section() - self.model.dt_section).abs() > 1e-12 * self.model.dt_section {
                return Err(Error::SectionMismatch {
                    dt: real.dt_section(),
                    dt_section: self.model.dt_section,
                });
            }
        }
        match &self.kernel {
            Kernel::Density { model, cache } => self.run_density(model, cache, real, psi0),
            _ => self.run_pure(real, psi0),
        }
    }

    fn combo(&self, real: &NoiseRealization, sec: usize) -> usize {
        if self.noisy {
            real.combo(sec)
        } else {
            0
        }
    }

    fn observe(&self, psi: &[C64]) -> Vec<f64> {
        let n2 = l2_norm(psi).powi(2);
        self.observables
            .iter()
            .map(|o| o.op.sandwich(psi).re / n2)
            .collect()
    }

    fn run_pure(&self, real: &NoiseRealization, psi0: &StateVector) -> Result<TrajectoryRecord> {
        let grid = &self.grid;
        let k = self.steps_per_section;
        let n_steps = grid.n_steps();
        let jump_mode = !self.jumps.is_empty();
        let mut rng = stream_rng(real.seed(), JUMP_STREAM);
        let mut threshold: f64 = if jump_mode { rng.gen() } else { 0.0 };
        let mut n_jumps = 0;

        let mut psi = psi0.amplitudes().to_vec();
        let mut buf = psi.clone();
        let mut rk = SchrodingerRk4::new(psi.len());
        let mut scratch = None;
        let mut times = vec![grid.t_start()];
        let mut values = vec![self.observe(&psi)];

        for sec in 0..self.n_sections {
            let s0 = sec * k;
            let s1 = (s0 + k).min(n_steps);
            let combo = self.combo(real, sec);
            let inner_sample = (s0 + 1..s1).any(|s| grid.is_sample_step(s));
            let chunks: Vec<(usize, usize)> = match (&self.kernel, inner_sample || s1 - s0 < k) {
                (Kernel::Exact { .. }, false) => vec![(s0, s1)],
                _ => (s0..s1).map(|s| (s, s + 1)).collect(),
            };
            for (a, b) in chunks {
                match &self.kernel {
                    Kernel::Exact { step, section } => {
                        let u = if b - a == 1 {
                            &step[combo]
                        } else {
                            &section[combo]
                        };
                        u.apply_into(&psi, &mut buf);
                        std::mem::swap(&mut psi, &mut buf);
                    }
                    Kernel::Rk4 { cache } => {
                        let extra = self.cached_term(cache, combo, &mut scratch, true)?;
                        let g = Shifted {
                            base: &self.model.hamiltonian,
                            extra,
                        };
                        rk.step(&g, grid.time_of_step(a), grid.dt(), &mut psi);
                    }
                    Kernel::Density { .. } => unreachable!("density kernel handled separately"),
                }
                let t = grid.time_of_step(b);
                if jump_mode {
                    let n2 = l2_norm(&psi).powi(2);
                    if n2 <= threshold {
                        self.jump(&mut psi, &mut rng)?;
                        n_jumps += 1;
                        threshold = rng.gen();
                    }
                } else {
                    renormalize_checked(&mut psi, t)?;
                }
                if grid.is_sample_step(b) {
                    times.push(t);
                    values.push(self.observe(&psi));
                }
            }
        }
        Ok(TrajectoryRecord {
            times,
            values,
            n_jumps,
        })
    }

    /// Applies one jump, chosen with probability `∝ r‖Lψ‖²`, and renormalizes.
    fn jump(&self, psi: &mut Vec<C64>, rng: &mut impl Rng) -> Result<()> {
        let candidates: Vec<Vec<C64>> = self.jumps.iter().map(|(_, l)| l.apply(psi)).collect();
        let weights: Vec<f64> = self
            .jumps
            .iter()
            .zip(&candidates)
            .map(|((r, _), v)| r * l2_norm(v).powi(2))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // No channel can act; the norm loss was integration error.
            let n = l2_norm(psi);
            psi.iter_mut().for_each(|a| *a /= n);
            return Ok(());
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        let mut v = candidates.into_iter().nth(chosen).expect("index in range");
        let n = l2_norm(&v);
        v.iter_mut().for_each(|a| *a /= n);
        *psi = v;
        Ok(())
    }

    fn run_density(
        &self,
        model: &LindbladModel,
        cache: &[LinearOperator],
        real: &NoiseRealization,
        psi0: &StateVector,
    ) -> Result<TrajectoryRecord> {
        let grid = &self.grid;
        let k = self.steps_per_section;
        let n = self.model.n_qubits();
        let rhs = LindbladRhs::new(model);
        let mut rho = psi0.to_density().into_matrix();
        let observe = |rho: &DMatrix<C64>| -> Vec<f64> {
            self.observables
                .iter()
                .map(|o| o.op.trace_with(rho).re)
                .collect()
        };
        let mut times = vec![grid.t_start()];
        let mut values = vec![observe(&rho)];
        let mut scratch = None;
        for sec in 0..self.n_sections {
            let combo = self.combo(real, sec);
            let extra = self.cached_term(cache, combo, &mut scratch, false)?;
            let s0 = sec * k;
            for s in s0..(s0 + k).min(grid.n_steps()) {
                rho = rhs.rk4_step(grid.time_of_step(s), grid.dt(), &rho, Some(extra));
                if grid.is_sample_step(s + 1) {
                    let t = grid.time_of_step(s + 1);
                    let sample = checked_sample(n, &rho, t)?;
                    times.push(t);
                    values.push(observe(sample.matrix()));
                }
            }
        }
        Ok(TrajectoryRecord {
            times,
            values,
            n_jumps: 0,
        })
    }
}

/// Step and section propagators `exp(−iHτ)` for `τ = dt` and `k·dt`.
fn propagators(h: &DMatrix<C64>, dt: f64, k: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let defect = (h - h.adjoint()).camax();
    if defect <= 1e-12 {
        let eig = (h + h.adjoint()).scale(0.5).symmetric_eigen();
        let v = &eig.eigenvectors;
        let build = |tau: f64| {
            let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, -l * tau));
            let mut vd = v.clone();
            for (j, p) in phases.iter().enumerate() {
                vd.column_mut(j).iter_mut().for_each(|x| *x *= *p);
            }
            &vd * v.adjoint()
        };
        (build(dt), build(dt * k as f64))
    } else {
        let step = (h * C64::new(0.0, -dt)).exp();
        let section = matrix_power(&step, k);
        (step, section)
    }
}

fn matrix_power(m: &DMatrix<C64>, mut k: usize) -> DMatrix<C64> {
    let mut base = m.clone();
    let mut acc = DMatrix::identity(m.nrows(), m.ncols());
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// One trajectory of `model` under `real`, sampled on `grid`.
pub fn run_trajectory(
    model: &TrajectoryModel,
    real: &NoiseRealization,
    psi0: &StateVector,
    grid: &TimeGrid,
    observables: &[Observable],
) -> Result<TrajectoryRecord> {
    TrajectoryEngine::new(model.clone(), *grid, observables.to_vec())?.run_realization(real, psi0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{evolve_state, expectation, site_op, Axis};

    fn z_obs() -> Vec<Observable> {
        vec![Observable::new("sz", site_op(1, Axis::Z, 1).unwrap()).unwrap()]
    }

    #[test]
    fn rejects_incommensurate_sections() {
        let model = TrajectoryModel::new(Hamiltonian::zero(1), vec![1], 1.0, 0.0075);
        let grid = TimeGrid::new(0.0, 0.002, 10, 1).unwrap();
        assert!(matches!(
            TrajectoryEngine::new(model, grid, z_obs()),
            Err(Error::SectionMismatch { .. })
        ));
    }

    #[test]
    fn noise_off_matches_evolve_state() {
        let h = site_op(1, Axis::X, 1).unwrap().scale_real(3.0);
        let model =
            TrajectoryModel::new(Hamiltonian::from_static(1, h.clone()), vec![1], 0.0, 0.0075);
        let grid = TimeGrid::new(0.0, 0.0015, 100, 10).unwrap();
        let engine = TrajectoryEngine::new(model, grid, z_obs()).unwrap();
        let rec = engine.run(5, &StateVector::ground(1)).unwrap();
        let states = evolve_state(&h, &StateVector::ground(1), &grid).unwrap();
        let z = site_op(1, Axis::Z, 1).unwrap();
        for (v, s) in rec.values.iter().zip(&states) {
            assert!((v[0] - expectation(&z, s).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_and_rk4_paths_agree() {
        let grid = TimeGrid::new(0.0, 0.0015, 500, 25).unwrap();
        let static_model = TrajectoryModel::new(Hamiltonian::zero(1), vec![1], 1.0, 0.0075);
        // A vanishing sine term forces the RK4 path without changing H.
        let dynamic = Hamiltonian::zero(1).with_term(
            crate::qcore::Coefficient::Sine {
                amplitude: 1e-300,
                angular_frequency: 1.0,
                phase: 0.0,
            },
            site_op(1, Axis::Z, 1).unwrap(),
        );
        let dynamic_model = TrajectoryModel::new(dynamic, vec![1], 1.0, 0.0075);
        let a = TrajectoryEngine::new(static_model, grid, z_obs()).unwrap();
        let b = TrajectoryEngine::new(dynamic_model, grid, z_obs()).unwrap();
        let psi0 = StateVector::excited_sites(1, &[1]).unwrap();
        let (ra, rb) = (a.run(9, &psi0).unwrap(), b.run(9, &psi0).unwrap());
        for (x, y) in ra.values.iter().zip(&rb.values) {
            assert!((x[0] - y[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn trajectories_stay_pure_and_normalized() {
        let model = TrajectoryModel::new(Hamiltonian::zero(1), vec![1], 1.0, 0.0075);
        let grid = TimeGrid::new(0.0, 0.0015, 1000, 1).unwrap();
        let obs = vec![
            Observable::new("x", site_op(1, Axis::X, 1).unwrap()).unwrap(),
            Observable::new("y", site_op(1, Axis::Y, 1).unwrap()).unwrap(),
            Observable::new("z", site_op(1, Axis::Z, 1).unwrap()).unwrap(),
        ];
        let rec = TrajectoryEngine::new(model, grid, obs)
            .unwrap()
            .run(3, &StateVector::ground(1))
            .unwrap();
        for v in &rec.values {
            let r2: f64 = v.iter().map(|c| c * c).sum();
            assert!((r2 - 1.0).abs() < 1e-8);
        }
    }
}
