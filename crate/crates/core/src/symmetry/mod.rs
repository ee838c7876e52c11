//! Jordan–Wigner modes, the conserved classifier `C` of a reflection
//! symmetric XX chain with center-site dissipation, its sectors, and the
//! sector-resolved states and gates.
//!
//! With `a_{k,±} = (f_k ± f_{L+1−k})/√2` the classifier is
//! `C = N₊ − N₋ + n₀ − 1/2`; center-site `σ^±` map `a_{k,±}` to `−a_{k,∓}`
//! through the string, so only `C²` is strongly conserved. Its eigenvalues
//! are `(η + 1/2)²` with `η = 0..l`, `l = (L−1)/2`.

mod gates;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::chain::{xx_hamiltonian, ChainSpec};
use crate::qcore::{
    check_site, site_mask, site_op, Axis, DensityOperator, LinearOperator, StateVector,
};
use crate::{Error, Result};

pub use gates::{apply_gate, bell_prep_circuit, gate_operator, Gate, HALF_SWAP_PHASE};

/// Largest chain for which classifiers and projectors are built densely.
pub const MAX_CLASSIFIER_SITES: usize = 11;
/// Commutator tolerance of the strong-symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Spectrum of `C²` must sit this close to `(η + 1/2)²`.
const SPECTRUM_TOL: f64 = 1e-8;

pub const JW_CONVENTION: &str = "f_k = prod_{j<k} (-sigma_j^z) sigma_k^-";

/// Annihilators `f_1..f_L`.
#[derive(Clone, Debug)]
pub struct FermionModeSet {
    n_sites: usize,
    modes: Vec<LinearOperator>,
}

impl FermionModeSet {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `f_k`, 1-based.
    pub fn mode(&self, k: usize) -> &LinearOperator {
        &self.modes[k - 1]
    }

    pub fn modes(&self) -> &[LinearOperator] {
        &self.modes
    }

    pub fn convention(&self) -> &'static str {
        JW_CONVENTION
    }

    /// Largest entry of `{f_j, f_k†} − δ_jk` and `{f_j, f_k}` over all pairs.
    pub fn anticommutation_defect(&self) -> f64 {
        let dim = 1usize << self.n_sites;
        let id = LinearOperator::identity(dim);
        let mut worst: f64 = 0.0;
        for (j, fj) in self.modes.iter().enumerate() {
            for (k, fk) in self.modes.iter().enumerate() {
                let fkd = fk.adjoint();
                let mut a = fj.matmul(&fkd).add(&fkd.matmul(fj));
                if j == k {
                    a = a.sub(&id);
                }
                let b = fj.matmul(fk).add(&fk.matmul(fj));
                worst = worst.max(a.max_abs()).max(b.max_abs());
            }
        }
        worst
    }
}

pub fn jw_modes(n_sites: usize) -> Result<FermionModeSet> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("jw_modes needs L >= 1".into()));
    }
    if n_sites > MAX_CLASSIFIER_SITES {
        return Err(Error::DimensionGuard {
            n_qubits: n_sites,
            limit: MAX_CLASSIFIER_SITES,
        });
    }
    let dim = 1usize << n_sites;
    let modes = (1..=n_sites)
        .map(|k| {
            let mk = site_mask(k, n_sites);
            let left: usize = (1..k).map(|j| site_mask(j, n_sites)).sum();
            LinearOperator::from_triplets(
                dim,
                (0..dim).filter(|b| b & mk != 0).map(|b| {
                    // −σ^z is +1 on |g⟩ and −1 on |e⟩.
                    let sign = if (b & left).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    (b ^ mk, b, C64::new(sign, 0.0))
                }),
            )
        })
        .collect();
    Ok(FermionModeSet { n_sites, modes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    /// `−1/2 + Σ_{k≤l} f_k† f_{L+1−k}` as printed.
    Verbatim,
    /// `n₀ − 1/2 + Σ_{k≤l} (f_k† f_{L+1−k} + h.c.)`.
    HermitianCompletion,
    /// `N₋ = Σ_k a_{k,−}† a_{k,−}`, conserved by itself.
    AntisymmetricModeNumber,
}

/// Outcome of the strong-symmetry check for one candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateCheck {
    pub kind: ClassifierKind,
    pub hermitian_defect: f64,
    /// Frobenius norm of `[Q, H]`, where `Q` is the conserved quantity.
    pub hamiltonian_commutator: f64,
    /// Largest Frobenius norm of `[Q, L_j]` over the jump operators.
    pub jump_commutator: f64,
    pub passed: bool,
}

/// A validated classifier and the record of every candidate tried.
#[derive(Clone, Debug)]
pub struct Classifier {
    n_sites: usize,
    kind: ClassifierKind,
    operator: LinearOperator,
    conserved: LinearOperator,
    checks: Vec<CandidateCheck>,
}

impl Classifier {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn kind(&self) -> ClassifierKind {
        self.kind
    }

    /// `C` (or `N₋` for the fallback).
    pub fn operator(&self) -> &LinearOperator {
        &self.operator
    }

    /// The strongly conserved quantity: `C²`, or `N₋` for the fallback.
    pub fn conserved(&self) -> &LinearOperator {
        &self.conserved
    }

    pub fn checks(&self) -> &[CandidateCheck] {
        &self.checks
    }

    /// Sector label of an eigenvalue of [`Self::conserved`].
    fn label(&self, eigenvalue: f64) -> f64 {
        match self.kind {
            ClassifierKind::AntisymmetricModeNumber => eigenvalue,
            _ => eigenvalue.max(0.0).sqrt() - 0.5,
        }
    }

    /// Strong-symmetry commutators of this classifier against `h` and `jumps`.
    pub fn check(&self, h: &LinearOperator, jumps: &[LinearOperator]) -> CandidateCheck {
        check_candidate(self.kind, &self.operator, &self.conserved, h, jumps)
    }
}

fn check_candidate(
    kind: ClassifierKind,
    op: &LinearOperator,
    conserved: &LinearOperator,
    h: &LinearOperator,
    jumps: &[LinearOperator],
) -> CandidateCheck {
    let hermitian_defect = op.hermitian_defect();
    let hamiltonian_commutator = conserved.commutator(h).frobenius_norm();
    let jump_commutator = jumps
        .iter()
        .map(|l| conserved.commutator(l).frobenius_norm())
        .fold(0.0, f64::max);
    CandidateCheck {
        kind,
        hermitian_defect,
        hamiltonian_commutator,
        jump_commutator,
        passed: hermitian_defect <= SYMMETRY_TOL
            && hamiltonian_commutator <= SYMMETRY_TOL
            && jump_commutator <= SYMMETRY_TOL,
    }
}

/// Palindromic, non-uniform reference chain with the center NNN bond, used
/// to validate classifier candidates.
pub fn reference_chain(n_sites: usize) -> Result<ChainSpec> {
    let j = (1..n_sites)
        .map(|i| 1.0 + 0.1 * i.min(n_sites - i) as f64)
        .collect();
    ChainSpec::new(n_sites, j, vec![0.0; n_sites - 2])?.with_center_nnn(0.3)
}

/// `σ^+` and `σ^−` on the center site.
pub fn center_jumps(n_sites: usize) -> Result<Vec<LinearOperator>> {
    let c = n_sites / 2 + 1;
    Ok(vec![
        site_op(c, Axis::Plus, n_sites)?,
        site_op(c, Axis::Minus, n_sites)?,
    ])
}

fn require_odd(n_sites: usize) -> Result<()> {
    if n_sites < 3 || n_sites % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "classifier needs an odd chain of at least 3 sites, got {n_sites}"
        )));
    }
    Ok(())
}

/// Tries the printed form, its Hermitian completion and the `N₋` fallback
/// in turn against [`reference_chain`] with center jumps, and returns the
/// first that passes.
pub fn build_c(n_sites: usize) -> Result<Classifier> {
    require_odd(n_sites)?;
    let f = jw_modes(n_sites)?;
    let dim = 1usize << n_sites;
    let l = (n_sites - 1) / 2;
    let c = l + 1;
    let id = LinearOperator::identity(dim);
    let half = id.scale_real(-0.5);
    let pair = |k: usize| f.mode(k).adjoint().matmul(f.mode(n_sites + 1 - k));

    let mut verbatim = half.clone();
    let mut completion = half.add(&f.mode(c).adjoint().matmul(f.mode(c)));
    let mut n_minus = LinearOperator::zeros(dim);
    for k in 1..=l {
        let p = pair(k);
        verbatim = verbatim.add(&p);
        completion = completion.add(&p).add(&p.adjoint());
        let a = f
            .mode(k)
            .sub(f.mode(n_sites + 1 - k))
            .scale_real(std::f64::consts::FRAC_1_SQRT_2);
        n_minus = n_minus.add(&a.adjoint().matmul(&a));
    }

    let h = xx_hamiltonian(&reference_chain(n_sites)?)?;
    let jumps = center_jumps(n_sites)?;
    let candidates = [
        (
            ClassifierKind::Verbatim,
            verbatim.clone(),
            verbatim.matmul(&verbatim),
        ),
        (
            ClassifierKind::HermitianCompletion,
            completion.clone(),
            completion.matmul(&completion),
        ),
        (
            ClassifierKind::AntisymmetricModeNumber,
            n_minus.clone(),
            n_minus,
        ),
    ];
    let mut checks = Vec::new();
    for (kind, op, conserved) in candidates {
        let check = check_candidate(kind, &op, &conserved, &h, &jumps);
        checks.push(check);
        if check.passed {
            return Ok(Classifier {
                n_sites,
                kind,
                operator: op,
                conserved,
                checks,
            });
        }
    }
    Err(Error::ClassifierValidation(format!("{checks:?}")))
}

/// Spectral decomposition of the conserved quantity into sectors `η = 0..l`.
#[derive(Clone, Debug)]
pub struct Sectors {
    n_sites: usize,
    /// Orthonormal columns spanning each sector.
    bases: Vec<DMatrix<C64>>,
}

impl Sectors {
    pub fn n_sectors(&self) -> usize {
        self.bases.len()
    }

    pub fn basis(&self, eta: usize) -> &DMatrix<C64> {
        &self.bases[eta]
    }

    pub fn rank(&self, eta: usize) -> usize {
        self.bases[eta].ncols()
    }

    /// Dense `P_η`.
    pub fn projector(&self, eta: usize) -> DMatrix<C64> {
        let v = &self.bases[eta];
        v * v.adjoint()
    }

    pub fn weights_of_state(&self, psi: &StateVector) -> Result<SectorDecomposition> {
        self.check_dim(psi.n_qubits())?;
        let x = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let total = x.norm_squared();
        let weights: Vec<f64> = self
            .bases
            .iter()
            .map(|v| (v.adjoint() * &x).norm_squared() / total)
            .collect();
        Ok(SectorDecomposition::from_weights(weights))
    }

    pub fn weights_of_density(&self, rho: &DensityOperator) -> Result<SectorDecomposition> {
        self.check_dim(rho.n_qubits())?;
        let m = rho.matrix();
        let total = m.trace().re;
        let weights: Vec<f64> = self
            .bases
            .iter()
            .map(|v| (v.adjoint() * m * v).trace().re / total)
            .collect();
        Ok(SectorDecomposition::from_weights(weights))
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                got: n,
            });
        }
        Ok(())
    }
}

/// Sector weights `⟨P_η⟩` and the part of the state outside every sector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorDecomposition {
    pub weights: Vec<f64>,
    pub residual: f64,
}

impl SectorDecomposition {
    fn from_weights(weights: Vec<f64>) -> Self {
        let residual = 1.0 - weights.iter().sum::<f64>();
        Self { weights, residual }
    }
}

/// Sectors of a validated classifier. Fails if the spectrum of the
/// conserved quantity strays from the expected labels.
pub fn sector_projectors(classifier: &Classifier) -> Result<Sectors> {
    let n = classifier.n_sites;
    let l = (n - 1) / 2;
    let eig = classifier.conserved.to_dense().symmetric_eigen();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); l + 1];
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        let label = classifier.label(ev);
        let eta = label.round();
        if (label - eta).abs() > SPECTRUM_TOL || eta < 0.0 || eta as usize > l {
            return Err(Error::ClassifierValidation(format!(
                "eigenvalue {ev} of the conserved quantity has no sector label"
            )));
        }
        groups[eta as usize].push(i);
    }
    let bases = groups
        .into_iter()
        .map(|cols| eig.eigenvectors.select_columns(&cols))
        .collect();
    Ok(Sectors { n_sites: n, bases })
}

/// `Π_{k=1}^η b†_{k,(−)^k} |g…g⟩` with
/// `b†_{k,±} = (σ⁺_{l−k+1} ± σ⁺_{L−l+k})/√2`.
pub fn phi_eta_state(n_sites: usize, eta: usize) -> Result<StateVector> {
    require_odd(n_sites)?;
    let l = (n_sites - 1) / 2;
    if eta > l {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} exceeds l = {l}"
        )));
    }
    let mut amps = StateVector::ground(n_sites).into_amplitudes();
    for k in 1..=eta {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let b = site_op(l - k + 1, Axis::Plus, n_sites)?
            .add(&site_op(n_sites - l + k, Axis::Plus, n_sites)?.scale_real(sign))
            .scale_real(std::f64::consts::FRAC_1_SQRT_2);
        amps = b.apply(&amps);
    }
    StateVector::new(n_sites, amps)
}

/// `(|e_{c−1} g_{c+1}⟩ + e^{iφ}|g_{c−1} e_{c+1}⟩)/√2` around the center `c`,
/// ground elsewhere.
pub fn bell_chain_state(n_sites: usize, phi: f64) -> Result<StateVector> {
    require_odd(n_sites)?;
    let c = n_sites / 2 + 1;
    check_site(c + 1, n_sites)?;
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n_sites];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    amps[site_mask(c - 1, n_sites)] = C64::new(s, 0.0);
    amps[site_mask(c + 1, n_sites)] = C64::from_polar(s, phi);
    StateVector::new(n_sites, amps)
}

/// Steady `⟨σ₁^z σ_L^z⟩` under center pump/loss: `1/L` for η = 0 and
/// `(l−4)/(L·l)` for η = 1.
pub fn predicted_steady_value(n_sites: usize, eta: usize) -> Result<f64> {
    require_odd(n_sites)?;
    let big_l = n_sites as f64;
    let l = ((n_sites - 1) / 2) as f64;
    match eta {
        0 => Ok(1.0 / big_l),
        1 => Ok((l - 4.0) / (big_l * l)),
        _ => Err(Error::Unsupported(format!(
            "no closed-form steady value for sector eta = {eta}"
        ))),
    }
}

/// Sector-weighted steady correlation of `|Ψ(φ)⟩`:
/// `cos²(φ/2)/L + sin²(φ/2)(l−4)/(L·l)`, which is `cos φ / 5` for L = 5.
pub fn predicted_phase_curve(n_sites: usize, phi: f64) -> Result<f64> {
    let c2 = (0.5 * phi).cos().powi(2);
    Ok(c2 * predicted_steady_value(n_sites, 0)? + (1.0 - c2) * predicted_steady_value(n_sites, 1)?)
}
