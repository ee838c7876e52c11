//! Lab-frame model of flux-modulated qubits and its effective XX chain.
//!
//! In the frame rotating at each idle frequency a modulated qubit carries
//! `Σ ε sin(νt + φ) n_j`, and a bare exchange `g` between qubits detuned by
//! `Δ = ω_j − ω_k` oscillates as `e^{iΔt}`. A tone with `ν = |Δ|` turns the
//! bond back on at strength `g·J₁(ε/ν)`, while every other tone on the two
//! sites multiplies it by `J₀` of its (combined) modulation index.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j;
use super::ChainSpec;
use crate::fit::fit_sine_squared;
use crate::qcore::{
    evolve_state, pauli_string, site_op, Axis, Coefficient, Hamiltonian, LinearOperator,
    StateVector, TimeGrid,
};
use crate::{Error, Result};

/// Frequencies closer than this (rad/μs) are treated as equal.
const FREQ_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    /// Amplitude ε (rad/μs).
    pub epsilon: f64,
    /// Angular frequency ν (rad/μs).
    pub nu: f64,
    /// Phase φ (rad).
    pub phi: f64,
}

impl Tone {
    pub fn index(&self) -> f64 {
        self.epsilon / self.nu
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub site: usize,
    pub tones: Vec<Tone>,
}

/// Idle frequencies, modulation tones and bare couplings of a device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetDeviceSpec {
    pub n_sites: usize,
    /// Idle angular frequencies ω_j (rad/μs).
    pub idle_freqs: Vec<f64>,
    pub modulations: Vec<Modulation>,
    /// Bare NN couplings (rad/μs), bond `(i+1, i+2)`.
    pub g: Vec<f64>,
    /// Bare NNN couplings (rad/μs), bond `(i+1, i+3)`.
    pub g2: Vec<f64>,
}

/// Effective coupling of one bond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondCoupling {
    pub site_a: usize,
    pub site_b: usize,
    /// First-sideband Bessel estimate (rad/μs).
    pub bessel: f64,
    /// Swap-frequency fit of a two-site lab-frame simulation (rad/μs).
    pub fit: f64,
}

impl BondCoupling {
    pub fn relative_difference(&self) -> f64 {
        (self.bessel - self.fit).abs() / self.fit.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub nn: Vec<BondCoupling>,
    /// NNN estimates from the DC part of the modulation phase factors.
    pub nnn: Vec<f64>,
    pub chain: ChainSpec,
}

impl FloquetDeviceSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites;
        if n < 2 {
            return Err(Error::InvalidArgument(
                "a device needs at least two qubits".into(),
            ));
        }
        for (name, len, want) in [
            ("idle_freqs", self.idle_freqs.len(), n),
            ("g", self.g.len(), n - 1),
            ("g2", self.g2.len(), n.saturating_sub(2)),
        ] {
            if len != want {
                return Err(Error::InvalidArgument(format!(
                    "{name} has {len} entries, expected {want}"
                )));
            }
        }
        let mut seen = Vec::new();
        for m in &self.modulations {
            crate::qcore::check_site(m.site, n)?;
            if seen.contains(&m.site) {
                return Err(Error::DuplicateSite(m.site));
            }
            seen.push(m.site);
            for t in &m.tones {
                if !(t.nu > 0.0 && t.epsilon >= 0.0 && t.epsilon.is_finite() && t.phi.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "tone on site {} needs nu > 0 and epsilon >= 0",
                        m.site
                    )));
                }
                let neighbours = [m.site.checked_sub(1), Some(m.site + 1)];
                let matched = neighbours.iter().flatten().any(|&k| {
                    (1..=n).contains(&k)
                        && (t.nu - self.detuning(m.site, k).abs()).abs() <= 1e-9 * t.nu.max(1.0)
                });
                if !matched {
                    return Err(Error::InvalidArgument(format!(
                        "tone nu = {} rad/us on site {} matches no adjacent detuning",
                        t.nu, m.site
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when exactly the even-indexed qubits are modulated.
    pub fn modulates_even_sites(&self) -> bool {
        let mut sites: Vec<usize> = self.modulations.iter().map(|m| m.site).collect();
        sites.sort_unstable();
        sites == (2..=self.n_sites).step_by(2).collect::<Vec<_>>()
    }

    /// `ω_a − ω_b`.
    pub fn detuning(&self, a: usize, b: usize) -> f64 {
        self.idle_freqs[a - 1] - self.idle_freqs[b - 1]
    }

    pub fn tones(&self, site: usize) -> &[Tone] {
        self.modulations
            .iter()
            .find(|m| m.site == site)
            .map(|m| m.tones.as_slice())
            .unwrap_or(&[])
    }

    /// Three-frequency layout: even qubits at 4.33 GHz, odd qubits
    /// alternating 4.54 / 4.66 GHz starting with 4.54 at the ends of a
    /// nine-qubit chain. Each even qubit carries one tone per neighbouring
    /// detuning with modulation index `index`; tone phases are 0 on the
    /// outermost even qubits and alternate inwards from both ends, so the
    /// center-adjacent pair shares a phase.
    pub fn three_frequency_layout(n_sites: usize, g: f64, g2: f64, index: f64) -> Result<Self> {
        if n_sites < 3 || n_sites % 2 == 0 {
            return Err(Error::InvalidArgument(
                "layout needs an odd chain of at least 3".into(),
            ));
        }
        let ghz = |f: f64| 2.0 * PI * f * 1e3;
        let idle_freqs = (1..=n_sites)
            .map(|j| {
                if j % 2 == 0 {
                    ghz(4.33)
                } else if ((j - 1) / 2) % 2 == 0 {
                    ghz(4.54)
                } else {
                    ghz(4.66)
                }
            })
            .collect::<Vec<_>>();
        let mut dev = Self {
            n_sites,
            idle_freqs,
            modulations: Vec::new(),
            g: vec![g; n_sites - 1],
            g2: vec![g2; n_sites - 2],
        };
        for j in (2..n_sites).step_by(2) {
            let depth = j.min(n_sites + 1 - j) / 2;
            let phi = if depth % 2 == 1 { 0.0 } else { PI };
            let tones = [j - 1, j + 1]
                .iter()
                .map(|&k| {
                    let nu = dev.detuning(j, k).abs();
                    Tone {
                        epsilon: index * nu,
                        nu,
                        phi,
                    }
                })
                .collect();
            dev.modulations.push(Modulation { site: j, tones });
        }
        dev.validate()?;
        Ok(dev)
    }

    /// Two qubits detuned by `nu`, the lower one (idle at `omega`) carrying
    /// a single resonant tone of index `index`.
    pub fn single_tone_pair(omega: f64, g: f64, nu: f64, index: f64) -> Self {
        Self {
            n_sites: 2,
            idle_freqs: vec![omega, omega + nu],
            modulations: vec![Modulation {
                site: 1,
                tones: vec![Tone {
                    epsilon: index * nu,
                    nu,
                    phi: 0.0,
                }],
            }],
            g: vec![g],
            g2: Vec::new(),
        }
    }

    /// Same device with every tone switched off.
    pub fn without_modulation(&self) -> Self {
        let mut d = self.clone();
        for m in &mut d.modulations {
            for t in &mut m.tones {
                t.epsilon = 0.0;
            }
        }
        d
    }

    /// Sites `first..first+len` as a device of their own.
    pub fn sub_device(&self, first: usize, len: usize) -> Result<Self> {
        if first == 0 || len < 2 || first + len - 1 > self.n_sites {
            return Err(Error::InvalidArgument(format!(
                "sub-device {first}..{} outside 1..={}",
                first + len - 1,
                self.n_sites
            )));
        }
        let r = first - 1..first - 1 + len;
        Ok(Self {
            n_sites: len,
            idle_freqs: self.idle_freqs[r.clone()].to_vec(),
            modulations: self
                .modulations
                .iter()
                .filter(|m| r.contains(&(m.site - 1)))
                .map(|m| Modulation {
                    site: m.site + 1 - first,
                    tones: m.tones.clone(),
                })
                .collect(),
            g: self.g[first - 1..first + len - 2].to_vec(),
            g2: if len >= 3 {
                self.g2[first - 1..first + len - 3].to_vec()
            } else {
                Vec::new()
            },
        })
    }

    /// Tones of both sites grouped by frequency into combined complex
    /// modulation indices `Σ_a x e^{iφ} − Σ_b x e^{iφ}`.
    fn index_groups(&self, a: usize, b: usize) -> Vec<(f64, C64)> {
        let mut groups: Vec<(f64, C64)> = Vec::new();
        let signed = self
            .tones(a)
            .iter()
            .map(|t| (t, 1.0))
            .chain(self.tones(b).iter().map(|t| (t, -1.0)));
        for (t, s) in signed {
            let z = C64::from_polar(s * t.index(), t.phi);
            match groups
                .iter_mut()
                .find(|(nu, _)| (nu - t.nu).abs() <= FREQ_TOL)
            {
                Some(g) => g.1 += z,
                None => groups.push((t.nu, z)),
            }
        }
        groups
    }

    /// First-sideband estimate of the bond `(a, b)` with bare coupling `g`:
    /// `g·J₁(R_res)·Π J₀(R_other)` when one tone frequency matches `|Δ|`,
    /// `g·Π J₀(R)` at zero detuning, and 0 otherwise.
    pub fn bessel_estimate(&self, a: usize, b: usize, g: f64) -> f64 {
        let delta = self.detuning(a, b).abs();
        let groups = self.index_groups(a, b);
        let dc = |skip: Option<usize>| -> f64 {
            groups
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != skip)
                .map(|(_, (_, z))| bessel_j(0, z.norm()))
                .product()
        };
        if delta <= FREQ_TOL {
            return (g * dc(None)).abs();
        }
        match groups
            .iter()
            .position(|(nu, _)| (nu - delta).abs() <= FREQ_TOL)
        {
            Some(i) => (g * bessel_j(1, groups[i].1.norm()) * dc(Some(i))).abs(),
            None => 0.0,
        }
    }

    /// Largest instantaneous diagonal plus off-diagonal scale, for step
    /// selection.
    fn frequency_scale(&self) -> f64 {
        let eps: f64 = self
            .modulations
            .iter()
            .flat_map(|m| m.tones.iter())
            .map(|t| t.epsilon + t.nu)
            .sum();
        let det = (1..self.n_sites)
            .map(|j| self.detuning(j, j + 1).abs())
            .fold(0.0, f64::max);
        let g: f64 = self.g.iter().chain(&self.g2).map(|x| x.abs()).sum();
        eps + det + g
    }
}

/// `H(t)` as a sum of time-dependent terms.
pub fn lab_frame_model(dev: &FloquetDeviceSpec) -> Result<Hamiltonian> {
    dev.validate()?;
    build_model(dev)
}

fn build_model(dev: &FloquetDeviceSpec) -> Result<Hamiltonian> {
    let n = dev.n_sites;
    let mut h = Hamiltonian::new(n);
    for m in &dev.modulations {
        let num = site_op(m.site, Axis::N, n)?;
        for t in m.tones.iter().filter(|t| t.epsilon != 0.0) {
            h.push(
                Coefficient::Sine {
                    amplitude: t.epsilon,
                    angular_frequency: t.nu,
                    phase: t.phi,
                },
                num.clone(),
            );
        }
    }
    let bonds = dev
        .g
        .iter()
        .enumerate()
        .map(|(i, &g)| (i + 1, i + 2, g))
        .chain(dev.g2.iter().enumerate().map(|(i, &g)| (i + 1, i + 3, g)));
    for (a, b, g) in bonds.filter(|&(_, _, g)| g != 0.0) {
        // σ_a⁺σ_b⁻ carries e^{iΔt}.
        let hop = pauli_string(&[(a, Axis::Plus), (b, Axis::Minus)], n)?;
        let delta = dev.detuning(a, b);
        let amplitude = C64::new(g, 0.0);
        h.push(
            Coefficient::Rotating {
                amplitude,
                angular_frequency: delta,
            },
            hop.clone(),
        );
        h.push(
            Coefficient::Rotating {
                amplitude,
                angular_frequency: -delta,
            },
            hop.adjoint(),
        );
    }
    Ok(h)
}

/// `H(t)` materialized at one time.
pub fn lab_frame_hamiltonian(dev: &FloquetDeviceSpec, t: f64) -> Result<LinearOperator> {
    Ok(lab_frame_model(dev)?.at(t))
}

/// Integration step resolving the fastest lab-frame scale.
fn lab_dt(dev: &FloquetDeviceSpec) -> f64 {
    (0.05 / dev.frequency_scale().max(1.0)).min(1e-3)
}

/// Sample times and site populations of a lab-frame run from `psi0`, with
/// `ceil(duration / sample_dt)` evenly spaced samples. Tones may address
/// qubits outside the device.
pub fn lab_frame_populations(
    dev: &FloquetDeviceSpec,
    psi0: &StateVector,
    duration: f64,
    sample_dt: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let h = build_model(dev)?;
    let dt0 = lab_dt(dev);
    let n_samples = ((duration / sample_dt).ceil() as usize).max(1);
    let stride = ((duration / n_samples as f64 / dt0).ceil() as usize).max(1);
    let n_steps = n_samples * stride;
    let grid = TimeGrid::new(0.0, duration / n_steps as f64, n_steps, stride)?;
    let states = evolve_state(&h, psi0, &grid)?;
    Ok((
        grid.sample_times(),
        states.iter().map(|s| s.site_occupations()).collect(),
    ))
}

/// Two-site swap fit of bond `(a, a+1)` (or any pair in a sub-device).
fn fit_bond(dev: &FloquetDeviceSpec, a: usize, b: usize, g: f64, estimate: f64) -> Result<f64> {
    // Isolate the pair: its idle frequencies, tones and the single coupling.
    let pair = FloquetDeviceSpec {
        n_sites: 2,
        idle_freqs: vec![dev.idle_freqs[a - 1], dev.idle_freqs[b - 1]],
        modulations: [(a, 1), (b, 2)]
            .iter()
            .filter(|(s, _)| !dev.tones(*s).is_empty())
            .map(|&(s, new)| Modulation {
                site: new,
                tones: dev.tones(s).to_vec(),
            })
            .collect(),
        g: vec![g],
        g2: Vec::new(),
    };
    // The pair keeps tones addressing its other neighbours, which would fail
    // validation on its own.
    let h = build_model(&pair)?;
    let j_scale = estimate.max(0.02 * g.abs()).max(1e-3);
    let duration = (3.0 * PI / (2.0 * j_scale)).min(20.0);
    let n_samples = 600;
    let dt0 = lab_dt(&pair);
    let stride = ((duration / n_samples as f64 / dt0).ceil() as usize).max(1);
    let n_steps = n_samples * stride;
    let grid = TimeGrid::new(0.0, duration / n_steps as f64, n_steps, stride)?;
    let psi0 = StateVector::excited_sites(2, &[1])?;
    let states = evolve_state(&h, &psi0, &grid)?;
    let ts = grid.sample_times();
    let pb: Vec<f64> = states.iter().map(|s| s.site_occupations()[1]).collect();
    let fit = fit_sine_squared(&ts, &pb, 4.0 * j_scale)?;
    if fit.amplitude < 0.5 {
        return Err(Error::FitFailure(format!(
            "bond ({a},{b}) transfers at most {:.3} of the excitation",
            fit.amplitude
        )));
    }
    Ok(fit.omega)
}

/// Effective chain of a modulated device. NN bonds get both a Bessel
/// estimate and a two-site swap fit (the fit is returned in the chain); NNN
/// bonds use the DC Bessel estimate.
pub fn effective_couplings(dev: &FloquetDeviceSpec) -> Result<CouplingReport> {
    dev.validate()?;
    let mut nn = Vec::with_capacity(dev.n_sites - 1);
    for (i, &g) in dev.g.iter().enumerate() {
        let (a, b) = (i + 1, i + 2);
        let bessel = dev.bessel_estimate(a, b, g);
        let fit = if g == 0.0 || bessel == 0.0 {
            0.0
        } else {
            fit_bond(dev, a, b, g, bessel)?
        };
        nn.push(BondCoupling {
            site_a: a,
            site_b: b,
            bessel,
            fit,
        });
    }
    let nnn: Vec<f64> = dev
        .g2
        .iter()
        .enumerate()
        .map(|(i, &g)| dev.bessel_estimate(i + 1, i + 3, g))
        .collect();
    let chain = ChainSpec::new(dev.n_sites, nn.iter().map(|b| b.fit).collect(), nnn.clone())?;
    Ok(CouplingReport { nn, nnn, chain })
}

/// Modulation index maximizing `J₁(x)·J₀(x)`.
fn dual_tone_peak() -> f64 {
    let f = |x: f64| -(bessel_j(1, x) * bessel_j(0, x));
    let (mut lo, mut hi) = (0.5, 1.8);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// First zero of `J₀`.
const J0_ZERO: f64 = 2.404825557695773;

/// Tunes every tone amplitude so that each NN bond's fitted coupling equals
/// `target` (relative tolerance `rel_tol`). Each NN bond must be addressed
/// by exactly one resonant tone. A tone whose current modulation index lies
/// beyond the maximum of `J₁(x)J₀(x)` is solved on the falling branch, which
/// reaches the first zero of `J₀` and so can cancel an in-phase pair's NNN
/// bond. Returns the tuned device and its report.
pub fn solve_symmetric_amplitudes(
    dev: &FloquetDeviceSpec,
    target: f64,
    rel_tol: f64,
) -> Result<(FloquetDeviceSpec, CouplingReport)> {
    dev.validate()?;
    // Unknowns: every tone's modulation index, in modulation order.
    let slots: Vec<(usize, usize)> = dev
        .modulations
        .iter()
        .enumerate()
        .flat_map(|(mi, m)| (0..m.tones.len()).map(move |ti| (mi, ti)))
        .collect();
    let bonds: Vec<usize> = (0..dev.n_sites - 1).filter(|&i| dev.g[i] != 0.0).collect();
    if slots.len() != bonds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} tones for {} active bonds; need one resonant tone per bond",
            slots.len(),
            bonds.len()
        )));
    }
    let peak = dual_tone_peak();
    let branches: Vec<(f64, f64)> = slots
        .iter()
        .map(|&(mi, ti)| {
            if dev.modulations[mi].tones[ti].index() > peak {
                (peak, J0_ZERO)
            } else {
                (1e-6, peak)
            }
        })
        .collect();
    let set = |d: &mut FloquetDeviceSpec, x: &DVector<f64>| {
        for (k, &(mi, ti)) in slots.iter().enumerate() {
            let t = &mut d.modulations[mi].tones[ti];
            t.epsilon = x[k] * t.nu;
        }
    };
    let estimates = |d: &FloquetDeviceSpec| -> DVector<f64> {
        DVector::from_iterator(
            bonds.len(),
            bonds
                .iter()
                .map(|&i| d.bessel_estimate(i + 1, i + 2, d.g[i])),
        )
    };
    let solve = |goals: &DVector<f64>, start: DVector<f64>| -> Result<DVector<f64>> {
        let mut x = start;
        let mut d = dev.clone();
        for _ in 0..50 {
            set(&mut d, &x);
            let r = estimates(&d) - goals;
            if r.amax() <= 1e-12 * goals.amax() {
                break;
            }
            let h = 1e-7;
            let mut jac = DMatrix::zeros(bonds.len(), slots.len());
            for k in 0..slots.len() {
                let mut xp = x.clone();
                xp[k] += h;
                set(&mut d, &xp);
                let col = (estimates(&d) - goals - &r) / h;
                jac.set_column(k, &col);
            }
            let step = jac
                .lu()
                .solve(&(-&r))
                .ok_or_else(|| Error::FitFailure("singular amplitude Jacobian".into()))?;
            x += step;
            for (v, &(lo, hi)) in x.iter_mut().zip(&branches) {
                *v = v.clamp(lo, hi);
            }
        }
        Ok(x)
    };
    let g_min = bonds
        .iter()
        .map(|&i| dev.g[i].abs())
        .fold(f64::INFINITY, f64::min);
    let ratio = target / g_min;
    let reachable = bessel_j(1, peak) * bessel_j(0, peak);
    if ratio >= reachable {
        return Err(Error::InvalidArgument(format!(
            "target J = {target} rad/us exceeds the reachable {:.3}·g",
            reachable
        )));
    }
    // Symmetric start: J₁(x)J₀(x) = target/g by bisection on each branch.
    let start = DVector::from_iterator(
        slots.len(),
        branches.iter().map(|&(lo, hi)| {
            let rising = hi <= peak;
            let (mut lo, mut hi) = (lo, hi);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (bessel_j(1, mid) * bessel_j(0, mid) < ratio) == rising {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }),
    );
    let mut goals = DVector::from_element(bonds.len(), target);
    let mut x = solve(&goals, start)?;
    let mut tuned = dev.clone();
    for _ in 0..8 {
        set(&mut tuned, &x);
        let report = effective_couplings(&tuned)?;
        let fits = DVector::from_iterator(bonds.len(), bonds.iter().map(|&i| report.nn[i].fit));
        let worst = fits
            .iter()
            .map(|f| (f / target - 1.0).abs())
            .fold(0.0, f64::max);
        if worst <= rel_tol {
            return Ok((tuned, report));
        }
        // Rescale the Bessel goals by the observed fit/estimate mismatch.
        for k in 0..bonds.len() {
            goals[k] *= target / fits[k];
        }
        x = solve(&goals, x)?;
    }
    Err(Error::FitFailure(format!(
        "amplitudes did not converge to J = {target} rad/us within {rel_tol}"
    )))
}

/// Largest population reaching the third site of the three-qubit
/// sub-device starting at `first`, from one excitation on its first site,
/// with only the NNN bond between the outer sites kept.
pub fn nnn_suppression_metric(dev: &FloquetDeviceSpec, first: usize, duration: f64) -> Result<f64> {
    dev.validate()?;
    let mut sub = dev.sub_device(first, 3)?;
    sub.g = vec![0.0; 2];
    let psi0 = StateVector::excited_sites(3, &[1])?;
    let (_, pops) = lab_frame_populations(&sub, &psi0, duration, 1e-3)?;
    Ok(pops.iter().map(|p| p[2]).fold(0.0, f64::max))
}
