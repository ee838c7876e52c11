use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use qchain::chain::{
    lab_frame_populations, solve_symmetric_amplitudes, xx_hamiltonian, ChainSpec, DissipationSpec,
    FloquetDeviceSpec,
};
use qchain::noise::{run_ensemble, sample_noise, Observable, TrajectoryEngine, TrajectoryModel};
use qchain::qcore::{
    evolve_state, lindblad_rhs, liouvillian_matrix, site_op, steady_states, unvectorize, vectorize,
    Axis, Hamiltonian, Jump, LindbladModel, LinearOperator, StateVector, TimeGrid,
};
use qchain::symmetry::{build_c, center_jumps, gate_operator, Gate};
use qchain::C64;

fn mhz(f: f64) -> f64 {
    2.0 * PI * f
}

fn random_density(d: usize, re: &[f64], im: &[f64]) -> DMatrix<C64> {
    let a = DMatrix::from_fn(d, d, |r, c| C64::new(re[r * d + c], im[r * d + c]));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn unitarity_defect(u: &LinearOperator) -> f64 {
    (u.adjoint().matmul(u).to_dense() - DMatrix::identity(u.dim(), u.dim())).camax()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schrodinger_preserves_norm(j in prop::collection::vec(0.1f64..3.0, 3), site in 1usize..=4) {
        let spec = ChainSpec::new(4, j, vec![0.0; 2]).unwrap();
        let h = Hamiltonian::from_static(4, xx_hamiltonian(&spec).unwrap());
        let psi0 = StateVector::excited_sites(4, &[site]).unwrap();
        let grid = TimeGrid::new(0.0, 1e-3, 2000, 100).unwrap();
        for s in evolve_state(&h, &psi0, &grid).unwrap() {
            prop_assert!((s.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn liouvillian_matches_rhs(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
        g in 0.0f64..2.0,
        j in 0.1f64..2.0,
    ) {
        let h = Hamiltonian::from_static(2, xx_hamiltonian(&ChainSpec::uniform(2, j).unwrap()).unwrap());
        let jumps = vec![
            Jump::new(site_op(1, Axis::Minus, 2).unwrap(), g),
            Jump::new(site_op(2, Axis::Z, 2).unwrap(), 0.5 * g),
        ];
        let model = LindbladModel::new(h, jumps).unwrap();
        let rho = random_density(4, &re, &im);
        let via_matrix = unvectorize(&(liouvillian_matrix(&model).unwrap().to_dense() * vectorize(&rho)));
        let direct = lindblad_rhs(&model, 0.0, &rho);
        prop_assert!((via_matrix - direct).camax() < 1e-12);
    }

    #[test]
    fn steady_projection_is_a_density(
        re in prop::collection::vec(-1.0f64..1.0, 64),
        im in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let spec = ChainSpec::uniform(3, 1.0).unwrap();
        let model = LindbladModel::new(
            Hamiltonian::from_static(3, xx_hamiltonian(&spec).unwrap()),
            DissipationSpec::symmetric(2, 1.0).pump_loss_jumps(3).unwrap(),
        )
        .unwrap();
        let ss = steady_states(&liouvillian_matrix(&model).unwrap()).unwrap();
        let rho = random_density(8, &re, &im);
        let p = ss.project(&rho).unwrap();
        prop_assert!((&p - p.adjoint()).camax() < 1e-9);
        prop_assert!((p.trace() - C64::new(1.0, 0.0)).norm() < 1e-9);
        // Stationary under the generator.
        prop_assert!(lindblad_rhs(&model, 0.0, &p).camax() < 1e-8);
    }

    #[test]
    fn gates_are_unitary(theta in -10.0f64..10.0, a in 1usize..=3, b in 1usize..=3) {
        let mut gates = vec![Gate::Rz { theta, site: a }, Gate::X { site: a }];
        if a != b {
            gates.extend([Gate::HalfSwap { a, b }, Gate::ISwap { a, b }]);
        }
        for g in gates {
            let defect = unitarity_defect(&gate_operator(g, 3).unwrap());
            prop_assert!(defect < 1e-12);
        }
    }

    #[test]
    fn palindromic_chains_conserve_sectors(
        j in prop::collection::vec(0.2f64..3.0, 2),
        j2 in 0.0f64..1.0,
    ) {
        let c = build_c(5).unwrap();
        let spec = ChainSpec::new(5, vec![j[0], j[1], j[1], j[0]], vec![0.0, 0.0, 0.0])
            .unwrap()
            .with_center_nnn(j2)
            .unwrap();
        let check = c.check(&xx_hamiltonian(&spec).unwrap(), &center_jumps(5).unwrap());
        prop_assert!(check.passed, "{check:?}");
    }
}

#[test]
fn noise_signs_are_fair_and_independent() {
    let real = sample_noise(7, 20_000, &[1, 3], 7.5e-3).unwrap();
    let n: f64 = 20_000.0 * 2.0;
    let (mut s1, mut s2, mut s12) = (0.0, 0.0, 0.0);
    for sec in 0..20_000 {
        for k in 0..2 {
            let (a, b) = real.eta(sec, k);
            s1 += f64::from(a);
            s2 += f64::from(b);
            s12 += f64::from(a) * f64::from(b);
        }
    }
    // Five standard deviations of a fair ±1 mean.
    let bound = 5.0 / n.sqrt();
    assert!((s1 / n).abs() < bound && (s2 / n).abs() < bound && (s12 / n).abs() < bound);
    assert_eq!(real, sample_noise(7, 20_000, &[1, 3], 7.5e-3).unwrap());
    assert_ne!(real, sample_noise(8, 20_000, &[1, 3], 7.5e-3).unwrap());
}

#[test]
fn ensembles_do_not_depend_on_worker_count() {
    let spec = ChainSpec::uniform(3, mhz(11.0)).unwrap();
    let model = TrajectoryModel::new(
        Hamiltonian::from_static(3, xx_hamiltonian(&spec).unwrap()),
        vec![2],
        1.0,
        7.5e-3,
    );
    let grid = TimeGrid::new(0.0, 2.5e-3, 400, 20).unwrap();
    let obs = vec![Observable::new("z1", site_op(1, Axis::Z, 3).unwrap()).unwrap()];
    let engine = TrajectoryEngine::new(model, grid, obs).unwrap();
    let psi = StateVector::excited_sites(3, &[1]).unwrap();
    let seeds: Vec<u64> = (100..116).collect();
    let one = run_ensemble(&engine, &psi, &seeds, 1).unwrap();
    let three = run_ensemble(&engine, &psi, &seeds, 3).unwrap();
    assert_eq!(one, three);
}

/// Holds where the second-order shifts `g²/ν` stay small over the run;
/// at g/2π = 2 MHz they accumulate well under a radian in 1 μs.
#[test]
fn lab_frame_follows_effective_chain_on_three_qubits() {
    let layout = FloquetDeviceSpec::three_frequency_layout(3, mhz(2.0), 0.0, 1.2).unwrap();
    let (tuned, report) = solve_symmetric_amplitudes(&layout, mhz(0.6), 1e-3).unwrap();
    let psi0 = StateVector::excited_sites(3, &[1]).unwrap();
    let duration = 1.0;
    let (times, lab) = lab_frame_populations(&tuned, &psi0, duration, 2e-3).unwrap();
    let h = Hamiltonian::from_static(3, xx_hamiltonian(&report.chain).unwrap());
    let n = times.len() - 1;
    let grid = TimeGrid::new(0.0, duration / (10 * n) as f64, 10 * n, 10).unwrap();
    let eff = evolve_state(&h, &psi0, &grid).unwrap();
    let worst = lab
        .iter()
        .zip(&eff)
        .flat_map(|(a, b)| {
            let b = b.site_occupations();
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 0.05, "max population difference {worst}");
}
