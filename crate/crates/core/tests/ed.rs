use std::f64::consts::PI;

use kubo_core::ed::{
    continuity_check, continuity_check_corrupted, half_filling_check, matsubara_correlator_ed, sigma_interacting,
    wick_rotation_check, Boundary, DensityKernel, EdModel, GibbsState, KernelEntry,
};
use kubo_core::response::{kubo_sigma_with, torus_correlator_free, torus_spectrum, FitModel, DEFAULT_OMEGAS};
use kubo_core::{Beta, BlochHamiltonian, Error, C64};

fn spinless_graphene() -> BlochHamiltonian {
    BlochHamiltonian::graphene(1.0).unwrap().with_spin_degeneracy(1.0)
}

fn haldane() -> BlochHamiltonian {
    BlochHamiltonian::haldane(1.0, 0.2, PI / 2.0, 0.0).unwrap()
}

fn free_model(h: &BlochHamiltonian, size: usize) -> EdModel {
    EdModel::new(h, size, false, Boundary::Periodic, None, 0.0, None).unwrap()
}

/// All many-body energies of a free torus: sums over subsets of one-particle levels.
fn fillings(levels: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = (0..1u32 << levels.len())
        .map(|s| (0..levels.len()).filter(|&i| (s >> i) & 1 == 1).map(|i| levels[i]).sum())
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn matsubara(beta: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| 2.0 * PI * k as f64 / beta).collect()
}

#[test]
fn spectrum_matches_free_fermions() {
    for h in [spinless_graphene(), haldane()] {
        for size in [1, 2] {
            let m = free_model(&h, size);
            let state = GibbsState::new(&m.hamiltonian().unwrap(), &m, 1.0, 0.0).unwrap();
            let expect = fillings(&torus_spectrum(&h, size).unwrap());
            let got = state.spectrum();
            assert_eq!(got.len(), expect.len());
            let err = got.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{} L={size}: {err:e}", h.tag());
        }
    }
}

#[test]
fn spinful_hubbard_at_zero_coupling() {
    let m = EdModel::hubbard(1, 1.0, 0.0, None).unwrap();
    let state = GibbsState::new(&m.hamiltonian().unwrap(), &m, 1.0, 0.0).unwrap();
    let levels = torus_spectrum(&BlochHamiltonian::graphene(1.0).unwrap(), 1).unwrap();
    let doubled: Vec<f64> = levels.iter().flat_map(|&e| [e, e]).collect();
    let expect = fillings(&doubled);
    let err = state.spectrum().iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12);
}

#[test]
fn matsubara_correlator_matches_free_bubble() {
    let beta = 10.0;
    let ws = matsubara(beta, 3);
    for h in [spinless_graphene(), haldane()] {
        let m = free_model(&h, 2);
        let ed = matsubara_correlator_ed(&m, beta, 0.0, &ws).unwrap();
        let free = torus_correlator_free(&h, 2, 0.0, Beta::Finite(beta), &ws).unwrap();
        assert_eq!(ed.omegas, free.omegas);
        for (a, b) in ed.values.iter().zip(&free.values) {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn off_grid_frequency_rejected() {
    let m = free_model(&haldane(), 1);
    let r = matsubara_correlator_ed(&m, 10.0, 0.0, &[0.5]);
    assert!(matches!(r, Err(Error::OffGridFrequency { .. })));
}

#[test]
fn diagonal_correlator_even_on_grid() {
    // K_ij(-w) = K_ji(w), so the diagonal is even; every entry is real.
    let m = EdModel::gapped(&haldane(), &DensityKernel::honeycomb_nearest_neighbour(), 0.3, 2).unwrap();
    let ws = matsubara(5.0, 2);
    let neg: Vec<f64> = ws.iter().map(|w| -w).collect();
    let s = matsubara_correlator_ed(&m, 5.0, 0.0, &[ws.clone(), neg].concat()).unwrap();
    for k in 0..ws.len() {
        let (p, n) = (&s.values[1 + k], &s.values[1 + ws.len() + k]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[i][j] - n[j][i]).norm() < 1e-12);
                assert!(p[i][j].im.abs() < 1e-12);
            }
        }
        assert!(p[0][1].re.abs() > 1e-3);
    }
}

#[test]
fn interacting_model_invariants() {
    let k = DensityKernel::honeycomb_nearest_neighbour();
    let m = EdModel::gapped(&haldane(), &k, 0.4, 2).unwrap();
    let h = m.hamiltonian().unwrap();
    assert!(h.is_hermitian());
    assert!(h.hermiticity_defect() < 1e-12);
    assert!(h.commutator(&m.number_operator()).norm() < 1e-12);
    let state = GibbsState::new(&h, &m, 20.0, 0.0).unwrap();
    assert!((state.weight_sum() - 1.0).abs() < 1e-12);
    // v = 0 reduces to the quadratic part for any U.
    let zero = DensityKernel::new(vec![KernelEntry { cell: [0, 0], a: 0, b: 1, value: 0.0 }, KernelEntry { cell: [0, 0], a: 1, b: 0, value: 0.0 }], true).unwrap();
    let plain = EdModel::gapped(&haldane(), &zero, 3.0, 1).unwrap();
    assert_eq!(plain.hamiltonian().unwrap(), plain.kinetic().into_hermitian().unwrap());
}

#[test]
fn asymmetric_kernel_rejected() {
    let k = DensityKernel::new(vec![KernelEntry { cell: [1, 0], a: 0, b: 1, value: 1.0 }], false);
    assert!(matches!(k, Err(Error::AsymmetricKernel(_))));
}

#[test]
fn ground_state_energy_is_sum_of_negative_levels() {
    let h = haldane();
    let m = free_model(&h, 2);
    let state = GibbsState::new(&m.hamiltonian().unwrap(), &m, 1.0, 0.0).unwrap();
    let e0: f64 = torus_spectrum(&h, 2).unwrap().iter().filter(|&&e| e < 0.0).sum();
    assert!((state.spectrum()[0] - e0).abs() < 1e-10);
}

#[test]
fn hubbard_hole_particle_symmetry() {
    let m = EdModel::hubbard(1, 1.0, 0.7, None).unwrap();
    let h = m.hamiltonian().unwrap();
    let sectors = m.space().sectors();
    let spec = |i: usize| kubo_core::linalg::eigvalsh(h.block(i).clone());
    let n = m.n_modes();
    for p in 0..=n {
        let a = spec(p);
        let b = spec(n - p);
        assert_eq!(sectors[p].dim(), sectors[n - p].dim());
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

#[test]
fn half_filling_and_monotonicity() {
    for u in [0.0, 0.5, -0.5] {
        let m = EdModel::hubbard(1, 1.0, u, None).unwrap();
        for beta in [5.0, 10.0, 20.0] {
            let d = half_filling_check(&m, beta, 0.0).unwrap();
            assert!((d - 0.5).abs() < 1e-12, "U={u} beta={beta}: {d}");
        }
    }
    let m = EdModel::hubbard(1, 1.0, 0.0, None).unwrap();
    assert!(half_filling_check(&m, 10.0, 0.5).unwrap() > 0.5);
}

#[test]
fn continuity_holds_and_negative_control_fails() {
    let k = DensityKernel::honeycomb_nearest_neighbour();
    let mut models = vec![
        EdModel::hubbard(1, 1.0, 0.1, None).unwrap(),
        EdModel::hubbard(2, 1.0, -0.1, Some(&[0, 1, 2])).unwrap(),
        EdModel::gapped(&spinless_graphene(), &k, 0.1, 2).unwrap(),
        EdModel::gapped(&haldane(), &k, -0.1, 2).unwrap(),
    ];
    models.push(EdModel::new(&haldane(), 2, false, Boundary::Open, Some(&k), 0.1, None).unwrap());
    for m in &models {
        let r = continuity_check(m).unwrap();
        assert!(r.max_residual <= 1e-12, "{}: {:e}", m.tag(), r.max_residual);
        assert!(r.max_rate > 0.1);
        let bad = continuity_check_corrupted(m).unwrap();
        assert!(bad.max_residual > 0.5, "{}: {:e}", m.tag(), bad.max_residual);
    }
    // On-site-only model: nothing flows.
    let flat = BlochHamiltonian::flat(&[-1.0]).unwrap();
    let m = EdModel::new(&flat, 2, false, Boundary::Periodic, None, 0.0, None).unwrap();
    let r = continuity_check(&m).unwrap();
    assert_eq!(r.max_residual, 0.0);
    assert_eq!(r.max_rate, 0.0);
}

#[test]
fn current_is_commutator_with_position_on_open_cluster() {
    let k = DensityKernel::honeycomb_nearest_neighbour();
    let m = EdModel::new(&haldane(), 2, false, Boundary::Open, Some(&k), 0.3, None).unwrap();
    let h = m.hamiltonian().unwrap();
    for d in 0..2 {
        let j = m.current(d).unwrap();
        assert!(j.hermiticity_defect() < 1e-12);
        let c = h.commutator(&m.position_operator(d)).scale(C64::new(0.0, 1.0));
        assert!(j.sub(&c).norm() < 1e-12);
        for e in 0..2 {
            let x = m.position_operator(e);
            let exact = h.commutator(&m.position_operator(d)).commutator(&x);
            assert!(m.double_commutator(d, e).unwrap().sub(&exact).norm() < 1e-12);
        }
    }
}

#[test]
fn no_spontaneous_current_in_hubbard_model() {
    let m = EdModel::hubbard(1, 1.0, 0.5, None).unwrap();
    let state = GibbsState::new(&m.hamiltonian().unwrap(), &m, 10.0, 0.0).unwrap();
    for d in 0..2 {
        assert!(state.expectation(&m.current(d).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn onsite_double_commutator_vanishes() {
    let flat = BlochHamiltonian::flat(&[-1.0, 1.0]).unwrap();
    let m = EdModel::new(&flat, 2, false, Boundary::Periodic, None, 0.0, None).unwrap();
    assert_eq!(m.double_commutator(0, 1).unwrap().norm(), 0.0);
}

#[test]
fn interacting_sigma_at_zero_coupling_matches_free_torus() {
    let h = haldane();
    let beta = 20.0;
    let m = EdModel::gapped(&h, &DensityKernel::honeycomb_nearest_neighbour(), 0.0, 2).unwrap();
    let ed = sigma_interacting(&m, beta, 0.0, &DEFAULT_OMEGAS).unwrap();
    let free = kubo_sigma_with(&torus_correlator_free(&h, 2, 0.0, Beta::Finite(beta), &DEFAULT_OMEGAS).unwrap(), FitModel::Analytic).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((ed.natural()[i][j] - free.natural()[i][j]).abs() < 1e-8);
        }
    }
}

#[test]
fn doubling_beta_barely_moves_gapped_correlator() {
    let m = EdModel::gapped(&haldane(), &DensityKernel::honeycomb_nearest_neighbour(), 0.05, 2).unwrap();
    let w = 2.0 * PI / 10.0;
    let a = matsubara_correlator_ed(&m, 10.0, 0.0, &[w]).unwrap();
    let b = matsubara_correlator_ed(&m, 20.0, 0.0, &[w]).unwrap();
    let gap = GibbsState::new(&m.hamiltonian().unwrap(), &m, 10.0, 0.0).unwrap().gap();
    let bound = 10.0 * (-10.0 * gap).exp();
    for i in 0..2 {
        for j in 0..2 {
            assert!((a.values[1][i][j] - b.values[1][i][j]).norm() < bound);
        }
    }
}

#[test]
fn wick_identity_on_open_cluster() {
    let k = DensityKernel::honeycomb_nearest_neighbour();
    for u in [0.0, 0.05] {
        let m = EdModel::new(&haldane(), 2, false, Boundary::Open, Some(&k), u, None).unwrap();
        let w = 0.1;
        let c = wick_rotation_check(&m, 20.0, 0.0, (1e10f64).ln() / w, w).unwrap();
        assert!(c.truncation <= 1e-10 * (1.0 + 1e-9));
        for row in c.difference {
            for d in row {
                assert!(d < 1e-6, "{:?}", c.difference);
            }
        }
    }
    let m = free_model(&haldane(), 1);
    assert!(wick_rotation_check(&m, 20.0, 0.0, 10.0, 0.0).is_err());
}

#[test]
fn mode_cap_enforced() {
    let r = EdModel::hubbard(3, 1.0, 0.0, Some(&[0]));
    assert!(matches!(r, Err(Error::TooManyModes(36))));
    let spinless = EdModel::new(&spinless_graphene(), 3, false, Boundary::Periodic, None, 0.0, Some(&[0, 1, 2]));
    assert_eq!(spinless.unwrap().n_modes(), 18);
}
