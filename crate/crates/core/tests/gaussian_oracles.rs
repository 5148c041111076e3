use fermon_core::bdg::{build_kitaev, kac_coefficients, BdgEngine, BdgState, Dissipation, QuadraticOperator};
use fermon_core::linalg::expm_hermitian;
use fermon_core::observables::{nambu_entropy, u1_entropy};
use fermon_core::slater::{HoppingHamiltonian, SlaterEngine, SlaterState};
use fermon_core::{NoiseStream, Observable, TrajectoryEngine, C64};
use fermon_oracle::{self as oracle, Fock};
use ndarray::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, m), |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

fn random_quadratic(rng: &mut ChaCha8Rng, l: usize) -> QuadraticOperator {
    let a = random_matrix(rng, l, l);
    let hop = &a + &a.t().mapv(|z| z.conj());
    let b = random_matrix(rng, l, l);
    let pair = &b - &b.t();
    QuadraticOperator::new(hop, pair, 0.0).unwrap()
}

fn random_bdg(rng: &mut ChaCha8Rng, l: usize) -> BdgState {
    let mut s = BdgState::vacuum(l);
    let op = random_quadratic(rng, l);
    s.unitary_step(&expm_hermitian(&op.nambu(), C64::new(0.0, -1.0)).unwrap());
    s
}

fn oracle_state(fock: &Fock, s: &BdgState) -> Array1<C64> {
    fock.bogoliubov_vacuum(&s.u().to_owned(), &s.v().to_owned())
}

fn tight_binding_fock(fock: &Fock, j: f64) -> Array2<C64> {
    let h = HoppingHamiltonian::new(j, fock.sites()).matrix();
    fock.quadratic(&h, &Array2::zeros(h.raw_dim()), 0.0)
}

#[test]
fn slater_correlations_match_fock_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = SlaterState::from_orbitals(random_matrix(&mut rng, 6, 3)).unwrap();
    let fock = Fock::new(6);
    let psi = fock.slater_state(s.orbitals());
    let (g, _) = fock.correlations(&psi);
    let d = s.correlation_matrix();
    assert!(oracle::max_abs_diff(&g, &d) < 1e-12);
    let trace: f64 = (0..6).map(|i| d[[i, i]].re).sum();
    assert!((trace - 3.0).abs() < 1e-12);
}

#[test]
fn slater_unitary_step_matches_statevector() {
    let fock = Fock::new(8);
    let s0 = SlaterState::neel(8).unwrap();
    let h = HoppingHamiltonian::new(1.0, 8);
    let mut s = s0.clone();
    s.unitary_step(&h.propagator(0.37));
    let psi = oracle::expm_hermitian(&tight_binding_fock(&fock, 1.0), C64::new(0.0, -0.37))
        .dot(&fock.slater_state(s0.orbitals()));
    let (g, _) = fock.correlations(&psi);
    assert!(oracle::max_abs_diff(&g, &s.correlation_matrix()) < 1e-12);
}

#[test]
fn slater_composite_step_matches_fock_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for l in [2, 4] {
        let fock = Fock::new(l);
        let ham = tight_binding_fock(&fock, 1.0);
        let ms: Vec<_> = (0..l).map(|j| fock.n(j)).collect();
        let q = vec![1.0; l];
        let (gamma, dt) = (0.5, 0.05);
        let start = SlaterState::from_orbitals(random_matrix(&mut rng, l, l / 2)).unwrap();
        let mut engine = SlaterEngine::new(start.clone(), 1.0, gamma);
        let mut psi = fock.slater_state(start.orbitals());
        let mut noise = NoiseStream::new(3, l as u64);
        for _ in 0..20 {
            let dw = noise.wiener_increments(l, gamma, dt);
            engine.step(&dw, dt).unwrap();
            psi = fock.qsd_step(&psi, &ham, &ms, &q, &dw, gamma, dt);
            let phi = fock.slater_state(engine.state().orbitals());
            assert!(oracle::fidelity(&psi, &phi) >= 1.0 - 1e-10);
        }
    }
}

#[test]
fn slater_entropy_tracks_unitary_statevector_evolution() {
    let l = 8;
    let fock = Fock::new(l);
    let prop = oracle::expm_hermitian(&tight_binding_fock(&fock, 1.0), C64::new(0.0, -0.01));
    let mut engine = SlaterEngine::neel(l, 1.0, 0.0).unwrap();
    let mut psi = fock.slater_state(engine.state().orbitals());
    let mut previous = 0.0;
    for step in 1..=300 {
        engine.step(&[0.0; 8], 0.01).unwrap();
        psi = prop.dot(&psi);
        if step % 20 == 0 {
            let s = engine.observe(&Observable::Entropy { ell: 4 }).unwrap();
            let exact = oracle::entanglement_entropy(&psi, l, 4);
            assert!((s - exact).abs() < 1e-8, "t = {}: {s} vs {exact}", step as f64 * 0.01);
            if step <= 100 {
                assert!(s > previous);
            }
            previous = s;
        }
    }
}

#[test]
fn bdg_unitary_flow_from_vacuum_matches_fock_space() {
    let l = 4;
    let fock = Fock::new(l);
    let ham = build_kitaev(l, 1.0, 0.35).unwrap();
    let mut s = BdgState::vacuum(l);
    s.unitary_step(&expm_hermitian(&ham.nambu(), C64::new(0.0, -0.6)).unwrap());
    let hf = fock.quadratic(&ham.hop, &ham.pair, ham.constant);
    let psi = oracle::expm_hermitian(&hf, C64::new(0.0, -0.6)).dot(&fock.vacuum());
    let (g, f) = fock.correlations(&psi);
    let (g2, f2) = s.pair_correlations();
    assert!(oracle::max_abs_diff(&g, &g2) < 1e-10);
    assert!(oracle::max_abs_diff(&f, &f2) < 1e-10);
}

#[test]
fn bdg_unitary_step_from_random_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let l = 6;
    let fock = Fock::new(l);
    let s0 = random_bdg(&mut rng, l);
    let ham = build_kitaev(l, 1.0, 0.5).unwrap();
    let mut s = s0.clone();
    s.unitary_step(&expm_hermitian(&ham.nambu(), C64::new(0.0, -0.05)).unwrap());
    let hf = fock.quadratic(&ham.hop, &ham.pair, 0.0);
    let psi = oracle::expm_hermitian(&hf, C64::new(0.0, -0.05)).dot(&oracle_state(&fock, &s0));
    let (g, f) = fock.correlations(&psi);
    let (g2, f2) = s.pair_correlations();
    assert!(oracle::max_abs_diff(&g, &g2) < 1e-10);
    assert!(oracle::max_abs_diff(&f, &f2) < 1e-10);
}

#[test]
fn bdg_pair_correlations_and_entropy_match_fock_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for l in [5, 6] {
        let fock = Fock::new(l);
        let s = random_bdg(&mut rng, l);
        let psi = oracle_state(&fock, &s);
        let (g, f) = fock.correlations(&psi);
        let (g2, f2) = s.pair_correlations();
        assert!(oracle::max_abs_diff(&g, &g2) < 1e-11);
        assert!(oracle::max_abs_diff(&f, &f2) < 1e-11);
        for ell in 1..l {
            let exact = oracle::entanglement_entropy(&psi, l, ell);
            assert!((nambu_entropy(&g2, &f2, ell).unwrap() - exact).abs() < 1e-9);
        }
        let parity = oracle::expectation(&fock.parity(), &psi).re;
        assert!((s.parity() - parity).abs() < 1e-10);
    }
}

fn bdg_composite_fidelity(dissipation: Dissipation, seed: u64) -> f64 {
    let l = 4;
    let (gamma, dt) = (0.5, 0.05);
    let fock = Fock::new(l);
    let ham = build_kitaev(l, 1.0, 0.5).unwrap();
    let hf = fock.quadratic(&ham.hop, &ham.pair, 0.0);
    let (ms, q): (Vec<_>, Vec<f64>) = match &dissipation {
        Dissipation::Onsite => ((0..l).map(|j| fock.n(j)).collect(), vec![1.0; l]),
        Dissipation::LongRange(k) => (
            (0..l)
                .map(|i| {
                    let op = k.measured_operator(i);
                    fock.quadratic(&op.hop, &op.pair, op.constant)
                })
                .collect(),
            vec![0.0; l],
        ),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = NoiseStream::new(seed, 0);
    let mut worst = 1.0_f64;
    for _ in 0..100 {
        let start = random_bdg(&mut rng, l);
        let psi0 = oracle_state(&fock, &start);
        let mut engine = BdgEngine::new(start, ham.clone(), dissipation.clone(), gamma).unwrap();
        let dw = noise.wiener_increments(l, gamma, dt);
        engine.step(&dw, dt).unwrap();
        let psi = fock.qsd_step(&psi0, &hf, &ms, &q, &dw, gamma, dt);
        worst = worst.min(oracle::fidelity(&psi, &oracle_state(&fock, engine.state())));
    }
    worst
}

#[test]
fn bdg_onsite_composite_step_matches_fock_space() {
    let f = bdg_composite_fidelity(Dissipation::Onsite, 6);
    assert!(f >= 1.0 - 1e-9, "fidelity {f}");
}

#[test]
fn bdg_longrange_composite_step_matches_fock_space() {
    let f = bdg_composite_fidelity(Dissipation::LongRange(kac_coefficients(4, 1.0).unwrap()), 7);
    assert!(f >= 1.0 - 1e-9, "fidelity {f}");
}

#[test]
fn longrange_operators_square_to_constants() {
    let l = 4;
    let fock = Fock::new(l);
    let k = kac_coefficients(l, 1.0).unwrap();
    let p = k.squares();
    for i in 0..l {
        let op = k.measured_operator(i);
        let m = fock.quadratic(&op.hop, &op.pair, op.constant);
        assert!(oracle::max_abs_diff(&m, &oracle::dagger(&m)) < 1e-14);
        let m2 = m.dot(&m);
        let expect = Array2::<C64>::eye(16).mapv(|z| z * p[i]);
        assert!(oracle::max_abs_diff(&m2, &expect) < 1e-12);
    }
}

#[test]
fn longrange_expectations_match_fock_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let l = 5;
    let fock = Fock::new(l);
    let k = kac_coefficients(l, 1.5).unwrap();
    let s = random_bdg(&mut rng, l);
    let psi = oracle_state(&fock, &s);
    let (g, f) = s.pair_correlations();
    let m = k.expectations(&g, &f);
    for i in 0..l {
        let op = k.measured_operator(i);
        let exact = oracle::expectation(&fock.quadratic(&op.hop, &op.pair, op.constant), &psi).re;
        assert!((m[i] - exact).abs() < 1e-11);
        assert!((op.expectation(&g, &f) - exact).abs() < 1e-11);
    }
}

#[test]
fn pairing_free_bdg_matches_slater_on_shared_noise() {
    let l = 8;
    let (gamma, dt) = (0.5, 0.01);
    let hop = HoppingHamiltonian::new(1.0, l).matrix();
    let ham = QuadraticOperator::new(hop, Array2::zeros((l, l)), 0.0).unwrap();
    let mut bdg = BdgEngine::new(BdgState::neel(l).unwrap(), ham, Dissipation::Onsite, gamma).unwrap();
    let mut slater = SlaterEngine::neel(l, 1.0, gamma).unwrap();
    let mut noise = NoiseStream::new(11, 0);
    for _ in 0..200 {
        let dw = noise.wiener_increments(l, gamma, dt);
        bdg.step(&dw, dt).unwrap();
        slater.step(&dw, dt).unwrap();
        let ob = Observable::Entropy { ell: 4 };
        assert!((bdg.observe(&ob).unwrap() - slater.observe(&ob).unwrap()).abs() < 1e-8);
    }
    let d = slater.state().correlation_matrix();
    let (g, _) = bdg.state().pair_correlations();
    assert!(oracle::max_abs_diff(&d, &g) < 1e-8);
    assert!((u1_entropy(&d, 3).unwrap() - nambu_entropy(&g, &Array2::zeros((l, l)), 3).unwrap()).abs() < 1e-8);
}
