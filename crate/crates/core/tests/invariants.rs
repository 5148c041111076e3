use fermon_core::bdg::BdgEngine;
use fermon_core::ed::{EdEngine, TvParams};
use fermon_core::ladder::{bloch_step_matrix, fln, init_random_halffilling, projective_sweep, unitary_update, LadderParams};
use fermon_core::linalg::{eigvalsh, hermiticity_defect, isometry_defect};
use fermon_core::slater::SlaterEngine;
use fermon_core::{
    ensemble_average, run_ensemble, steady_state_average, Execution, NoiseStream, Observable, StepSchedule, TimeSeries,
    TrajectoryEngine,
};
use proptest::prelude::*;

fn drive<E: TrajectoryEngine>(engine: &mut E, seed: u64, steps: usize, dt: f64) {
    let mut noise = NoiseStream::new(seed, 0);
    for _ in 0..steps {
        let dw = noise.wiener_increments(engine.noise_channels(), engine.gamma(), dt);
        engine.step(&dw, dt).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slater_state_stays_an_isometry(seed in any::<u64>(), gamma in 0.0f64..3.0, half in 1usize..6) {
        let l = 2 * half;
        let mut e = SlaterEngine::neel(l, 1.0, gamma).unwrap();
        drive(&mut e, seed, 40, 0.05);
        prop_assert!(isometry_defect(e.state().orbitals()) < 1e-10);
        let d = e.state().correlation_matrix();
        let trace: f64 = (0..l).map(|i| d[[i, i]].re).sum();
        prop_assert!((trace - half as f64).abs() < 1e-10);
        for x in eigvalsh(&d).unwrap().iter() {
            prop_assert!(*x > -1e-10 && *x < 1.0 + 1e-10);
        }
        for ell in 1..l {
            let s = e.observe(&Observable::Entropy { ell }).unwrap();
            prop_assert!(s >= 0.0 && s <= ell.min(l - ell) as f64 * std::f64::consts::LN_2 + 1e-10);
        }
    }

    #[test]
    fn bdg_frame_stays_unitary_with_fixed_parity(
        seed in any::<u64>(),
        gamma in 0.0f64..2.0,
        h in 0.0f64..2.0,
        alpha in prop::option::of(0.0f64..3.0),
    ) {
        let l = 6;
        let mut e = match alpha {
            Some(a) => BdgEngine::kitaev_longrange(l, 1.0, h, gamma, a).unwrap(),
            None => BdgEngine::kitaev_onsite(l, 1.0, h, gamma).unwrap(),
        };
        drive(&mut e, seed, 40, 0.05);
        e.check_invariants().unwrap();
        prop_assert!(e.state().unitarity_defect() < 1e-9);
        prop_assert!((e.state().parity() - e.initial_parity()).abs() < 1e-6);
    }

    #[test]
    fn ed_state_keeps_norm_and_particle_number(seed in any::<u64>(), gamma in 0.0f64..2.0, w in -1.0f64..1.0) {
        let l = 6;
        let mut e = EdEngine::tv_neel(l, TvParams { t: 1.0, w, v: 1.0 }, gamma).unwrap();
        drive(&mut e, seed, 20, 0.05);
        e.check_invariants().unwrap();
        let n: f64 = (0..l).map(|site| e.observe(&Observable::Occupation { site }).unwrap()).sum();
        prop_assert!((n - 3.0).abs() < 1e-12);
        let ipr = e.observe(&Observable::Ipr).unwrap();
        prop_assert!(ipr > 0.0 && ipr <= 1.0 + 1e-12);
    }

    #[test]
    fn ladder_correlations_stay_physical(
        seed in any::<u64>(),
        p1 in 0.0f64..1.0,
        p2 in 0.0f64..1.0,
        t2 in 0.0f64..2.0,
    ) {
        let l = 6;
        let p = LadderParams { t1: 1.0, t2, t12: std::f64::consts::FRAC_PI_2, p1, p2, tau_u: 1.0, n_st: 0, m: 1 };
        let r = bloch_step_matrix(&p, l);
        let mut stream = NoiseStream::new(seed, 0);
        let mut d = init_random_halffilling(l, &mut stream);
        prop_assert!(fln(&d, l / 2).unwrap().abs() < 1e-12);
        for _ in 0..8 {
            d = unitary_update(&d, &r);
            projective_sweep(&mut d, p1, p2, &mut stream).unwrap();
            prop_assert!(hermiticity_defect(&d) < 1e-10);
            let trace: f64 = (0..2 * l).map(|a| d[[a, a]].re).sum();
            prop_assert!((trace - l as f64).abs() < 1e-9);
            for x in eigvalsh(&d).unwrap().iter() {
                prop_assert!(*x > -1e-10 && *x < 1.0 + 1e-10);
            }
            prop_assert!(fln(&d, l / 2).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn noise_streams_are_reproducible(seed in any::<u64>(), stream in any::<u64>()) {
        let a = NoiseStream::new(seed, stream).wiener_increments(16, 0.5, 0.01);
        let b = NoiseStream::new(seed, stream).wiener_increments(16, 0.5, 0.01);
        prop_assert_eq!(&a, &b);
        let c = NoiseStream::new(seed, stream.wrapping_add(1)).wiener_increments(16, 0.5, 0.01);
        prop_assert_ne!(a, c);
    }

    #[test]
    fn ensemble_average_is_linear(values in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 2..8), k in -3.0f64..3.0) {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let obs = vec![Observable::Ipr];
        let make = |scale: f64| -> Vec<TimeSeries> {
            values
                .iter()
                .map(|v| TimeSeries { times: times.clone(), observables: obs.clone(), values: vec![v.iter().map(|x| x * scale).collect()] })
                .collect()
        };
        let base = ensemble_average(&make(1.0)).unwrap();
        let scaled = ensemble_average(&make(k)).unwrap();
        for t in 0..4 {
            prop_assert!((scaled.mean_series[0][t] - k * base.mean_series[0][t]).abs() < 1e-12);
            prop_assert!((scaled.stderr_series[0][t] - k.abs() * base.stderr_series[0][t]).abs() < 1e-12);
            prop_assert!(base.stderr_series[0][t] >= 0.0);
        }
    }

    #[test]
    fn window_average_is_stable_under_stride_refinement(a in 0.1f64..2.0, rate in 0.1f64..3.0) {
        // Smooth saturating curve sampled with two strides.
        let f = |t: f64| a * (1.0 - (-rate * t).exp());
        let result = |n: usize| {
            let times: Vec<f64> = (0..=n).map(|i| 10.0 * i as f64 / n as f64).collect();
            let values = vec![times.iter().map(|&t| f(t)).collect()];
            let s = TimeSeries { times, observables: vec![Observable::Ipr], values };
            ensemble_average(&[s.clone(), s]).unwrap()
        };
        let coarse = steady_state_average(&result(200), &Observable::Ipr, 5.0, 10.0).unwrap();
        let fine = steady_state_average(&result(800), &Observable::Ipr, 5.0, 10.0).unwrap();
        prop_assert!((coarse.value - fine.value).abs() < 1e-4 * a);
    }
}

#[test]
fn ensembles_do_not_depend_on_execution_mode() {
    let schedule = StepSchedule::new(0.02, 1.0, 5).unwrap();
    let obs = [Observable::Entropy { ell: 4 }, Observable::Occupation { site: 0 }];
    let factory = |_: usize| SlaterEngine::neel(8, 1.0, 0.7);
    let seq = run_ensemble(12, 5, factory, &schedule, &obs, Execution::Sequential).unwrap();
    let par = run_ensemble(12, 5, factory, &schedule, &obs, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let three = pool.install(|| run_ensemble(12, 5, factory, &schedule, &obs, Execution::Parallel).unwrap());
    assert_eq!(seq, three);
}
