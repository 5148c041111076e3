use fermon_fit::{fit_lorentzian, fit_scaling, DataPoint, Regime};
use proptest::prelude::*;

const SIZES: [f64; 7] = [16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 128.0];

fn curve(a: f64, c: f64, b: f64, wiggle: &[f64]) -> Vec<DataPoint> {
    SIZES
        .iter()
        .zip(wiggle)
        .map(|(&l, &e)| {
            let f = a * l / (1.0 + c * l.powf(b));
            DataPoint::new(l, f * (1.0 + e), 0.01 * f)
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rescaling_entropies_rescales_only_the_amplitude(
        c in 0.01f64..0.5,
        b in 0.3f64..1.5,
        s in 0.1f64..10.0,
        wiggle in prop::collection::vec(-0.02f64..0.02, 7),
    ) {
        let base = curve(2.0, c, b, &wiggle);
        let scaled: Vec<DataPoint> = base.iter().map(|p| DataPoint::new(p.x, s * p.y, s * p.sigma)).collect();
        let f1 = fit_scaling(&base, None).unwrap();
        let f2 = fit_scaling(&scaled, None).unwrap();
        for &l in &SIZES {
            prop_assert!(rel(f2.evaluate(l), s * f1.evaluate(l)) < 1e-6, "curve at L = {}", l);
        }
        // Parameters along an unresolved direction may stop anywhere on it.
        let [ea, ec, eb] = f1.estimates();
        if ea.stderr.is_finite() && ec.stderr.is_finite() && eb.stderr.is_finite() {
            prop_assert!((f2.a - s * f1.a).abs() <= 1e-3 * s * ea.stderr.max(1e-9 * f1.a), "A {} vs {}", f2.a, s * f1.a);
            prop_assert!((f2.c - f1.c).abs() <= 1e-3 * ec.stderr.max(1e-9 * f1.c));
            prop_assert!((f2.b - f1.b).abs() <= 1e-3 * eb.stderr.max(1e-9));
        }
        prop_assert_eq!(f1.regime, f2.regime);

        let exact = curve(2.0, c, b, &[0.0; 7]);
        let exact_scaled: Vec<DataPoint> = exact.iter().map(|p| DataPoint::new(p.x, s * p.y, 0.0)).collect();
        let g = fit_scaling(&exact_scaled, None).unwrap();
        prop_assert!(rel(g.a, 2.0 * s) < 1e-6 && rel(g.c, c) < 1e-6 && rel(g.b, b) < 1e-6, "{:?}", g);
    }

    #[test]
    fn fixed_exponent_never_beats_the_free_fit(
        c in 0.001f64..1.0,
        b in 0.0f64..2.0,
        fixed in prop::sample::select(vec![0.5, 0.75, 1.0, 1.25]),
        wiggle in prop::collection::vec(-0.05f64..0.05, 7),
    ) {
        let pts = curve(1.0, c, b, &wiggle);
        let free = fit_scaling(&pts, None).unwrap();
        let pinned = fit_scaling(&pts, Some(fixed)).unwrap();
        prop_assert!(pinned.residual_norm >= free.residual_norm * (1.0 - 1e-12), "{} < {}", pinned.residual_norm, free.residual_norm);
    }

    #[test]
    fn curve_meets_asymptotes_at_the_crossover(c in 0.001f64..1.0, b in 0.2f64..1.0) {
        let fit = fit_scaling(&curve(1.5, c, b, &[0.0; 7]), None).unwrap();
        prop_assume!(fit.regime != Regime::Volume);
        let f = fit.evaluate(fit.l0);
        prop_assert!(f <= fit.linear_asymptote(fit.l0) && 2.0 * f >= fit.linear_asymptote(fit.l0) * (1.0 - 1e-12));
        prop_assert!(f <= fit.power_asymptote(fit.l0) && 2.0 * f >= fit.power_asymptote(fit.l0) * (1.0 - 1e-12));
        let samples: Vec<f64> = (16..=128).map(|l| fit.evaluate(l as f64)).collect();
        prop_assert!(samples.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn lorentzian_amplitude_scales_with_the_data(q in 0.5f64..5.0, beta in 0.7f64..2.5, s in 0.1f64..10.0) {
        let gammas = [8e-3, 2e-2, 5e-2, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
        let pts = |scale: f64| -> Vec<DataPoint> {
            gammas.iter().map(|&g| DataPoint::new(g, scale * 4.0 / (1.0 + q * g.powf(beta)), 0.0)).collect()
        };
        let f1 = fit_lorentzian(&pts(1.0)).unwrap();
        let f2 = fit_lorentzian(&pts(s)).unwrap();
        prop_assert!(rel(f2.k, s * f1.k) < 1e-6 && rel(f1.k, 4.0) < 1e-6);
        prop_assert!(rel(f2.q, f1.q) < 1e-6 && rel(f2.beta, f1.beta) < 1e-6);
    }
}
