//! Monte-Carlo calibration of the scaling fit on synthetic data with 1%
//! multiplicative noise.

use fermon_fit::{fit_scaling, stability_sweep, DataPoint, Regime};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

const SIZES: [f64; 9] = [16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 128.0, 192.0, 256.0];
const REPLICATES: usize = 200;
const Z95: f64 = 1.96;

fn noisy(a: f64, c: f64, b: f64, sizes: &[f64], rng: &mut ChaCha20Rng) -> Vec<DataPoint> {
    sizes
        .iter()
        .map(|&l| {
            let f = a * l / (1.0 + c * l.powf(b));
            let e: f64 = StandardNormal.sample(rng);
            DataPoint::new(l, f * (1.0 + 0.01 * e), 0.01 * f)
        })
        .collect()
}

fn fraction(hits: usize) -> f64 {
    hits as f64 / REPLICATES as f64
}

#[test]
fn intervals_cover_true_parameters() {
    for (a, c, b, regime) in [(2.0, 0.1, 0.5, Regime::Subvolume), (2.0, 0.05, 1.2, Regime::Area)] {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let mut cover = [0usize; 3];
        let mut labelled = 0;
        for _ in 0..REPLICATES {
            let fit = fit_scaling(&noisy(a, c, b, &SIZES, &mut rng), None).unwrap();
            for (k, (e, t)) in fit.estimates().iter().zip([a, c, b]).enumerate() {
                cover[k] += e.covers(t, Z95) as usize;
            }
            labelled += (fit.regime == regime) as usize;
        }
        for (name, hits) in ["A", "C", "b"].iter().zip(cover) {
            assert!(fraction(hits) >= 0.9, "b = {b}: {name} covered in {hits}/{REPLICATES}");
        }
        assert!(fraction(labelled) >= 0.9, "b = {b}: regime {regime:?} in {labelled}/{REPLICATES}");
    }
}

#[test]
fn volume_law_reports_its_slope() {
    // With b = 0 only A / (1 + C) is identifiable; the data are a pure line.
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let (mut cover, mut volume) = (0, 0);
    for _ in 0..REPLICATES {
        let fit = fit_scaling(&noisy(1.6, 0.0, 0.0, &SIZES, &mut rng), None).unwrap();
        cover += fit.linear_slope.covers(1.6, Z95) as usize;
        volume += (fit.regime == Regime::Volume) as usize;
    }
    assert!(fraction(cover) >= 0.9, "slope covered in {cover}/{REPLICATES}");
    assert!(fraction(volume) >= 0.9, "volume in {volume}/{REPLICATES}");
}

#[test]
fn unit_exponent_is_recovered_within_five_percent() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    let mut within = 0;
    for _ in 0..REPLICATES {
        let fit = fit_scaling(&noisy(2.0, 0.1, 1.0, &SIZES, &mut rng), None).unwrap();
        within += ((fit.b - 1.0).abs() <= 0.05) as usize;
    }
    assert!(fraction(within) >= 0.95, "{within}/{REPLICATES}");
}

/// Exponents from windows `[16, L_max]` and `[L_min, 256]` over `seeds`
/// synthetic area-law data sets.
fn window_exponents(seeds: u64) -> (Vec<f64>, Vec<f64>) {
    let sizes: Vec<f64> = (1..=16).map(|k| 16.0 * k as f64).collect();
    let l_min: Vec<f64> = (7..=10).map(|k| 16.0 * k as f64).collect();
    let l_max: Vec<f64> = (8..=16).map(|k| 16.0 * k as f64).collect();
    let (mut growing_max, mut growing_min) = (Vec::new(), Vec::new());
    for seed in 0..seeds {
        let mut rng = ChaCha20Rng::seed_from_u64(100 + seed);
        let pts = noisy(1.0, 0.1, 1.0, &sizes, &mut rng);
        let mut grid_min = vec![16.0];
        grid_min.extend(&l_min);
        let sweep = stability_sweep(&pts, &grid_min, &l_max, None).unwrap();
        growing_max.extend(l_max.iter().map(|&m| sweep.cell(16.0, m).unwrap().b));
        growing_min.extend(l_min.iter().map(|&m| sweep.cell(m, 256.0).unwrap().b));
    }
    (growing_max, growing_min)
}

#[test]
fn exponent_is_stable_only_when_small_sizes_are_kept() {
    let (growing_max, growing_min) = window_exponents(20);
    let dev = |bs: &[f64]| bs.iter().map(|b| (b - 1.0).abs()).sum::<f64>() / bs.len() as f64;
    assert!(dev(&growing_max) < 0.03, "{}", dev(&growing_max));
    assert!(dev(&growing_min) > 2.0 * dev(&growing_max), "{} vs {}", dev(&growing_min), dev(&growing_max));
    // Large L_min windows misreport the regime in both directions.
    assert!(growing_min.iter().any(|&b| b < 0.93) && growing_min.iter().any(|&b| b > 1.07));
    assert!(growing_max.iter().all(|&b| (b - 1.0).abs() < 0.1));
}
