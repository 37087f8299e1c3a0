use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use staggered_zed::spectral::{goe_surmise, ratio_statistics};
use staggered_zed::zero_states::{build_fixed_separation_state, entropy_numeric, Chi};

// Large-N GOE mean ratio is 0.5307(1); the 3x3 surmise gives 4 - 2√3 ≈ 0.5359.
#[test]
fn goe_ensemble_mean_ratio() {
    let mut rng = StdRng::seed_from_u64(2024);
    let n = 1000;
    let spectra: Vec<Vec<f64>> = (0..50)
        .map(|_| {
            let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
            let h = (&a + a.transpose()) * 0.5;
            let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
            e.sort_by(f64::total_cmp);
            e
        })
        .collect();
    let stats = ratio_statistics(&spectra, 20).unwrap();
    assert_eq!(stats.count, 50 * (n - 2));
    assert!((stats.mean_r - 0.5307).abs() < 0.003, "mean r = {}", stats.mean_r);
    // the histogram follows the surmise to within sampling noise and its small finite-size bias
    for &(a, b, d) in &stats.bins {
        assert!((d - goe_surmise(0.5 * (a + b))).abs() < 0.12, "bin [{a}, {b}]: {d}");
    }
}

#[test]
fn poisson_mean_ratio() {
    // uncorrelated levels: <r> = 2 ln 2 - 1
    let mut rng = StdRng::seed_from_u64(7);
    let spectra: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            let mut e: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
            e.sort_by(f64::total_cmp);
            e
        })
        .collect();
    let stats = ratio_statistics(&spectra, 10).unwrap();
    assert!((stats.mean_r - (2.0 * 2f64.ln() - 1.0)).abs() < 0.005);
}

#[test]
fn antipodal_entropy_at_large_l() {
    for l in [64usize, 256, 1024, 4096] {
        let st = build_fixed_separation_state(l, l / 2, Chi::Pi).unwrap();
        assert!((entropy_numeric(&st) - (l as f64 / 2.0).ln()).abs() < 1e-9);
    }
}
