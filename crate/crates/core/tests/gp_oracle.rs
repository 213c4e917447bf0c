mod common;

use common::dense_posterior;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stlmine::miner::{ucb, GpConfig, GpHyper, GpModel};

fn problem(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.random_range(2..=50);
    let d = rng.random_range(1..=100);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y = x.iter().map(|r| r.iter().take(3).map(|v| (2.0 * v).sin()).sum::<f64>() * 3.0 + 1.0).collect();
    (x, y)
}

#[test]
fn posterior_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let (x, y) = problem(&mut rng);
        let d = x[0].len() as f64;
        let hyper = GpHyper {
            lengthscale: rng.random_range(0.3..1.5) * d.sqrt(),
            signal_var: rng.random_range(0.5..2.0),
            noise_var: rng.random_range(1e-3..1e-1),
        };
        let standardize = rng.random_bool(0.5);
        let m = GpModel::with_hyper(&x, &y, hyper, standardize).unwrap();
        assert_eq!(m.jitter(), 0.0);
        let (ym, ys) = if standardize { common::mean_std(&y) } else { (0.0, 1.0) };
        for _ in 0..5 {
            let q: Vec<f64> = (0..x[0].len()).map(|_| rng.random_range(-1.2..1.2)).collect();
            let (mean, var) = m.posterior(&q).unwrap();
            let (wm, wv) = dense_posterior(&x, &y, hyper.lengthscale, hyper.signal_var, hyper.noise_var, ym, ys, &q);
            assert!((mean - wm).abs() <= 1e-8, "mean {mean} vs {wm}");
            assert!((var - wv).abs() <= 1e-8, "var {var} vs {wv}");
        }
    }
}

#[test]
fn noiseless_model_interpolates() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..5 {
        let (x, y) = problem(&mut rng);
        let hyper = GpHyper { lengthscale: (x[0].len() as f64).sqrt(), signal_var: 1.0, noise_var: 1e-10 };
        let m = GpModel::with_hyper(&x, &y, hyper, true).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (mean, var) = m.posterior(xi).unwrap();
            assert!((mean - yi).abs() <= 1e-6, "{mean} vs {yi}");
            assert!(var <= 1e-6);
        }
    }
}

#[test]
fn fitted_model_is_a_sensible_regressor() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let x: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
    let f = |p: &[f64]| p[0].sin() + 0.5 * p[1];
    let y: Vec<f64> = x.iter().map(|p| f(p)).collect();
    let m = GpModel::fit(&x, &y, &GpConfig::default()).unwrap();
    let mut err = 0.0;
    for _ in 0..100 {
        let q = [rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5)];
        err += (m.posterior(&q).unwrap().0 - f(&q)).abs();
    }
    assert!(err / 100.0 < 0.15, "mean abs error {}", err / 100.0);
    let again = GpModel::fit(&x, &y, &GpConfig::default()).unwrap();
    assert_eq!(m.hyper(), again.hyper());
}

#[test]
fn ucb_is_monotone_in_beta() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let (x, y) = problem(&mut rng);
    let m = GpModel::with_hyper(&x, &y, GpHyper { lengthscale: 3.0, signal_var: 1.0, noise_var: 1e-2 }, true).unwrap();
    let betas = [0.0, 0.1, 1.0, 4.0, 16.0, 100.0];
    for _ in 0..100 {
        let q: Vec<f64> = (0..x[0].len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (mean, var) = m.posterior(&q).unwrap();
        let vals: Vec<f64> = betas.iter().map(|b| ucb(mean, var, *b)).collect();
        assert_eq!(vals[0], mean);
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }
}
