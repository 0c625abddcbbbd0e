use std::time::Instant;

use invreject::gpr::*;
use invreject::simulate::{add_noise, closed_form_comp3, comp3_series, uniform_grid, NoiseMode};
use invreject::diffpoly::DiffVar;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn kernel_derivatives_match_finite_differences() {
    let h = Hyperparams::new(1.7, 0.8, 0.0);
    let step = 1e-5;
    for total in 1..=6 {
        for m in 0..=total {
            let n = total - m;
            for (t, tp) in [(0.3, -0.4), (1.1, 0.2), (-0.5, 0.9)] {
                let exact = se_kernel_deriv(m, n, t, tp, &h);
                let fd = if m > 0 {
                    (se_kernel_deriv(m - 1, n, t + step, tp, &h) - se_kernel_deriv(m - 1, n, t - step, tp, &h)) / (2.0 * step)
                } else {
                    (se_kernel_deriv(m, n - 1, t, tp + step, &h) - se_kernel_deriv(m, n - 1, t, tp - step, &h)) / (2.0 * step)
                };
                assert!(rel_err(fd, exact) < 1e-6, "m={m} n={n}: {fd} vs {exact}");
            }
        }
    }
}

#[test]
fn kernel_symmetries() {
    let h = Hyperparams::new(0.9, 1.3, 0.0);
    for m in 0..=3 {
        for n in 0..=3 {
            let (t, tp) = (0.7, -0.2);
            let a = se_kernel_deriv(m, n, t, tp, &h);
            // swapping both the orders and the arguments is the identity
            assert!((a - se_kernel_deriv(n, m, tp, t, &h)).abs() < 1e-12);
            let sign = if (m + n) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - sign * se_kernel_deriv(n, m, t, tp, &h)).abs() < 1e-12);
        }
    }
}

#[test]
fn single_point_likelihood() {
    let h = Hyperparams::new(1.5, 0.7, 0.25);
    let y = 0.8;
    let s = h.theta2 + h.sigma2;
    let expected = 0.5 * (2.0 * std::f64::consts::PI * s).ln() + y * y / (2.0 * s);
    let got = neg_log_marginal_likelihood(&[3.0], &[y], &h).unwrap();
    assert!((got - expected).abs() < 1e-14);
    let times = uniform_grid(5, 1.0);
    let zero = neg_log_marginal_likelihood(&times, &[0.0; 5], &h).unwrap();
    let (g, _) = nll_and_gradient(&times, &[0.0; 5], &h).unwrap();
    assert_eq!(zero, g);
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let times = uniform_grid(15, 3.0);
    let y: Vec<f64> = times.iter().map(|t| (1.3 * t).sin() + 0.1 * rng.random::<f64>()).collect();
    for _ in 0..20 {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..0.7), rng.random_range(-5.0..-1.0)];
        let h = Hyperparams::new(f64::exp(p[0]), f64::exp(p[1]), f64::exp(p[2]));
        let (_, g) = nll_and_gradient(&times, &y, &h).unwrap();
        for k in 0..3 {
            let step = 1e-5;
            let at = |d: f64| {
                let mut q = p;
                q[k] += d;
                neg_log_marginal_likelihood(&times, &y, &Hyperparams::new(q[0].exp(), q[1].exp(), q[2].exp())).unwrap()
            };
            let fd = (at(step) - at(-step)) / (2.0 * step);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3), "param {k}: {fd} vs {}", g[k]);
        }
    }
}

fn gp_draw(times: &[f64], h: &Hyperparams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = times.len();
    let k = DMatrix::from_fn(n, n, |i, j| se_kernel_deriv(0, 0, times[i], times[j], h) + if i == j { 1e-10 } else { 0.0 });
    let l = k.cholesky().unwrap().unpack();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let f = l * z;
    f.iter().map(|v| v + h.sigma2.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn true_noise_level_is_preferred() {
    let truth = Hyperparams::new(1.0, 1.0, 0.01);
    let wrong = Hyperparams { sigma2: 0.1, ..truth };
    let times = uniform_grid(50, 10.0);
    let mut wins = 0;
    for seed in 0..100 {
        let y = gp_draw(&times, &truth, &mut ChaCha8Rng::seed_from_u64(seed));
        if neg_log_marginal_likelihood(&times, &y, &truth).unwrap() <= neg_log_marginal_likelihood(&times, &y, &wrong).unwrap() {
            wins += 1;
        }
    }
    assert!(wins > 50, "{wins}");
}

#[test]
fn length_scale_recovery() {
    let truth = Hyperparams::new(1.0, 1.0, 0.01);
    let times = uniform_grid(100, 10.0);
    let start = Instant::now();
    let mut hits = 0;
    for seed in 0..100 {
        let y = gp_draw(&times, &truth, &mut ChaCha8Rng::seed_from_u64(1000 + seed));
        let fit = fit_hyperparameters(&times, &y).unwrap();
        if fit.hyper.ell > 0.5 && fit.hyper.ell < 2.0 {
            hits += 1;
        }
    }
    eprintln!("recovered ell in {hits}/100 ({:?})", start.elapsed());
    assert!(hits >= 80, "{hits}");
}

#[test]
fn constant_data_does_not_crash() {
    let times = uniform_grid(20, 1.0);
    let fit = fit_hyperparameters(&times, &[3.0; 20]).unwrap();
    assert!(fit.hyper.is_valid());
    let p = posterior_derivatives(&times, &[3.0; 20], &fit.hyper, &times, 3).unwrap();
    assert!(p.orders[0].mean.iter().all(|m| (m - 3.0).abs() < 1e-9));
}

#[test]
fn fit_beats_every_start() {
    let ts = comp3_series(&uniform_grid(100, 1.0));
    let noisy = add_noise(&ts, NoiseMode::AdditiveUniform, 0.001, 3).unwrap();
    let y = noisy.output().unwrap().to_vec();
    let fit = fit_hyperparameters(&ts.times, &y).unwrap();
    assert_eq!(fit.starts.len(), 27);
    for s in &fit.starts {
        if let Some(v) = s.start_nll {
            assert!(fit.nll <= v, "{} > {v}", fit.nll);
        }
    }
}

#[test]
fn noise_free_interpolation() {
    let times = uniform_grid(12, 2.0);
    let y: Vec<f64> = times.iter().map(|t| t.cos() + 0.5 * t).collect();
    let h = Hyperparams::new(1.0, 0.7, 0.0);
    let p = posterior_derivatives(&times, &y, &h, &times, 0).unwrap();
    for (a, b) in p.orders[0].mean.iter().zip(&y) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn sine_derivative() {
    let times = uniform_grid(100, 2.0 * std::f64::consts::PI);
    let y: Vec<f64> = times.iter().map(|t| t.sin()).collect();
    let fit = fit_hyperparameters(&times, &y).unwrap();
    let h = Hyperparams { sigma2: 1e-6, ..fit.hyper };
    let p = posterior_derivatives(&times, &y, &h, &times, 1).unwrap();
    let interior = 10..90;
    let mse: f64 = interior.clone().map(|i| (p.orders[1].mean[i] - times[i].cos()).powi(2)).sum::<f64>() / interior.len() as f64;
    assert!(mse.sqrt() <= 0.05, "rmse {}", mse.sqrt());
}

#[test]
fn posterior_variance_bounded_by_prior_and_matches_direct_formula() {
    let times = uniform_grid(25, 4.0);
    let y: Vec<f64> = times.iter().map(|t| (t * 0.9).sin() + 0.2 * t).collect();
    let h = Hyperparams::new(1.2, 0.9, 1e-3);
    let s: Vec<f64> = (0..30).map(|i| -0.5 + 5.0 * i as f64 / 29.0).collect();
    let p = posterior_derivatives(&times, &y, &h, &s, 3).unwrap();
    for (k, o) in p.orders.iter().enumerate() {
        for v in &o.var {
            assert!(*v <= prior_variance(k, &h) + 1e-10);
        }
    }
    // plain conditioning with an explicit inverse
    let n = times.len();
    let kmat = DMatrix::from_fn(n, n, |i, j| se_kernel_deriv(0, 0, times[i], times[j], &h) + if i == j { h.sigma2 } else { 0.0 });
    let kinv = kmat.try_inverse().unwrap();
    let mean = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - mean));
    for (i, si) in s.iter().enumerate() {
        let kx = DVector::from_iterator(n, times.iter().map(|t| se_kernel_deriv(0, 0, *si, *t, &h)));
        let mu = kx.dot(&(&kinv * &yc)) + mean;
        let var = h.theta2 - kx.dot(&(&kinv * &kx));
        assert!((p.orders[0].mean[i] - mu).abs() < 1e-10, "{} vs {mu}", p.orders[0].mean[i]);
        assert!((p.orders[0].var[i] - var.max(0.0)).abs() < 1e-10);
    }
}

/// Coverage of the first derivative on the three-compartment output.
#[test]
fn comp3_first_derivative_coverage() {
    let start = Instant::now();
    let ts = comp3_series(&uniform_grid(100, 1.0));
    let noisy = add_noise(&ts, NoiseMode::Relative, 0.01, 2024).unwrap();
    let y = noisy.output().unwrap();
    let fit = fit_hyperparameters(&ts.times, y).unwrap();
    let p = posterior_derivatives(&ts.times, y, &fit.hyper, &ts.times, 3).unwrap();
    let truth = ts.column(&DiffVar::output(1).with_order(1)).unwrap();
    let interior: Vec<usize> = (5..95).collect();
    let inside = interior.iter().filter(|&&i| (p.orders[1].mean[i] - truth[i]).abs() <= 3.0 * p.orders[1].var[i].sqrt()).count();
    eprintln!("coverage {inside}/{} hyper {:?} in {:?}", interior.len(), fit.hyper, start.elapsed());
    assert!(inside as f64 >= 0.9 * interior.len() as f64);
    let _ = closed_form_comp3(0.0);
}

#[test]
fn gate_rules() {
    let times = uniform_grid(10, 1.0);
    let base = OrderEstimate { mean: vec![0.0; 10], var: vec![1e-6; 10] };
    let mut p = GpPosterior {
        times,
        orders: vec![base.clone(), base.clone(), base.clone(), base.clone()],
        hyper: Hyperparams::new(1.0, 1.0, 1e-4),
        nll: -50.0,
        y_mean: 0.0,
        warnings: vec![],
    };
    let cfg = GateConfig::default();
    let v = quality_gate(&p, &cfg);
    assert!(v.pass && v.excluded.is_empty());
    for i in 0..2 {
        p.orders[3].var[i] = 1e-6 * 1e4;
    }
    p.orders[3].var[9] = 1e-6 * 1e4;
    let v = quality_gate(&p, &cfg);
    assert!(!v.pass);
    assert!(v.reasons[0].contains("[0, 1, 9]"), "{:?}", v.reasons);
    p.orders[3] = base.clone();
    p.nll = 3.0;
    let v = quality_gate(&p, &cfg);
    assert!(!v.pass && v.reasons[0].contains("likelihood"));
}
