use invreject::diffpoly::{DiffVar, Ranking};
use invreject::invariant::*;
use invreject::poly::rational_to_f64;
use invreject::simulate::*;

fn model(name: &str) -> ModelSpec {
    parse_model(builtin_model(name).unwrap()).unwrap()
}

#[test]
fn comp3_endpoint_matches_closed_form() {
    let m = model("comp3_input");
    let grid = uniform_grid(11, 1.0);
    let traj = integrate_model(&m, &grid).unwrap();
    let y1 = traj.states.last().unwrap()[0];
    let exact = closed_form_comp3(1.0).y[0];
    assert!((y1 - 2.374660).abs() < 5e-7, "{y1}");
    assert!((y1 - exact).abs() < 1e-8 * exact);
    let ts = simulate(&m, &grid, 3).unwrap();
    for (i, &t) in grid.iter().enumerate() {
        let s = closed_form_comp3(t);
        for k in 0..4 {
            let got = ts.column(&DiffVar::output(1).with_order(k as u16)).unwrap()[i];
            assert!((got - s.y[k]).abs() < 1e-7 * (1.0 + s.y[k].abs()), "order {k} at {t}: {got} vs {}", s.y[k]);
        }
        for k in 0..3 {
            let got = ts.column(&DiffVar::input(1).with_order(k as u16)).unwrap()[i];
            assert!((got - s.u[k]).abs() < 1e-12 * (1.0 + s.u[k].abs()));
        }
    }
}

#[test]
fn rk4_is_fourth_order() {
    let m = model("comp3_input");
    let grid = [1.0];
    let exact = closed_form_comp3(1.0).y[0];
    let err = |n| (integrate_fixed(&m, &grid, n).unwrap().states[0][0] - exact).abs();
    let (e1, e2) = (err(8), err(16));
    let order = (e1 / e2).log2();
    assert!(order >= 3.9, "observed order {order}");
}

#[test]
fn lotka_volterra_first_integral_is_conserved() {
    let m = model("lv2");
    let p: Vec<f64> = m.params.iter().map(|d| rational_to_f64(d.value.as_ref().unwrap())).collect();
    let h = |x: &[f64]| p[3] * x[0] - p[2] * x[0].ln() + p[1] * x[1] - p[0] * x[1].ln();
    let traj = integrate_model(&m, &uniform_grid(100, 10.0)).unwrap();
    let h0 = h(&traj.states[0]);
    for x in &traj.states {
        assert!(x.iter().all(|v| v.is_finite() && *v > 0.0));
        assert!((h(x) - h0).abs() <= 1e-6, "drift {}", h(x) - h0);
    }
}

#[test]
fn zero_dynamics_stay_put() {
    let src = "params: a = 1\nstates: x1(0) = 3, x2(0) = -2\nodes: dx1 = 0, dx2 = 0*a\noutput: y = x1 + x2\n";
    let m = parse_model(src).unwrap();
    let traj = integrate_model(&m, &uniform_grid(5, 2.0)).unwrap();
    for x in &traj.states {
        assert_eq!(x, &vec![3.0, -2.0]);
    }
}

#[test]
fn blow_up_is_reported() {
    let m = parse_model("params: a = 1\nstates: x1(0) = 1\nodes: dx1 = a*x1^2\noutput: y = x1\n").unwrap();
    let err = integrate_model(&m, &uniform_grid(10, 2.0)).unwrap_err();
    match err {
        SimError::BlowUp { time } => assert!(time > 0.9 && time <= 1.2, "{time}"),
        other => panic!("{other}"),
    }
}

#[test]
fn noise_is_seeded_and_leaves_inputs_alone() {
    let ts = simulate(&model("comp3_input"), &uniform_grid(20, 1.0), 1).unwrap();
    for mode in NoiseMode::ALL {
        let a = add_noise(&ts, mode, 0.1, 7).unwrap();
        let b = add_noise(&ts, mode, 0.1, 7).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        assert_ne!(a.output(), ts.output());
        assert_eq!(a.times, ts.times);
        assert_eq!(a.column(&DiffVar::input(1)), ts.column(&DiffVar::input(1)));
        let same = add_noise(&ts, mode, 0.0, 7).unwrap();
        assert_eq!(same.columns, ts.columns);
    }
    assert!("gaussian".parse::<NoiseMode>().is_err());
    assert!(add_noise(&ts, NoiseMode::Relative, -1.0, 0).is_err());
}

#[test]
fn relative_noise_is_unbiased() {
    let n = 10_000;
    let mut ts = TimeSeries::new((0..n).map(|i| i as f64).collect());
    ts.set_column(DiffVar::output(1), (0..n).map(|i| 1.0 + i as f64).collect());
    let eps = 0.05;
    let noisy = add_noise(&ts, NoiseMode::Relative, eps, 11).unwrap();
    let mean: f64 = noisy.output().unwrap().iter().zip(ts.output().unwrap()).map(|(a, b)| a / b - 1.0).sum::<f64>() / n as f64;
    assert!(mean.abs() < 3.0 * eps / (n as f64).sqrt(), "{mean}");
}

/// `|G| / Σ|terms|` with exact output derivatives along a simulated trajectory.
fn max_relative_residual(name: &str) -> f64 {
    let m = model(name);
    let spec = eliminate(&m, &Ranking::default()).unwrap().remove(0).spec;
    let order = spec.max_output_order() as usize;
    let ts = simulate(&m, &uniform_grid(50, default_horizon(&m)), order.max(2)).unwrap();
    let values = m.param_values();
    let poly = spec.polynomial();
    let mut worst: f64 = 0.0;
    for i in 0..ts.len() {
        let value = |v: &DiffVar| ts.column(v).expect("column")[i];
        let coeff = |c: &invreject::poly::ParamRational| c.eval_f64(|s| rational_to_f64(&values[s]));
        let g: f64 = poly.terms().map(|(mono, c)| coeff(c) * mono.eval(value)).sum();
        let scale: f64 = poly.terms().map(|(mono, c)| (coeff(c) * mono.eval(value)).abs()).sum();
        worst = worst.max(g.abs() / scale);
    }
    worst
}

#[test]
fn eliminated_invariants_vanish_on_trajectories() {
    for (name, _) in BUILTIN_MODELS {
        let r = max_relative_residual(name);
        assert!(r <= 1e-6, "{name}: residual {r}");
    }
    for name in ["comp3_input", "leak1", "leak2"] {
        let r = max_relative_residual(name);
        assert!(r <= 1e-6, "{name}: residual {r}");
    }
}
