use invreject::diffpoly::{DiffMonomial, DiffVar};
use invreject::invariant::{builtin_invariant, parse_invariant, InvariantSpec};
use invreject::simulate::{comp3_series, TimeSeries};
use invreject::solvability::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn inv(name: &str) -> InvariantSpec {
    parse_invariant(builtin_invariant(name).unwrap()).unwrap()
}

fn comp3_data(times: &[f64]) -> (TimeSeries, Vec<usize>) {
    (comp3_series(times), (0..times.len()).collect())
}

/// Agreement to 5 significant figures.
fn sig(x: f64, s: f64) -> bool {
    (x - s).abs() <= 0.5 * 10f64.powf(s.abs().log10().floor() - 4.0)
}

#[test]
fn three_compartment_coefficients() {
    let (data, rows) = comp3_data(&[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    let sys = build_system(&inv("comp3"), &data, &rows, 0.0).unwrap();
    let (kappa, resid) = least_squares(&sys).unwrap();
    assert!(resid <= 1e-8, "{resid}");
    let mut values = unknown_values(&sys, &kappa);
    values.sort_by(|a, b| a.0.cmp(&b.0));
    let expected = [("c1", 7.0), ("c2", 14.0), ("c3", 8.0), ("c4", 5.0), ("c5", 5.0)];
    for ((name, v), (en, ev)) in values.iter().zip(expected) {
        assert_eq!(name, en);
        assert!((v - ev).abs() <= 1e-6, "{name} = {v}");
    }
    let (data5, rows5) = comp3_data(&[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    let tau = test_statistic(&build_system(&inv("comp3"), &data5, &rows5, 0.0).unwrap()).unwrap();
    assert!(tau <= 1e-8, "{tau}");
}

#[test]
fn two_compartment_singular_values() {
    let (data, rows) = comp3_data(&[0.0, 0.2, 0.4, 0.6, 0.8]);
    let sys = build_system(&inv("comp2"), &data, &rows, 0.0).unwrap();
    assert_eq!((sys.m(), sys.n()), (5, 3));
    let names: Vec<String> = sys.columns.iter().map(|c| c.monomial.descending().to_string()).collect();
    assert_eq!(names, ["d1y", "y", "u1"]);
    let sa = singular_values(&sys.a).unwrap();
    let sab = singular_values(&sys.augmented()).unwrap();
    for (x, s) in sa.iter().zip([24.7762, 7.10169, 0.0559192]) {
        assert!(sig(*x, s), "{x} vs {s}");
    }
    for (x, s) in sab.iter().zip([57.1337, 7.13319, 0.279458, 0.00364017]) {
        assert!(sig(*x, s), "{x} vs {s}");
    }
    assert!(sig(test_statistic(&sys).unwrap(), 0.00364017));
}

#[test]
fn deterministic_rejection_monte_carlo() {
    let (data, rows) = comp3_data(&[0.0, 0.2, 0.4, 0.6, 0.8]);
    let sys = build_system(&inv("comp2"), &data, &rows, 0.0).unwrap();
    // noise lands on the y, dy columns and on b, never on the input column
    assert!((0..5).all(|i| sys.ca[(i, 2)] == 0.0 && sys.ca[(i, 0)] > 0.0 && sys.cb[i] > 0.0));
    let rejected = (0..100)
        .filter(|&seed| {
            let (noisy, norm) = perturb_uniform(&sys, 0.001, seed);
            deterministic_reject(&noisy, norm).unwrap().reject
        })
        .count();
    assert!(rejected >= 90, "{rejected}");
    assert!(!deterministic_reject(&sys, f64::INFINITY).unwrap().reject);
    assert!(deterministic_reject(&sys, -1.0).is_err());
    let (data, rows) = comp3_data(&[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    let truth = build_system(&inv("comp3"), &data, &rows, 0.0).unwrap();
    assert!(!deterministic_reject(&truth, 1e-6).unwrap().reject);
}

#[test]
fn degenerate_shapes() {
    let spec = parse_invariant("0 = y").unwrap();
    let (data, rows) = comp3_data(&[0.0, 0.5, 1.0]);
    let sys = build_system(&spec, &data, &rows, 0.01).unwrap();
    assert_eq!(sys.n(), 0);
    assert_eq!(sys.b.as_slice(), data.output().unwrap());
    let mut sys = sys;
    sys.a = DMatrix::identity(2, 2);
    sys.b = DVector::from_vec(vec![0.3, -0.8]);
    sys.ca = DMatrix::zeros(2, 2);
    sys.cb = DVector::zeros(2);
    sys.warnings.clear();
    assert_eq!(test_statistic(&sys).unwrap(), 0.0);
    let spec2 = parse_invariant("c1*d1y + c2*y = 0").unwrap();
    let sys2 = build_system(&spec2, &data, &[0, 1], 0.01).unwrap();
    assert!(sys2.warnings.iter().any(|w| w.contains("uninformative")));
    let r = decide(&sys2, 0.05).unwrap();
    assert_eq!(r.verdict, Verdict::Compatible);
}

#[test]
fn missing_columns_are_reported() {
    let data = { let mut t = TimeSeries::new(vec![0.0, 1.0]); t.set_column(DiffVar::output(1), vec![1.0, 2.0]); t };
    let err = build_system(&inv("comp2"), &data, &[0, 1], 0.0).unwrap_err();
    assert!(matches!(err, SolveError::MissingColumn(_)));
}

fn mono(spec: &[(&str, u32)]) -> DiffMonomial {
    DiffMonomial::from_powers(spec.iter().map(|(v, e)| (DiffVar::parse(v).unwrap(), *e)))
}

#[test]
fn monomial_scales() {
    let y = DiffVar::output(1);
    let dy = y.with_order(1);
    let val = |v: &DiffVar| if *v == y { 3.0 } else if *v == dy { 2.0 } else { 5.0 };
    assert_eq!(monomial_noise_scale(&mono(&[("y", 1)]), |_| 5.0, is_noisy), 5.0);
    let psi = mono(&[("d1y", 1), ("y", 2)]);
    let s = monomial_noise_scale(&psi, val, is_noisy);
    assert!((s - 18.0 * 5f64.sqrt()).abs() < 1e-12);
    // input factors are exact
    assert_eq!(monomial_noise_scale(&mono(&[("u1", 1)]), |_| 4.0, is_noisy), 0.0);
    // finite-difference check of ‖∇ψ∘x‖
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x = [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)];
        let vars = [y, dy, y.with_order(2)];
        let psi = mono(&[("y", rng.random_range(0..4)), ("d1y", rng.random_range(1..3)), ("d2y", rng.random_range(0..3))]);
        let at = |x: &[f64; 3]| psi.eval(|v| x[vars.iter().position(|w| w == v).unwrap()]);
        let mut sq = 0.0;
        for k in 0..3 {
            let h = 1e-6 * x[k];
            let mut xp = x;
            xp[k] += h;
            let mut xm = x;
            xm[k] -= h;
            let g = (at(&xp) - at(&xm)) / (2.0 * h);
            sq += (g * x[k]).powi(2);
        }
        let exact = monomial_noise_scale(&psi, |v| x[vars.iter().position(|w| w == v).unwrap()], is_noisy);
        assert!((sq.sqrt() - exact).abs() <= 1e-6 * exact, "{} vs {exact}", sq.sqrt());
    }
    // ξ = d1u1 − d2y: only the output term contributes
    let terms = [(mono(&[("d1u1", 1)]), 1.0), (mono(&[("d2y", 1)]), -1.0)];
    let s = polynomial_noise_scale(terms.iter().map(|(m, c)| (m, *c)), |v| if v.kind == invreject::diffpoly::VarKind::Input { 9.0 } else { 4.0 }, is_noisy);
    assert_eq!(s, 4.0);
    // shared variable: gradients add before the norm
    let terms = [(mono(&[("y", 2)]), 1.0), (mono(&[("y", 1)]), -3.0)];
    let s = polynomial_noise_scale(terms.iter().map(|(m, c)| (m, *c)), |_| 2.0, is_noisy);
    assert_eq!(s, (2.0f64 * 4.0 - 6.0).abs());
}

fn spectral(m: &DMatrix<f64>) -> f64 {
    singular_values(m).unwrap()[0]
}

#[test]
fn weyl_rank_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let (m, n, r) = (6, 4, rng.random_range(0..4));
        let u = DMatrix::from_fn(m, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        let v = DMatrix::from_fn(r, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a = &u * &v;
        let e = DMatrix::from_fn(m, n, |_, _| 0.01 * rng.sample::<f64, _>(StandardNormal));
        let k = r + 1;
        let s = singular_values(&(&a + &e)).unwrap();
        assert!(s[k - 1] <= spectral(&e) * (1.0 + 1e-12));
    }
}

fn random_system(rng: &mut ChaCha8Rng, m: usize, n: usize) -> LinearSystem {
    let (data, rows) = comp3_data(&[0.0, 0.1, 0.2]);
    let mut sys = build_system(&parse_invariant("0 = y").unwrap(), &data, &rows, 0.02).unwrap();
    sys.a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    sys.b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    sys.ca = DMatrix::from_fn(m, n, |_, _| rng.random_range(0.1..1.0));
    sys.cb = DVector::from_fn(m, |_, _| rng.random_range(0.1..1.0));
    sys.columns.clear();
    sys.warnings.clear();
    sys
}

#[test]
fn scale_invariance_and_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sys = random_system(&mut rng, 8, 3);
    let r = decide(&sys, 0.05).unwrap();
    let mut scaled = sys.clone();
    let k = 3.7;
    scaled.a *= k;
    scaled.b *= k;
    scaled.ca *= k;
    scaled.cb *= k;
    let s = decide(&scaled, 0.05).unwrap();
    assert!((s.tau / s.sigma_a2.sqrt() - r.tau / r.sigma_a2.sqrt()).abs() < 1e-12 * r.tau / r.sigma_a2.sqrt());
    assert!((s.p2 - r.p2).abs() < 1e-12);
    let mut prev = 1.0;
    for i in 0..50 {
        let x = i as f64 * 0.05;
        let p = pvalue_bound_from(r.sigma_a2, r.sigma_b2, 8, 3, x).p_bound;
        assert!(p <= prev + 1e-15);
        prev = p;
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth > 40 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 0)
}

#[test]
fn p1_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..25 {
        let (sa, sb, x) = (rng.random_range(0.05..2.0), rng.random_range(0.05..2.0), rng.random_range(0.01..5.0));
        let (m, n) = (7, 3);
        let d = (m + n) as f64;
        // integrate relative to the peak so the tolerance is relative
        let log_peak = -0.5 * x * x / (sa * sa + sb * sb);
        let f = |t: f64| (-0.5 * (t * t / (sa * sa) + (x - t) * (x - t) / (sb * sb)) - log_peak).exp();
        let exact: f64 = d * d * log_peak.exp() * adaptive_simpson(&f, 0.0, x, 1e-13 * x);
        let closed = pvalue_bound_from(sa * sa, sb * sb, m, n, x).p1;
        assert!((closed - exact).abs() <= 1e-8 * exact, "{closed} vs {exact}");
    }
}

#[test]
fn tail_bounds_dominate_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    for _ in 0..3 {
        let c = DMatrix::from_fn(3, 4, |_, _| rng.random_range(0.0..1.0));
        let draws: Vec<(f64, f64)> = (0..10_000)
            .map(|_| {
                let z = DMatrix::from_fn(3, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
                let cz = c.component_mul(&z);
                (spectral(&cz), cz.norm())
            })
            .collect();
        let top = draws.iter().map(|d| d.1).fold(0.0, f64::max);
        for i in 0..20 {
            let x = top * i as f64 / 19.0;
            let emp = draws.iter().filter(|d| d.0 >= x).count() as f64 / draws.len() as f64;
            let emp_f = draws.iter().filter(|d| d.1 >= x).count() as f64 / draws.len() as f64;
            assert!(emp <= tropp_tail(&c, x), "x={x}: {emp} > {}", tropp_tail(&c, x));
            assert!(emp_f <= frobenius_chi_tail(&c, x) + 0.02, "x={x}: {emp_f} > {}", frobenius_chi_tail(&c, x));
            assert!(emp <= frobenius_chi_tail(&c, x) + 0.02);
        }
    }
}

#[test]
fn null_case_is_compatible() {
    let (data, rows) = comp3_data(&[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]);
    let sys = build_system(&inv("comp3"), &data, &rows, 0.0).unwrap();
    let r = decide(&sys, 0.05).unwrap();
    assert_eq!(r.verdict, Verdict::Compatible);
    assert_eq!(r.p_bound, 1.0);
    let json = serde_json::to_value(&r).unwrap();
    for key in ["model", "data_source", "noise_level", "m", "n", "tau", "sv_A", "sv_Ab", "sigmaA2", "sigmaB2", "P1", "P2", "p_bound", "alpha", "verdict", "warnings"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["verdict"], "compatible");
}

#[test]
fn low_rank_warning() {
    let (data, rows) = comp3_data(&[0.0, 0.2, 0.4, 0.6, 0.8]);
    let mut sys = build_system(&inv("comp2"), &data, &rows, 0.01).unwrap();
    let col = sys.a.column(0).clone_owned();
    sys.a.set_column(1, &(col * 2.0));
    let r = decide(&sys, 0.05).unwrap();
    assert!(r.warnings.iter().any(|w| w.contains("low-rank")));
}
