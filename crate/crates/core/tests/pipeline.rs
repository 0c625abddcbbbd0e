use std::path::Path;

use invreject::gpr::GateConfig;
use invreject::invariant::{builtin_invariant, parse_invariant, parse_model, BUILTIN_MODELS};
use invreject::pipeline::*;
use invreject::simulate::{add_noise, comp3_series, uniform_grid, NoiseMode, DEFAULT_POINTS};
use invreject::diffpoly::DiffVar;

fn builtin(names: &[&str]) -> Vec<Candidate> {
    BUILTIN_MODELS
        .iter()
        .filter(|(n, _)| names.contains(n))
        .map(|(_, s)| Candidate::from_model(parse_model(s).unwrap()).unwrap())
        .collect()
}

#[test]
fn level_lists() {
    assert_eq!(parse_levels("0:0.5:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
    assert_eq!(parse_levels("0.1").unwrap(), vec![0.1]);
    assert_eq!(parse_levels("0, 0.05,0.2").unwrap(), vec![0.0, 0.05, 0.2]);
    for bad in ["", "0.2,0.1", "-0.1", "0:1", "0:1:0", "1:0:0.1", "a", "0,0"] {
        assert!(parse_levels(bad).is_err(), "{bad}");
    }
}

#[test]
fn epsilon_rules() {
    let ts = add_noise(&comp3_series(&uniform_grid(40, 2.0)), NoiseMode::Relative, 0.01, 3).unwrap();
    let est = estimate_derivatives(&ts, 2, &GateConfig::default()).unwrap();
    let y = ts.output().unwrap();
    assert_eq!(choose_epsilon(Some(0.1), Some(&est.fit), y), (0.1, EpsilonSource::Declared));
    let (e, src) = choose_epsilon(Some(0.0), Some(&est.fit), y);
    assert_eq!(src, EpsilonSource::Estimated);
    assert!((e - est.fit.hyper.sigma2.sqrt() / rms(y)).abs() < 1e-15);
    assert_eq!(choose_epsilon(None, None, y), (0.0, EpsilonSource::Exact));
}

#[test]
fn estimate_carries_inputs_and_orders() {
    let ts = add_noise(&comp3_series(&uniform_grid(DEFAULT_POINTS, 3.0)), NoiseMode::Relative, 0.01, 1).unwrap();
    let est = estimate_derivatives(&ts, 3, &GateConfig::default()).unwrap();
    for k in 0..=3 {
        assert!(est.series.column(&DiffVar::output(1).with_order(k)).is_some());
    }
    assert_eq!(est.series.column(&DiffVar::input(1)), ts.column(&DiffVar::input(1)));
    assert_eq!(est.series.column(&DiffVar::input(1).with_order(2)), ts.column(&DiffVar::input(1).with_order(2)));
    assert!(est.gate.pass);
    assert!(est.kept_rows().len() >= DEFAULT_POINTS * 8 / 10);

    // ten rows far more than enough for the true 3-compartment invariant
    let spec = parse_invariant(builtin_invariant("comp3").unwrap()).unwrap();
    let r = test_invariant(&spec, &est.series, &est.kept_rows(), 0.01, 0.05).unwrap();
    assert!(!r.is_reject(), "p_bound {}", r.p_bound);
}

#[test]
fn dataset_seeds_distinct() {
    let mut seen = std::collections::HashSet::new();
    for m in 0..5 {
        for l in 0..6 {
            assert!(seen.insert(dataset_seed(7, m, l)));
        }
    }
    assert_ne!(dataset_seed(1, 0, 0), dataset_seed(2, 0, 0));
}

#[test]
fn exact_zero_noise_diagonal_compatible() {
    let cands = builtin(&["lv2", "lv3", "lorenz", "lc2", "lc3"]);
    let cfg = MatrixConfig { levels: vec![0.0], exact_derivatives: true, ..MatrixConfig::default() };
    let mx = run_matrix(&cands, &cfg, Some(1)).unwrap();
    assert_eq!(mx.datasets.len(), 5);
    for c in &cands {
        let cell = mx.cell(&c.name, &c.name, 0.0).unwrap();
        let r = cell.report().unwrap();
        assert_eq!(cell.code(), Some(1), "{}", c.name);
        assert_eq!(r.p_bound, 1.0);
        assert!(r.tau <= 1e-8, "{} tau {}", c.name, r.tau);
    }
    // LV2 data cannot satisfy the second-order linear invariant exactly
    assert_eq!(mx.cell("lv2", "lc2", 0.0).unwrap().code(), Some(0));
}

#[test]
fn matrix_is_deterministic_and_ordered() {
    let cands = builtin(&["lc2", "lc3"]);
    let cfg = MatrixConfig { levels: vec![0.0, 0.1], points: 40, seed: 11, ..MatrixConfig::default() };
    let a = run_matrix(&cands, &cfg, Some(1)).unwrap();
    let b = run_matrix(&cands, &cfg, Some(2)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    let order: Vec<(String, f64)> = a.datasets.iter().map(|d| (d.model.clone(), d.level)).collect();
    assert_eq!(
        order,
        vec![("lc2".into(), 0.0), ("lc2".into(), 0.1), ("lc3".into(), 0.0), ("lc3".into(), 0.1)]
    );
    assert_eq!(a.to_csv_string().lines().count(), 1 + 2 * 2 * 2);
    let d = a.dataset("lc3", 0.0).unwrap();
    assert_eq!(d.epsilon_source, EpsilonSource::Estimated);
    assert_eq!(a.dataset("lc3", 0.1).unwrap().epsilon, 0.1);
    assert!(d.gp.is_some());

    let other = run_matrix(&cands, &MatrixConfig { seed: 12, ..cfg.clone() }, Some(1)).unwrap();
    assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&other).unwrap());
}

#[test]
fn matrix_needs_two_models() {
    let cands = builtin(&["lc2"]);
    assert!(run_matrix(&cands, &MatrixConfig::default(), None).is_err());
    let cands = builtin(&["lc2", "lc3"]);
    let cfg = MatrixConfig { levels: vec![0.2, 0.1], ..MatrixConfig::default() };
    assert!(run_matrix(&cands, &cfg, None).is_err());
}

#[test]
fn heatmap_layout() {
    let cands = builtin(&["lc2", "lc3", "lv2"]);
    let cfg = MatrixConfig { levels: vec![0.0, 0.1], exact_derivatives: true, ..MatrixConfig::default() };
    let mx = run_matrix(&cands, &cfg, None).unwrap();
    let svg = heatmap_svg(&mx);
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches(r#"class="panel""#).count(), 3);
    assert_eq!(svg.matches("<title>").count(), 3 * 3 * 2);
    assert!(svg.contains("data lv2, invariant lc2, level 0: rejected (p_bound = "));
    assert!(svg.contains("data lc3, invariant lc3, level 0.1: "));
}

#[test]
fn loads_shipped_models() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("models");
    let cands = load_candidates(&dir).unwrap();
    let names: Vec<&str> = cands.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["lc2", "lc3", "lorenz", "lv2", "lv3"]);
    let slots: Vec<usize> = cands.iter().map(|c| c.invariant.slots.len()).collect();
    assert_eq!(slots, [2, 3, 5, 4, 13]);
}
