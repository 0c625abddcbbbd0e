use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_invreject"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/models")
}

fn comp3_csv(dir: &Path) {
    let o = run(dir, &["simulate", "comp3_input", "--points", "5", "--tmax", "0.8", "--orders", "3", "-o", "comp3.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn eliminate_reports_slots() {
    let dir = tempfile::tempdir().unwrap();
    for (model, slots) in [("lc2", 2), ("lv2", 4), ("lorenz", 5)] {
        let out = format!("{model}.inv");
        let o = run(dir.path(), &["eliminate", model, "-o", &out]);
        assert_eq!(code(&o), 0);
        let msg = String::from_utf8_lossy(&o.stderr);
        assert!(msg.contains(&format!("{slots} slots")), "{msg}");
        let text = fs::read_to_string(dir.path().join(&out)).unwrap();
        assert!(text.starts_with(&format!("model: {model}\n")));
    }
    let file = models_dir().join("lv3.model");
    let o = run(dir.path(), &["eliminate", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("= "));
    assert_eq!(code(&run(dir.path(), &["eliminate", "no-such-model"])), 64);
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let sim = |seed: &str, out: &str| {
        let args = ["simulate", "lv2", "--points", "50", "--noise-mode", "additive-gaussian", "--noise", "0.1", "--seed", seed, "-o", out];
        assert_eq!(code(&run(dir.path(), &args)), 0);
        fs::read(dir.path().join(out)).unwrap()
    };
    let a = sim("4", "a.csv");
    assert_eq!(a, sim("4", "b.csv"));
    assert_ne!(a, sim("5", "c.csv"));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("t,y\n"));
    assert_eq!(text.lines().count(), 51);
    let o = run(dir.path(), &["simulate", "lv2", "--noise-mode", "pink"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn reject_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    comp3_csv(dir.path());
    let o = run(dir.path(), &["reject", "comp3.csv", "comp2", "--deterministic", "--noise", "0.001", "--seed", "1", "-o", "r2.json"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r2.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "reject");
    assert_eq!(report["mode"], "deterministic");
    assert!(report["bound"].as_f64().unwrap() < report["tau"].as_f64().unwrap());
    for key in ["model", "data_source", "noise_level", "m", "n", "sv_A", "sv_Ab", "sigmaA2", "sigmaB2", "P1", "P2", "p_bound", "alpha", "warnings"] {
        assert!(report.get(key).is_some(), "{key}");
    }

    let o = run(dir.path(), &["reject", "comp3.csv", "comp3", "--deterministic", "--noise", "0.001", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let o = run(dir.path(), &["reject", "comp3.csv", "comp3"]);
    assert_eq!(code(&o), 0);

    fs::write(dir.path().join("empty.csv"), "").unwrap();
    assert_eq!(code(&run(dir.path(), &["reject", "empty.csv", "comp2"])), 64);
    fs::write(dir.path().join("header.csv"), "t,y\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["reject", "header.csv", "comp2"])), 64);
    assert_eq!(code(&run(dir.path(), &["reject", "missing.csv", "comp2"])), 64);
    assert_eq!(code(&run(dir.path(), &["reject", "comp3.csv", "comp2", "--alpha", "2"])), 64);
    assert_eq!(code(&run(dir.path(), &["reject", "comp3.csv", "comp2", "--deterministic"])), 64);
    assert_eq!(code(&run(dir.path(), &["reject", "comp3.csv", "comp2", "--frobnicate"])), 64);
}

#[test]
fn gp_table_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "lc3", "--noise-mode", "relative", "--noise", "0.01", "--seed", "3", "-o", "lc3.csv"];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let o = run(dir.path(), &["gp", "lc3.csv", "--max-order", "3", "-o", "est.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("est.csv")).unwrap();
    assert!(table.starts_with("t,y0_mean,y0_var,y1_mean,y1_var,y2_mean,y2_var,y3_mean,y3_var,excluded\n"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("est.json")).unwrap()).unwrap();
    assert_eq!(summary["gate"]["pass"], true);
    assert!(summary["nll"].as_f64().unwrap() < 0.0);

    assert_eq!(code(&run(dir.path(), &["eliminate", "lc3", "-o", "lc3.inv"])), 0);
    let o = run(dir.path(), &["reject", "est.csv", "lc3.inv", "--noise", "0.01", "-o", "r.json"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let excluded = summary["gate"]["excluded"].as_array().unwrap().len() as u64;
    assert_eq!(report["m"].as_u64().unwrap(), 100 - excluded);
    // raw samples go through the same estimation in-process
    let o = run(dir.path(), &["reject", "lc3.csv", "lc3.inv", "-o", "r2.json"]);
    assert_eq!(code(&o), 0);
    let r2: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r2.json")).unwrap()).unwrap();
    assert_eq!(r2["tau"], report["tau"]);
}

#[test]
fn gated_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // white noise: no smooth signal for the GP to explain
    let mut csv = String::from("t,y\n");
    let mut state: u64 = 12345;
    for i in 0..60 {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let u = (state >> 11) as f64 / (1u64 << 53) as f64;
        csv.push_str(&format!("{},{}\n", i as f64 * 0.1, 10.0 * (u - 0.5)));
    }
    fs::write(dir.path().join("noise.csv"), csv).unwrap();
    assert_eq!(code(&run(dir.path(), &["gp", "noise.csv", "-o", "est.csv"])), 3);
    assert_eq!(code(&run(dir.path(), &["reject", "est.csv", "comp2"])), 3);
    let o = run(dir.path(), &["reject", "noise.csv", "comp2", "-o", "g.json"]);
    assert_eq!(code(&o), 3);
    let body: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(body["verdict"], "gated");
    assert!(!body["reasons"].as_array().unwrap().is_empty());
}

#[test]
fn matrix_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("models");
    fs::create_dir(&models).unwrap();
    for m in ["lc2", "lc3", "lv2"] {
        fs::copy(models_dir().join(format!("{m}.model")), models.join(format!("{m}.model"))).unwrap();
    }
    let args = |out: &'static str| ["matrix", "models", "--levels", "0:0.1:0.1", "--exact-derivatives", "--seed", "9", "-o", out];
    assert_eq!(code(&run(dir.path(), &args("a"))), 0);
    let o = bin().current_dir(dir.path()).env("INVREJECT_JOBS", "2").args(args("b")).output().unwrap();
    assert_eq!(code(&o), 0);
    for f in ["matrix.json", "matrix.csv", "matrix.svg"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("a/matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3 * 2);
    for m in ["lc2", "lc3", "lv2"] {
        assert!(csv.contains(&format!("{m},{m},0,1,")), "{m} self-test at level 0");
    }
    let mx: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a/matrix.json")).unwrap()).unwrap();
    assert_eq!(mx["datasets"].as_array().unwrap().len(), 6);

    let one = dir.path().join("one");
    fs::create_dir(&one).unwrap();
    fs::copy(models_dir().join("lc2.model"), one.join("lc2.model")).unwrap();
    assert_eq!(code(&run(dir.path(), &["matrix", "one", "-o", "c"])), 64);
    assert_eq!(code(&run(dir.path(), &["matrix", "models", "--levels", "0.3,0.1", "-o", "c"])), 64);
}
