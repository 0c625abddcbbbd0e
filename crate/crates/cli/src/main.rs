use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use invreject::diffpoly::Ranking;
use invreject::gpr::{GateConfig, GpSummary};
use invreject::invariant::{
    builtin_invariant, builtin_model, eliminate, identifiability_count, parse_invariant, parse_model, render, Identifiability,
    InvariantSpec, ModelSpec,
};
use invreject::pipeline::{
    choose_epsilon, estimate_derivatives, heatmap_svg, is_estimate_header, jobs_from_env, load_candidates, parse_levels, read_estimate_csv,
    rms, run_matrix, write_estimate_csv, EpsilonSource, MatrixConfig, MAX_ORDER,
};
use invreject::simulate::{add_noise, default_horizon, simulate, uniform_grid, NoiseMode, TimeSeries, DEFAULT_POINTS};
use invreject::solvability::{build_system, decide, decide_deterministic, perturb_uniform, SolvabilityReport, DEFAULT_ALPHA};

const EXIT_REJECT: u8 = 2;
const EXIT_GATED: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "invreject", version, about = "Reject ODE models against time-course data through their differential invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eliminate the states of a model and write its monic invariant.
    Eliminate {
        /// `.model` file or built-in model name.
        model: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a model on a uniform grid, optionally adding noise.
    Simulate(SimulateArgs),
    /// Estimate output derivatives from data by GP regression.
    Gp {
        data: PathBuf,
        #[arg(long, default_value_t = MAX_ORDER)]
        max_order: usize,
        /// Estimate table; a `.json` summary is written next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Test an invariant against data.
    Reject(RejectArgs),
    /// Test every model's invariant against every model's data.
    Matrix(MatrixArgs),
}

#[derive(Args)]
struct SimulateArgs {
    model: String,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    /// Horizon; defaults to the model's own.
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long, default_value_t = NoiseMode::AdditiveGaussian)]
    noise_mode: NoiseMode,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write exact output derivatives up to this order.
    #[arg(long, default_value_t = 0)]
    orders: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RejectArgs {
    /// Sample CSV (with or without derivative columns) or a `gp` estimate table.
    data: PathBuf,
    /// `.inv` file or built-in invariant name.
    invariant: String,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Reject iff tau exceeds a perturbation bound instead of using the tail bound.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long, default_value_t = NoiseMode::AdditiveUniform)]
    noise_mode: NoiseMode,
    /// Declared noise level. In deterministic mode the system is also
    /// perturbed by it (additive-uniform only).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Directory of `.model` files.
    models: PathBuf,
    #[arg(long, default_value = "0:0.5:0.1")]
    levels: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    #[arg(long, default_value_t = NoiseMode::AdditiveGaussian)]
    noise_mode: NoiseMode,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Use simulated derivatives instead of GP estimates.
    #[arg(long)]
    exact_derivatives: bool,
    /// Worker threads; `INVREJECT_JOBS` takes precedence.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

enum Failure {
    Usage(String),
    Other(String),
}

type Outcome = Result<u8, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn other(msg: impl std::fmt::Display) -> Failure {
    Failure::Other(msg.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| other(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| other(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn load_model(arg: &str) -> Result<ModelSpec, Failure> {
    let path = Path::new(arg);
    let src = if path.exists() {
        read(path)?
    } else {
        builtin_model(arg).ok_or_else(|| usage(format!("no model file or built-in model `{arg}`")))?.to_string()
    };
    parse_model(&src).map_err(|e| usage(format!("{arg}: {e}")))
}

fn load_invariant(arg: &str) -> Result<InvariantSpec, Failure> {
    let path = Path::new(arg);
    let src = if path.exists() {
        read(path)?
    } else {
        builtin_invariant(arg).ok_or_else(|| usage(format!("no invariant file or built-in invariant `{arg}`")))?.to_string()
    };
    let mut spec = parse_invariant(&src).map_err(|e| usage(format!("{arg}: {e}")))?;
    if spec.model.is_none() {
        spec.model = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    Ok(spec)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn cmd_eliminate(model: &str, output: Option<&Path>) -> Outcome {
    let m = load_model(model)?;
    let eqs = eliminate(&m, &Ranking::default()).map_err(|e| other(format!("elimination failed: {e}")))?;
    for (k, e) in eqs.iter().enumerate() {
        let id = identifiability_count(&e.spec, &m);
        let verdict = match id.verdict {
            Identifiability::Unidentifiable => "unidentifiable",
            Identifiability::PossiblyIdentifiable => "possibly identifiable",
        };
        eprintln!("equation {}: {} slots, {} unknown parameters ({verdict})", k + 1, id.n_slots, id.n_params);
        let path = output.map(|p| {
            if k == 0 {
                p.to_path_buf()
            } else {
                let stem = p.file_stem().unwrap_or_default().to_string_lossy();
                p.with_file_name(format!("{stem}_{}.inv", k + 1))
            }
        });
        emit(path.as_deref(), &render(&e.spec))?;
    }
    Ok(0)
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let m = load_model(&a.model)?;
    if a.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let horizon = a.tmax.unwrap_or_else(|| default_horizon(&m));
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(usage("--tmax must be positive"));
    }
    let clean = simulate(&m, &uniform_grid(a.points, horizon), a.orders).map_err(other)?;
    let data = if a.noise > 0.0 { add_noise(&clean, a.noise_mode, a.noise, a.seed).map_err(usage)? } else { clean };
    emit(a.output.as_deref(), &data.to_csv_string())?;
    Ok(0)
}

fn read_series(path: &Path) -> Result<(String, TimeSeries), Failure> {
    let text = read(path)?;
    if text.trim().is_empty() {
        return Err(usage(format!("{}: empty CSV", path.display())));
    }
    let ts = TimeSeries::read_csv(text.as_bytes()).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok((text, ts))
}

fn cmd_gp(data: &Path, max_order: usize, output: Option<&Path>) -> Outcome {
    if max_order > MAX_ORDER {
        return Err(usage(format!("--max-order is at most {MAX_ORDER}")));
    }
    let (_, ts) = read_series(data)?;
    let est = estimate_derivatives(&ts, max_order, &GateConfig::default()).map_err(other)?;
    let mut table = Vec::new();
    write_estimate_csv(&est, &mut table).map_err(other)?;
    emit(output, &String::from_utf8(table).expect("utf-8"))?;
    let summary = est.posterior.summary(est.gate.clone());
    match output {
        Some(p) => write(&p.with_extension("json"), &json(&summary))?,
        None => eprint!("{}", json(&summary)),
    }
    if est.gate.pass {
        Ok(0)
    } else {
        eprintln!("quality gate failed: {}", est.gate.reasons.join("; "));
        Ok(EXIT_GATED)
    }
}

/// Data prepared for a test: derivative values, usable rows, GP-based ε if any.
struct Prepared {
    series: TimeSeries,
    rows: Vec<usize>,
    estimated_epsilon: Option<f64>,
    source: &'static str,
}

fn gated(reasons: Vec<String>, output: Option<&Path>) -> Outcome {
    let body = serde_json::json!({ "verdict": "gated", "reasons": reasons });
    emit(output, &json(&body))?;
    eprintln!("quality gate failed: {}", reasons.join("; "));
    Ok(EXIT_GATED)
}

fn cmd_reject(a: &RejectArgs) -> Outcome {
    let spec = load_invariant(&a.invariant)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage("--alpha must lie in (0, 1)"));
    }
    if a.noise.is_some_and(|e| !(e.is_finite() && e >= 0.0)) {
        return Err(usage("--noise must be finite and non-negative"));
    }
    let text = read(&a.data)?;
    let first = text.lines().next().unwrap_or("");
    if text.trim().is_empty() {
        return Err(usage(format!("{}: empty CSV", a.data.display())));
    }
    let prepared = if is_estimate_header(first) {
        let table = read_estimate_csv(text.as_bytes()).map_err(|e| usage(format!("{}: {e}", a.data.display())))?;
        let sidecar = a.data.with_extension("json");
        let summary: Option<GpSummary> = fs::read_to_string(&sidecar).ok().and_then(|s| serde_json::from_str(&s).ok());
        if let Some(s) = summary.as_ref().filter(|s| !s.gate.pass) {
            return gated(s.gate.reasons.clone(), a.output.as_deref());
        }
        let y = table.series.output().unwrap_or_default();
        let estimated_epsilon = summary.map(|s| if rms(y) > 0.0 { s.hyper.sigma2.sqrt() / rms(y) } else { 0.0 });
        let rows = table.kept_rows();
        Prepared { series: table.series, rows, estimated_epsilon, source: "gp-table" }
    } else {
        let (_, ts) = read_series(&a.data)?;
        let complete = spec.signals().iter().all(|v| ts.column(v).is_some());
        if complete {
            let rows = (0..ts.len()).collect();
            Prepared { series: ts, rows, estimated_epsilon: None, source: "exact" }
        } else {
            let order = (spec.max_output_order() as usize).max(1);
            if order > MAX_ORDER {
                return Err(usage(format!("invariant needs order {order} derivatives; GP estimates go to {MAX_ORDER}")));
            }
            let est = estimate_derivatives(&ts, order, &GateConfig::default()).map_err(other)?;
            if !est.gate.pass {
                return gated(est.gate.reasons.clone(), a.output.as_deref());
            }
            let (eps, _) = choose_epsilon(None, Some(&est.fit), ts.output().unwrap_or_default());
            let rows = est.kept_rows();
            Prepared { series: est.series, rows, estimated_epsilon: Some(eps), source: "gp" }
        }
    };
    let (epsilon, eps_source) = match (a.noise, prepared.estimated_epsilon) {
        (Some(e), _) => (e, EpsilonSource::Declared),
        (None, Some(e)) => (e, EpsilonSource::Estimated),
        (None, None) => (0.0, EpsilonSource::Exact),
    };
    let sys = build_system(&spec, &prepared.series, &prepared.rows, epsilon).map_err(|e| usage(format!("{}: {e}", a.data.display())))?;
    let report: SolvabilityReport = if a.deterministic {
        let (sys, realized) = match a.noise {
            Some(e) if e > 0.0 => {
                if a.noise_mode != NoiseMode::AdditiveUniform {
                    return Err(usage("deterministic perturbation supports --noise-mode additive-uniform only"));
                }
                let (p, norm) = perturb_uniform(&sys, e, a.seed);
                (p, Some(norm))
            }
            _ => (sys, None),
        };
        let bound = a
            .bound
            .or(realized)
            .ok_or_else(|| usage("--deterministic needs --bound or a positive --noise"))?;
        decide_deterministic(&sys, bound, a.alpha).map_err(usage)?
    } else {
        decide(&sys, a.alpha).map_err(other)?
    };
    let model = spec.model.clone().unwrap_or_default();
    let mut report = report.with_labels(&model, &a.data.display().to_string());
    if eps_source == EpsilonSource::Estimated {
        report.warnings.push(format!("noise level estimated from the GP fit ({})", prepared.source));
    }
    emit(a.output.as_deref(), &json(&report))?;
    eprintln!(
        "{}: tau = {:.6e}, p_bound = {:.3e}, verdict = {}",
        model,
        report.tau,
        report.p_bound,
        if report.is_reject() { "reject" } else { "compatible" }
    );
    Ok(if report.is_reject() { EXIT_REJECT } else { 0 })
}

fn cmd_matrix(a: &MatrixArgs) -> Outcome {
    let levels = parse_levels(&a.levels).map_err(usage)?;
    if !a.models.is_dir() {
        return Err(usage(format!("{}: not a directory", a.models.display())));
    }
    let candidates = load_candidates(&a.models).map_err(usage)?;
    let cfg = MatrixConfig {
        levels,
        points: a.points,
        horizon: None,
        noise_mode: a.noise_mode,
        seed: a.seed,
        alpha: a.alpha,
        exact_derivatives: a.exact_derivatives,
        gate: GateConfig::default(),
    };
    let jobs = jobs_from_env().or(a.jobs);
    let mx = run_matrix(&candidates, &cfg, jobs).map_err(usage)?;
    write(&a.output.join("matrix.json"), &json(&mx))?;
    write(&a.output.join("matrix.csv"), &mx.to_csv_string())?;
    write(&a.output.join("matrix.svg"), &heatmap_svg(&mx))?;
    for d in &mx.datasets {
        let row: Vec<String> = d
            .cells
            .iter()
            .map(|c| format!("{}={}", c.invariant, c.cell.code().map_or_else(|| c.cell.label().to_string(), |k| k.to_string())))
            .collect();
        eprintln!("{} @ {}: {}", d.model, d.level, row.join(" "));
    }
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Eliminate { model, output } => cmd_eliminate(&model, output.as_deref()),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Gp { data, max_order, output } => cmd_gp(&data, max_order, output.as_deref()),
        Command::Reject(a) => cmd_reject(&a),
        Command::Matrix(a) => cmd_matrix(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
