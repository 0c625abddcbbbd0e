use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{choose_epsilon, estimate_derivatives, test_invariant, Cell, EpsilonSource, PipelineError, MAX_ORDER};
use crate::diffpoly::Ranking;
use crate::gpr::{GateConfig, GpSummary};
use crate::invariant::{eliminate, parse_invariant, parse_model, InvariantSpec, ModelSpec};
use crate::simulate::{add_noise, default_horizon, simulate, uniform_grid, NoiseMode, TimeSeries, DEFAULT_POINTS};
use crate::solvability::DEFAULT_ALPHA;

/// A model together with the invariant tested against every data set.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub name: String,
    pub model: ModelSpec,
    pub invariant: InvariantSpec,
}

impl Candidate {
    /// Eliminate `model` and keep its first input-output equation.
    pub fn from_model(model: ModelSpec) -> Result<Candidate, PipelineError> {
        let spec = eliminate(&model, &Ranking::default())?
            .into_iter()
            .next()
            .map(|e| e.spec)
            .ok_or_else(|| PipelineError::Config(format!("model `{}` has no input-output equation", model.name)))?;
        Ok(Candidate { name: model.name.clone(), model, invariant: spec })
    }
}

/// Load every `*.model` file in `dir`, sorted by file name.
///
/// A sibling `<stem>.inv` replaces the eliminated invariant.
pub fn load_candidates(dir: &Path) -> Result<Vec<Candidate>, PipelineError> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "model"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        let model = parse_model(&fs::read_to_string(&p)?)?;
        let inv = p.with_extension("inv");
        let candidate = if inv.is_file() {
            let mut spec = parse_invariant(&fs::read_to_string(&inv)?)?;
            spec.model.get_or_insert_with(|| model.name.clone());
            Candidate { name: model.name.clone(), model, invariant: spec }
        } else {
            Candidate::from_model(model)?
        };
        out.push(candidate);
    }
    Ok(out)
}

/// Parse `start:stop:step` or a comma-separated list into sorted, non-negative levels.
pub fn parse_levels(s: &str) -> Result<Vec<f64>, PipelineError> {
    let bad = || PipelineError::Config(format!("invalid level list `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    let levels = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step <= 0.0 || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        // round away accumulated binary error so 0.30000000000000004 prints as 0.3
        (0..count).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if levels.is_empty() || levels.iter().any(|&l| l < 0.0) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad());
    }
    Ok(levels)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub levels: Vec<f64>,
    pub points: usize,
    /// Overrides each model's own horizon.
    pub horizon: Option<f64>,
    pub noise_mode: NoiseMode,
    pub seed: u64,
    pub alpha: f64,
    /// Use simulated derivatives instead of GP estimates.
    pub exact_derivatives: bool,
    pub gate: GateConfig,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            levels: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            points: DEFAULT_POINTS,
            horizon: None,
            noise_mode: NoiseMode::AdditiveGaussian,
            seed: 0,
            alpha: DEFAULT_ALPHA,
            exact_derivatives: false,
            gate: GateConfig::default(),
        }
    }
}

/// Seed for the data set of generating model `model` at level index `level`.
pub fn dataset_seed(seed: u64, model: usize, level: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ ((model as u64) << 32 | level as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Verdict of one invariant on one data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub invariant: String,
    #[serde(flatten)]
    pub cell: Cell,
}

/// One generated data set and the verdict of every invariant on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub model: String,
    pub level: f64,
    pub seed: u64,
    pub epsilon: f64,
    pub epsilon_source: EpsilonSource,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gp: Option<GpSummary>,
    pub cells: Vec<CellEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RejectionMatrix {
    pub config: MatrixConfig,
    /// Data-generating models, in panel order.
    pub models: Vec<String>,
    /// Tested invariants, in row order.
    pub invariants: Vec<String>,
    pub datasets: Vec<Dataset>,
}

impl RejectionMatrix {
    pub fn dataset(&self, model: &str, level: f64) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.model == model && d.level == level)
    }

    pub fn cell(&self, model: &str, invariant: &str, level: f64) -> Option<&Cell> {
        self.dataset(model, level)?.cells.iter().find(|c| c.invariant == invariant).map(|c| &c.cell)
    }

    /// One row per `(model, invariant, level)`; `entry` is `0`, `1`, `gated` or `failed`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("model,invariant,level,entry,p_bound,tau,m,n,epsilon\n");
        for d in &self.datasets {
            for c in &d.cells {
                let entry = c.cell.code().map_or_else(|| c.cell.label().to_string(), |k| k.to_string());
                let (p, tau, m, n) = match c.cell.report() {
                    Some(r) => (format!("{:.16e}", r.p_bound), format!("{:.16e}", r.tau), r.m.to_string(), r.n.to_string()),
                    None => Default::default(),
                };
                out.push_str(&format!(
                    "{},{},{},{entry},{p},{tau},{m},{n},{:.16e}\n",
                    d.model, c.invariant, d.level, d.epsilon
                ));
            }
        }
        out
    }
}

fn max_order(candidates: &[Candidate]) -> usize {
    candidates.iter().map(|c| c.invariant.max_output_order() as usize).max().unwrap_or(0)
}

/// Generate one data set from `gen` and test every candidate invariant on it.
pub fn run_dataset(gen: &Candidate, candidates: &[Candidate], level: f64, seed: u64, cfg: &MatrixConfig) -> Dataset {
    let mut ds = Dataset {
        model: gen.name.clone(),
        level,
        seed,
        epsilon: 0.0,
        epsilon_source: EpsilonSource::Exact,
        gp: None,
        cells: Vec::new(),
    };
    let fill = |ds: &mut Dataset, cell: Cell| {
        ds.cells = candidates.iter().map(|c| CellEntry { invariant: c.name.clone(), cell: cell.clone() }).collect();
    };
    let source = format!("{}@{level}", gen.name);
    let grid = uniform_grid(cfg.points, cfg.horizon.unwrap_or_else(|| default_horizon(&gen.model)));
    let orders = if cfg.exact_derivatives { max_order(candidates) } else { 0 };
    let data = simulate(&gen.model, &grid, orders).and_then(|clean| {
        if level > 0.0 {
            add_noise(&clean, cfg.noise_mode, level, seed)
        } else {
            Ok(clean)
        }
    });
    let data = match data {
        Ok(d) => d,
        Err(e) => {
            fill(&mut ds, Cell::Failed { error: e.to_string() });
            return ds;
        }
    };
    let (series, rows): (TimeSeries, Vec<usize>) = if cfg.exact_derivatives {
        let y = data.output().unwrap_or_default();
        (ds.epsilon, ds.epsilon_source) = choose_epsilon(Some(level), None, y);
        let rows = (0..data.len()).collect();
        (data, rows)
    } else {
        let est = match estimate_derivatives(&data, MAX_ORDER.min(max_order(candidates).max(1)), &cfg.gate) {
            Ok(e) => e,
            Err(e) => {
                fill(&mut ds, Cell::Failed { error: e.to_string() });
                return ds;
            }
        };
        (ds.epsilon, ds.epsilon_source) = choose_epsilon(Some(level), Some(&est.fit), data.output().unwrap_or_default());
        ds.gp = Some(est.posterior.summary(est.gate.clone()));
        if !est.gate.pass {
            fill(&mut ds, Cell::Gated { reasons: est.gate.reasons.clone() });
            return ds;
        }
        let rows = est.kept_rows();
        (est.series, rows)
    };
    ds.cells = candidates
        .iter()
        .map(|c| {
            let cell = match test_invariant(&c.invariant, &series, &rows, ds.epsilon, cfg.alpha) {
                Ok(r) => Cell::from_report(r.with_labels(&c.name, &source)),
                Err(e) => Cell::Failed { error: e.to_string() },
            };
            CellEntry { invariant: c.name.clone(), cell }
        })
        .collect();
    ds
}

/// Parallelism from `INVREJECT_JOBS`, if set to a positive integer.
pub fn jobs_from_env() -> Option<usize> {
    std::env::var("INVREJECT_JOBS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Every candidate's data at every level, tested against every candidate invariant.
///
/// Data sets run on up to `jobs` threads; results are ordered by
/// `(model, level)` regardless of scheduling.
pub fn run_matrix(candidates: &[Candidate], cfg: &MatrixConfig, jobs: Option<usize>) -> Result<RejectionMatrix, PipelineError> {
    use rayon::prelude::*;
    if candidates.len() < 2 {
        return Err(PipelineError::Config(format!("need at least 2 models, got {}", candidates.len())));
    }
    if cfg.levels.iter().any(|l| !(l.is_finite() && *l >= 0.0)) || cfg.levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(PipelineError::Config("levels must be non-negative and strictly increasing".into()));
    }
    let jobs_list: Vec<(usize, usize)> =
        (0..candidates.len()).flat_map(|m| (0..cfg.levels.len()).map(move |l| (m, l))).collect();
    let work = |&(m, l): &(usize, usize)| {
        run_dataset(&candidates[m], candidates, cfg.levels[l], dataset_seed(cfg.seed, m, l), cfg)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let datasets = pool.install(|| jobs_list.par_iter().map(work).collect());
    Ok(RejectionMatrix {
        config: cfg.clone(),
        models: candidates.iter().map(|c| c.name.clone()).collect(),
        invariants: candidates.iter().map(|c| c.name.clone()).collect(),
        datasets,
    })
}
