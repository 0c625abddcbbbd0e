//! Time-course generation: RK4 integration of rational models, exact output
//! derivatives, closed-form inputs and seeded measurement noise.

mod compiled;
mod inputs;
mod lie;
mod noise;
mod rk4;

use std::io;

use thiserror::Error;

use crate::diffpoly::{DiffVar, VarKind};
use crate::invariant::ModelSpec;

pub use inputs::InputSignals;
pub use noise::{add_noise, rng_from_seed, NoiseMode, NoiseSpec};
pub use rk4::{integrate_fixed, integrate_model, Trajectory};

/// Default number of samples per series.
pub const DEFAULT_POINTS: usize = 100;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("parameter `{0}` has no value")]
    MissingValue(String),
    #[error("`{0}` cannot be evaluated numerically")]
    Unresolved(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("solution blew up (|x| > 1e12) at t = {time}")]
    BlowUp { time: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("integration did not converge with {0} substeps per interval")]
    NotConverged(usize),
    #[error("unknown noise mode `{0}` (expected relative, additive-gaussian or additive-uniform)")]
    UnknownNoiseMode(String),
    #[error("noise level must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Sampled signals on a common time grid.
///
/// Columns are kept in file order: outputs (by index, then order) before
/// inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub columns: Vec<(DiffVar, Vec<f64>)>,
    pub noise: Option<NoiseSpec>,
}

fn column_key(v: &DiffVar) -> (u8, u16, u16) {
    let class = match v.kind {
        VarKind::Output => 0,
        VarKind::Input => 1,
        VarKind::State => 2,
    };
    (class, v.index, v.order)
}

/// Column header for a signal: `y`, `dy`, `d2y`, `u1`, `du1`, `d2u1`.
pub fn column_name(v: &DiffVar) -> String {
    let base = match v.kind {
        VarKind::Output if v.index == 1 => "y".to_string(),
        VarKind::Output => format!("y{}", v.index),
        VarKind::Input => format!("u{}", v.index),
        VarKind::State => format!("x{}", v.index),
    };
    match v.order {
        0 => base,
        1 => format!("d{base}"),
        k => format!("d{k}{base}"),
    }
}

fn parse_column(name: &str) -> Option<DiffVar> {
    let name = name.trim();
    let v = match name.strip_prefix('d') {
        Some(rest) if rest.starts_with(|c: char| c.is_ascii_alphabetic()) => DiffVar::parse(rest)?.derivative(),
        _ => DiffVar::parse(name)?,
    };
    (!v.is_state()).then_some(v)
}

impl TimeSeries {
    pub fn new(times: Vec<f64>) -> Self {
        TimeSeries { times, columns: Vec::new(), noise: None }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Insert or replace a column, keeping file order.
    pub fn set_column(&mut self, v: DiffVar, values: Vec<f64>) {
        assert_eq!(values.len(), self.times.len(), "column length mismatch");
        match self.columns.binary_search_by_key(&column_key(&v), |(w, _)| column_key(w)) {
            Ok(i) => self.columns[i].1 = values,
            Err(i) => self.columns.insert(i, (v, values)),
        }
    }

    pub fn column(&self, v: &DiffVar) -> Option<&[f64]> {
        self.columns.iter().find(|(w, _)| w == v).map(|(_, c)| c.as_slice())
    }

    /// The output samples `y`.
    pub fn output(&self) -> Option<&[f64]> {
        self.column(&DiffVar::output(1))
    }

    pub fn vars(&self) -> impl Iterator<Item = &DiffVar> {
        self.columns.iter().map(|(v, _)| v)
    }

    /// Rows at the given indices.
    pub fn select(&self, rows: &[usize]) -> TimeSeries {
        TimeSeries {
            times: rows.iter().map(|&i| self.times[i]).collect(),
            columns: self.columns.iter().map(|(v, c)| (*v, rows.iter().map(|&i| c[i]).collect())).collect(),
            noise: self.noise,
        }
    }

    pub fn write_csv(&self, w: impl io::Write) -> Result<(), SimError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.vars().map(column_name));
        out.write_record(&header).map_err(|e| SimError::Csv(e.to_string()))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            row.extend(self.columns.iter().map(|(_, c)| format!("{:.16e}", c[i])));
            out.write_record(&row).map_err(|e| SimError::Csv(e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Read a series written by [`TimeSeries::write_csv`]; `d1y`-style
    /// headers are accepted too. The first column must be `t`.
    pub fn read_csv(r: impl io::Read) -> Result<TimeSeries, SimError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let header = rdr.headers().map_err(|e| SimError::Csv(e.to_string()))?.clone();
        if header.get(0) != Some("t") {
            return Err(SimError::Csv("first column must be `t`".into()));
        }
        let mut vars = Vec::new();
        for name in header.iter().skip(1) {
            let v = parse_column(name).ok_or_else(|| SimError::Csv(format!("unrecognized column `{name}`")))?;
            if vars.contains(&v) {
                return Err(SimError::Csv(format!("duplicate column `{name}`")));
            }
            vars.push(v);
        }
        let mut times = Vec::new();
        let mut cols = vec![Vec::new(); vars.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SimError::Csv(e.to_string()))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SimError::Csv(format!("row {}: `{s}` is not a finite number", line + 2)))
            };
            times.push(parse(&rec[0])?);
            for (k, col) in cols.iter_mut().enumerate() {
                col.push(parse(&rec[k + 1])?);
            }
        }
        if times.is_empty() {
            return Err(SimError::Csv("no data rows".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidGrid("times must be strictly increasing".into()));
        }
        let mut ts = TimeSeries::new(times);
        for (v, c) in vars.into_iter().zip(cols) {
            ts.set_column(v, c);
        }
        Ok(ts)
    }
}

/// `n` equally spaced times on `[0, horizon]`.
pub fn uniform_grid(n: usize, horizon: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![horizon],
        _ => (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default horizon: the model's own, else 10 for nonlinear and 5 for linear models.
pub fn default_horizon(m: &ModelSpec) -> f64 {
    if let Some(h) = m.horizon {
        return h;
    }
    let linear = m.rhs.iter().all(|r| r.is_polynomial() && r.numer().terms().all(|(mono, _)| signal_degree(mono) <= 1));
    if linear {
        5.0
    } else {
        10.0
    }
}

fn signal_degree(m: &crate::poly::Monomial<crate::invariant::Atom>) -> u32 {
    m.powers().iter().filter(|(a, _)| matches!(a, crate::invariant::Atom::Signal(_))).map(|(_, e)| *e).sum()
}

/// Integrate `m` and sample `y, …, y^(orders)` exactly plus every input and
/// its derivatives up to `orders`.
pub fn simulate(m: &ModelSpec, grid: &[f64], orders: usize) -> Result<TimeSeries, SimError> {
    let traj = integrate_model(m, grid)?;
    let (rhs, output) = compiled::numeric_model(m)?;
    let chain = lie::output_derivatives(&output, &rhs, orders);
    let layout = lie::Layout { n_states: m.num_states(), orders };
    let compiled = lie::compile_chain(&chain, layout)?;
    let inputs = InputSignals::new(m, orders);
    let n_in = inputs.count();
    let mut vals = vec![0.0; layout.width(n_in)];
    let mut ys = vec![Vec::with_capacity(grid.len()); orders + 1];
    let mut us = vec![vec![Vec::with_capacity(grid.len()); orders + 1]; n_in];
    for (t, x) in traj.times.iter().zip(&traj.states) {
        vals[..layout.n_states].copy_from_slice(x);
        for i in 0..n_in {
            for j in 0..=orders {
                let v = inputs.eval(i, j, *t)?;
                vals[layout.n_states + i * (orders + 1) + j] = v;
                us[i][j].push(v);
            }
        }
        for (k, c) in compiled.iter().enumerate() {
            let v = c.eval(&vals);
            if !v.is_finite() {
                return Err(SimError::Singular(format!("output derivative {k} is not finite at t = {t}")));
            }
            ys[k].push(v);
        }
    }
    let mut ts = TimeSeries::new(traj.times);
    for (k, col) in ys.into_iter().enumerate() {
        ts.set_column(DiffVar::output(1).with_order(k as u16), col);
    }
    for (i, orders) in us.into_iter().enumerate() {
        for (j, col) in orders.into_iter().enumerate() {
            ts.set_column(DiffVar::input(i as u16 + 1).with_order(j as u16), col);
        }
    }
    Ok(ts)
}

/// Exact values of the three-compartment example at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comp3Sample {
    /// `y, ẏ, ÿ, y⃛`.
    pub y: [f64; 4],
    /// `u₁, u̇₁, ü₁`.
    pub u: [f64; 3],
}

const COMP3_Y: [(f64, f64); 5] = [(7.0, 1.0), (-1.0, 2.0), (1.0, 4.0), (-1.0, 3.0), (-5.0, 5.0)];
const COMP3_U: [(f64, f64); 2] = [(2.0, 3.0), (12.0, 5.0)];

fn exp_sum(terms: &[(f64, f64)], order: i32, t: f64) -> f64 {
    terms.iter().map(|&(a, l)| a * (-l).powi(order) * (-l * t).exp()).sum()
}

/// `y = 7e⁻ᵗ − e⁻²ᵗ + e⁻⁴ᵗ − e⁻³ᵗ − 5e⁻⁵ᵗ` with `u₁ = 2e⁻³ᵗ + 12e⁻⁵ᵗ`.
pub fn closed_form_comp3(t: f64) -> Comp3Sample {
    Comp3Sample {
        y: [0, 1, 2, 3].map(|k| exp_sum(&COMP3_Y, k, t)),
        u: [0, 1, 2].map(|k| exp_sum(&COMP3_U, k, t)),
    }
}

/// The closed form sampled on `times`, with `y` through `y⃛` and `u₁` through `ü₁`.
pub fn comp3_series(times: &[f64]) -> TimeSeries {
    let samples: Vec<Comp3Sample> = times.iter().map(|&t| closed_form_comp3(t)).collect();
    let mut ts = TimeSeries::new(times.to_vec());
    for k in 0..4 {
        ts.set_column(DiffVar::output(1).with_order(k as u16), samples.iter().map(|s| s.y[k]).collect());
    }
    for k in 0..3 {
        ts.set_column(DiffVar::input(1).with_order(k as u16), samples.iter().map(|s| s.u[k]).collect());
    }
    ts
}
