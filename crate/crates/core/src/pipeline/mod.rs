//! End-to-end wiring: GP derivative estimation, the solvability test on an
//! invariant, and the cross-model rejection matrix.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffpoly::{DiffVar, VarKind};
use crate::gpr::{self, fit_hyperparameters, posterior_derivatives, quality_gate, Fit, GateConfig, GateVerdict, GpError, GpPosterior};
use crate::invariant::{InvariantError, InvariantSpec};
use crate::simulate::{SimError, TimeSeries};
use crate::solvability::{build_system, decide, SolvabilityReport, SolveError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("series has no output column `y`")]
    NoOutput,
    #[error("{0}")]
    Config(String),
}

/// GP-smoothed output derivatives on the data grid.
#[derive(Clone, Debug)]
pub struct Estimate {
    /// Posterior means `y, dy, …` plus the original input columns.
    pub series: TimeSeries,
    pub posterior: GpPosterior,
    pub fit: Fit,
    pub gate: GateVerdict,
}

impl Estimate {
    /// Row indices that survive per-point exclusion.
    pub fn kept_rows(&self) -> Vec<usize> {
        (0..self.series.len()).filter(|i| self.gate.excluded.binary_search(i).is_err()).collect()
    }
}

/// Noise-variance floors, as multiples of `θ²`, tried when the posterior
/// variance cancels to a negative value (near-interpolating fits of clean data).
const NOISE_FLOORS: [f64; 3] = [1e-10, 1e-8, 1e-6];

fn stable_posterior(times: &[f64], y: &[f64], fit: &Fit, max_order: usize) -> Result<GpPosterior, GpError> {
    let first = posterior_derivatives(times, y, &fit.hyper, times, max_order);
    let Err(GpError::NegativeVariance { .. }) = first else {
        return first;
    };
    let mut last = first;
    for f in NOISE_FLOORS {
        let mut h = fit.hyper;
        h.sigma2 = h.sigma2.max(f * h.theta2);
        last = posterior_derivatives(times, y, &h, times, max_order);
        if let Ok(p) = &mut last {
            p.warnings.push(format!("noise variance raised from {:.3e} to {:.3e} for a stable posterior", fit.hyper.sigma2, h.sigma2));
            return last;
        }
        if !matches!(last, Err(GpError::NegativeVariance { .. })) {
            break;
        }
    }
    last
}

/// Fit a GP to `y` and estimate derivatives up to `max_order` at the data times.
pub fn estimate_derivatives(ts: &TimeSeries, max_order: usize, gate: &GateConfig) -> Result<Estimate, PipelineError> {
    let y = ts.output().ok_or(PipelineError::NoOutput)?;
    let fit = fit_hyperparameters(&ts.times, y)?;
    let posterior = stable_posterior(&ts.times, y, &fit, max_order)?;
    let verdict = quality_gate(&posterior, gate);
    let mut series = TimeSeries::new(ts.times.clone());
    series.noise = ts.noise;
    for (k, o) in posterior.orders.iter().enumerate() {
        series.set_column(DiffVar::output(1).with_order(k as u16), o.mean.clone());
    }
    for (v, c) in &ts.columns {
        if v.kind == VarKind::Input {
            series.set_column(*v, c.clone());
        }
    }
    Ok(Estimate { series, posterior, fit, gate: verdict })
}

pub fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len().max(1) as f64).sqrt()
}

/// Where the `ε` of a test came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsilonSource {
    /// The noise level the data was generated or labelled with.
    Declared,
    /// `σ̂ / RMS(y)` from the GP fit.
    Estimated,
    /// Noise-free data.
    Exact,
}

/// Noise level for the scale matrices.
///
/// A positive declared level is used as given, whatever the noise mode.
/// Otherwise GP-smoothed data falls back to the fitted noise and exact data
/// gets `ε = 0`.
pub fn choose_epsilon(declared: Option<f64>, fit: Option<&Fit>, y: &[f64]) -> (f64, EpsilonSource) {
    match (declared, fit) {
        (Some(level), _) if level > 0.0 => (level, EpsilonSource::Declared),
        (_, Some(fit)) => (estimated_relative_level(fit, y), EpsilonSource::Estimated),
        _ => (0.0, EpsilonSource::Exact),
    }
}

/// Relative level implied by a GP fit: `σ̂ / RMS(y)`.
pub fn estimated_relative_level(fit: &Fit, y: &[f64]) -> f64 {
    let r = rms(y);
    if r > 0.0 {
        fit.hyper.sigma2.sqrt() / r
    } else {
        0.0
    }
}

/// Statistical test of `spec` on `data` at `rows`.
pub fn test_invariant(spec: &InvariantSpec, data: &TimeSeries, rows: &[usize], epsilon: f64, alpha: f64) -> Result<SolvabilityReport, PipelineError> {
    let sys = build_system(spec, data, rows, epsilon)?;
    Ok(decide(&sys, alpha)?)
}

/// Outcome of one cell of the rejection matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Cell {
    Rejected { report: SolvabilityReport },
    Compatible { report: SolvabilityReport },
    Gated { reasons: Vec<String> },
    Failed { error: String },
}

impl Cell {
    pub fn from_report(report: SolvabilityReport) -> Cell {
        if report.is_reject() {
            Cell::Rejected { report }
        } else {
            Cell::Compatible { report }
        }
    }

    /// `0` rejected, `1` compatible, `None` otherwise.
    pub fn code(&self) -> Option<u8> {
        match self {
            Cell::Rejected { .. } => Some(0),
            Cell::Compatible { .. } => Some(1),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Cell::Rejected { .. } => "rejected",
            Cell::Compatible { .. } => "compatible",
            Cell::Gated { .. } => "gated",
            Cell::Failed { .. } => "failed",
        }
    }

    pub fn report(&self) -> Option<&SolvabilityReport> {
        match self {
            Cell::Rejected { report } | Cell::Compatible { report } => Some(report),
            _ => None,
        }
    }
}

pub use gpr::MAX_ORDER;

mod matrix;
mod svg;
mod table;

pub use matrix::*;
pub use svg::heatmap_svg;
pub use table::*;
