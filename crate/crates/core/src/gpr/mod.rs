//! Gaussian-process regression with a squared-exponential kernel: maximum
//! likelihood hyperparameters and joint posteriors for `y` and its first
//! three derivatives.

mod fit;
mod gate;
mod kernel;
mod likelihood;
mod posterior;

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{fit_hyperparameters, start_grid, Fit, StartReport, MAX_CG_ITERATIONS, MIN_FIT_POINTS};
pub use gate::{quality_gate, GateConfig, GateVerdict};
pub use kernel::{hermite, prior_variance, se_kernel_deriv, Hyperparams, MAX_HERMITE};
pub use likelihood::{neg_log_marginal_likelihood, nll_and_gradient};
pub use posterior::{posterior_derivatives, GpPosterior, OrderEstimate, MAX_ORDER};

#[derive(Debug, Error)]
pub enum GpError {
    #[error("derivative order {0} is not supported")]
    UnsupportedOrder(usize),
    #[error("ill-conditioned kernel at {0:?}")]
    IllConditioned(Hyperparams),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{0}")]
    Shape(String),
    #[error("every start failed: {0:?}")]
    AllStartsFailed(Vec<String>),
    #[error("posterior variance {value:e} of order {order} at t = {time} is negative")]
    NegativeVariance { order: usize, time: f64, value: f64 },
}

/// JSON sidecar written next to a posterior CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpSummary {
    pub hyper: Hyperparams,
    pub nll: f64,
    pub y_mean: f64,
    pub max_order: usize,
    pub gate: GateVerdict,
    pub warnings: Vec<String>,
}

impl GpPosterior {
    pub fn summary(&self, gate: GateVerdict) -> GpSummary {
        GpSummary { hyper: self.hyper, nll: self.nll, y_mean: self.y_mean, max_order: self.max_order(), gate, warnings: self.warnings.clone() }
    }

    /// `t, y0_mean, y0_var, …` followed by any `extra` columns.
    pub fn write_csv(&self, w: impl io::Write, extra: &[(String, Vec<f64>)]) -> io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        for k in 0..self.orders.len() {
            header.push(format!("y{k}_mean"));
            header.push(format!("y{k}_var"));
        }
        header.extend(extra.iter().map(|(n, _)| n.clone()));
        out.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![format!("{t:.16e}")];
            for o in &self.orders {
                row.push(format!("{:.16e}", o.mean[i]));
                row.push(format!("{:.16e}", o.var[i]));
            }
            row.extend(extra.iter().map(|(_, c)| format!("{:.16e}", c[i])));
            out.write_record(&row)?;
        }
        out.flush()
    }
}
