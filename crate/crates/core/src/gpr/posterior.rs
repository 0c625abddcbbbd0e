use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fit::center;
use super::kernel::{prior_variance, se_kernel_deriv, Hyperparams};
use super::likelihood::{check, factor};
use super::GpError;

pub const MAX_ORDER: usize = 3;

/// Posterior mean and variance of one derivative order at the prediction times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl OrderEstimate {
    pub fn std(&self) -> impl Iterator<Item = f64> + '_ {
        self.var.iter().map(|v| v.sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpPosterior {
    pub times: Vec<f64>,
    /// Indexed by derivative order, `0..=max_order`.
    pub orders: Vec<OrderEstimate>,
    pub hyper: Hyperparams,
    /// NLL of the centered data at `hyper`.
    pub nll: f64,
    pub y_mean: f64,
    pub warnings: Vec<String>,
}

impl GpPosterior {
    pub fn max_order(&self) -> usize {
        self.orders.len() - 1
    }
}

/// Joint posterior of `y` and its derivatives up to `max_order` at `s`.
///
/// Data are centered by their sample mean, which is added back to order 0.
/// One factorization of `K + σ²I` serves every order.
pub fn posterior_derivatives(times: &[f64], y: &[f64], h: &Hyperparams, s: &[f64], max_order: usize) -> Result<GpPosterior, GpError> {
    check(times, y, 1)?;
    if max_order > MAX_ORDER {
        return Err(GpError::UnsupportedOrder(max_order));
    }
    if !h.is_valid() {
        return Err(GpError::Shape(format!("invalid hyperparameters {h:?}")));
    }
    let (y_mean, yc) = center(y);
    let (chol, _) = factor(times, h)?;
    let yv = DVector::from_vec(yc);
    let alpha = chol.solve(&yv);
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let nll = 0.5 * yv.dot(&alpha) + 0.5 * log_det + 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln();

    let mut warnings = Vec::new();
    let (lo, hi) = (times[0] - h.ell, times[times.len() - 1] + h.ell);
    if let Some(t) = s.iter().find(|t| **t < lo || **t > hi) {
        warnings.push(format!("prediction time {t} extrapolates beyond the data range by more than one length scale"));
    }

    let mut orders = Vec::with_capacity(max_order + 1);
    for order in 0..=max_order {
        // cross[(i, j)] = cov(f^(order)(s_i), f(t_j))
        let cross = DMatrix::from_fn(s.len(), times.len(), |i, j| se_kernel_deriv(order, 0, s[i], times[j], h));
        let mut mean: Vec<f64> = (&cross * &alpha).iter().copied().collect();
        if order == 0 {
            mean.iter_mut().for_each(|m| *m += y_mean);
        }
        let v = chol.l_dirty().solve_lower_triangular(&cross.transpose()).expect("triangular factor is nonsingular");
        let prior = prior_variance(order, h);
        let tol = (1e-8 * prior).max(1e-10);
        let mut var = Vec::with_capacity(s.len());
        for (i, t) in s.iter().enumerate() {
            let raw = prior - v.column(i).norm_squared();
            if raw < -tol {
                return Err(GpError::NegativeVariance { order, time: *t, value: raw });
            }
            var.push(raw.max(0.0));
        }
        orders.push(OrderEstimate { mean, var });
    }
    Ok(GpPosterior { times: s.to_vec(), orders, hyper: *h, nll, y_mean, warnings })
}
