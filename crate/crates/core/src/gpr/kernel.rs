use serde::{Deserialize, Serialize};

use super::GpError;

/// Highest Hermite order supported; covers `m + n ≤ 6` with headroom.
pub const MAX_HERMITE: usize = 8;

/// Squared-exponential hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Signal variance `θ²`.
    pub theta2: f64,
    /// Length scale `ℓ`.
    pub ell: f64,
    /// Observation noise variance `σ²`.
    pub sigma2: f64,
}

impl Hyperparams {
    pub fn new(theta2: f64, ell: f64, sigma2: f64) -> Self {
        Hyperparams { theta2, ell, sigma2 }
    }

    pub fn is_valid(&self) -> bool {
        self.theta2.is_finite() && self.theta2 > 0.0 && self.ell.is_finite() && self.ell > 0.0 && self.sigma2.is_finite() && self.sigma2 >= 0.0
    }

    pub(crate) fn to_log(self) -> [f64; 3] {
        [self.theta2.ln(), self.ell.ln(), self.sigma2.ln()]
    }

    pub(crate) fn from_log(p: [f64; 3]) -> Self {
        Hyperparams { theta2: p[0].exp(), ell: p[1].exp(), sigma2: p[2].exp() }
    }
}

/// Probabilists' Hermite polynomial `He_n(x)`.
pub fn hermite(n: usize, x: f64) -> Result<f64, GpError> {
    if n > MAX_HERMITE {
        return Err(GpError::UnsupportedOrder(n));
    }
    Ok(hermite_unchecked(n, x))
}

fn hermite_unchecked(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `∂ᵐ_t ∂ⁿ_t' k(t, t')` for `k = θ² exp(−(t−t')²/(2ℓ²))`.
///
/// Equals `(−1)ᵐ ℓ^−(m+n) He_{m+n}((t−t')/ℓ) k(t, t')`.
pub fn se_kernel_deriv(m: usize, n: usize, t: f64, t_prime: f64, h: &Hyperparams) -> f64 {
    assert!(m + n <= MAX_HERMITE, "kernel derivative order {} unsupported", m + n);
    let r = (t - t_prime) / h.ell;
    let k = h.theta2 * (-0.5 * r * r).exp();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sign * hermite_unchecked(m + n, r) * k / h.ell.powi((m + n) as i32)
}

/// Prior variance of the `order`-th derivative: `θ² (2i−1)!! / ℓ^{2i}`.
pub fn prior_variance(order: usize, h: &Hyperparams) -> f64 {
    se_kernel_deriv(order, order, 0.0, 0.0, h)
}
