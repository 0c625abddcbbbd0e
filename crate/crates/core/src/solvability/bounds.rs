use nalgebra::DMatrix;
use statrs::function::gamma::gamma_ur;

/// `max(max_i ‖C_{i,:}‖², max_j ‖C_{:,j}‖²)`.
pub fn tropp_variance(c: &DMatrix<f64>) -> f64 {
    let rows = c.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max);
    let cols = c.column_iter().map(|col| col.norm_squared()).fold(0.0, f64::max);
    rows.max(cols)
}

/// `min(1, (m+n)·exp(−x²/(2σ²)))`, the tail bound for `‖C∘Z‖`.
pub fn tropp_tail(c: &DMatrix<f64>, x: f64) -> f64 {
    assert!(x >= 0.0, "tail argument must be non-negative");
    gaussian_tail((c.nrows() + c.ncols()) as f64, tropp_variance(c), x)
}

/// `min(1, dim·exp(−x²/(2σ²)))` with the `σ² = 0` limit.
pub(crate) fn gaussian_tail(dim: f64, var: f64, x: f64) -> f64 {
    if var == 0.0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    (dim * (-x * x / (2.0 * var)).exp()).min(1.0)
}

/// `Pr(χ_{mn} ≥ x/‖C‖_F)`, a looser cross-check on the same tail.
pub fn frobenius_chi_tail(c: &DMatrix<f64>, x: f64) -> f64 {
    assert!(x >= 0.0, "tail argument must be non-negative");
    let f = c.norm();
    if f == 0.0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    if x == 0.0 {
        return 1.0;
    }
    let k = (c.nrows() * c.ncols()) as f64;
    let z = x / f;
    gamma_ur(0.5 * k, 0.5 * z * z).min(1.0)
}

pub(crate) fn phi(x: f64) -> f64 {
    // statrs' erfc is off by ~3e-11 near 0.7
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// The two terms of the tail bound on the test statistic and their capped sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PValueBound {
    pub p1: f64,
    pub p2: f64,
    pub p_bound: f64,
}

/// Closed-form bound on `Pr(τ ≥ x)` from the variance parameters
/// `σ_A²`, `σ_B²` (already scaled by `ε²`) and the shape of `A`.
///
/// `σ_A = 0` falls back to the tail of `C_b` alone; with both zero any
/// positive statistic is impossible under the null.
pub fn pvalue_bound_from(sigma_a2: f64, sigma_b2: f64, m: usize, n: usize, x: f64) -> PValueBound {
    assert!(x >= 0.0, "statistic must be non-negative");
    let dim = (m + n) as f64;
    if sigma_a2 == 0.0 {
        let p = gaussian_tail((m + 1) as f64, sigma_b2, x);
        return PValueBound { p1: 0.0, p2: p, p_bound: p };
    }
    let p2 = gaussian_tail(dim, sigma_a2, x);
    let p1 = if sigma_b2 == 0.0 || x == 0.0 {
        0.0
    } else {
        let total = sigma_a2 + sigma_b2;
        let sigma = (sigma_a2 * sigma_b2 / total).sqrt();
        let a = sigma_a2 / total;
        let window = phi((1.0 - a) * x / sigma) - phi(-a * x / sigma);
        (2.0 * std::f64::consts::PI).sqrt() * sigma * dim * dim * window * (-x * x / (2.0 * total)).exp()
    };
    PValueBound { p1, p2, p_bound: (p1 + p2).min(1.0) }
}
