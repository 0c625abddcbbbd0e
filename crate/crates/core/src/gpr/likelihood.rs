use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kernel::{se_kernel_deriv, Hyperparams};
use super::GpError;

/// Relative jitter added to the diagonal after a failed factorization.
const JITTER: [f64; 4] = [0.0, 1e-10, 1e-9, 1e-8];

pub(crate) fn kernel_matrix(times: &[f64], h: &Hyperparams) -> DMatrix<f64> {
    let n = times.len();
    DMatrix::from_fn(n, n, |i, j| se_kernel_deriv(0, 0, times[i], times[j], h))
}

/// Cholesky factor of `K + σ²I`, escalating jitter `1e-10·θ²` up to three times.
pub(crate) fn factor(times: &[f64], h: &Hyperparams) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    let base = kernel_matrix(times, h);
    for rel in JITTER {
        let jitter = rel * h.theta2;
        let mut k = base.clone();
        for i in 0..times.len() {
            k[(i, i)] += h.sigma2 + jitter;
        }
        if let Some(c) = Cholesky::new(k) {
            return Ok((c, jitter));
        }
    }
    Err(GpError::IllConditioned(*h))
}

fn log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Negative log marginal likelihood of `y` under a zero-mean prior.
pub fn neg_log_marginal_likelihood(times: &[f64], y: &[f64], h: &Hyperparams) -> Result<f64, GpError> {
    check(times, y, 1)?;
    let (c, _) = factor(times, h)?;
    let yv = DVector::from_column_slice(y);
    let alpha = c.solve(&yv);
    Ok(0.5 * yv.dot(&alpha) + 0.5 * log_det(&c) + 0.5 * y.len() as f64 * (2.0 * PI).ln())
}

/// NLL and its gradient with respect to `(ln θ², ln ℓ, ln σ²)`.
pub fn nll_and_gradient(times: &[f64], y: &[f64], h: &Hyperparams) -> Result<(f64, [f64; 3]), GpError> {
    check(times, y, 1)?;
    let n = y.len();
    let (c, _) = factor(times, h)?;
    let yv = DVector::from_column_slice(y);
    let alpha = c.solve(&yv);
    let nll = 0.5 * yv.dot(&alpha) + 0.5 * log_det(&c) + 0.5 * n as f64 * (2.0 * PI).ln();
    let kinv = inverse_spd(&c);
    let mut g = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let w = kinv[(i, j)] - alpha[i] * alpha[j];
            let r = (times[i] - times[j]) / h.ell;
            let k = h.theta2 * (-0.5 * r * r).exp();
            g[0] += w * k;
            g[1] += w * k * r * r;
        }
        g[2] += (kinv[(i, i)] - alpha[i] * alpha[i]) * h.sigma2;
    }
    Ok((nll, g.map(|v| 0.5 * v)))
}

/// `(LLᵀ)⁻¹` from the factor, via `L⁻¹` stored by columns.
///
/// Faster than the generic solve for the sizes used here.
fn inverse_spd(c: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    let l = c.l_dirty();
    let n = l.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..=i).map(|k| l[(i, k)]).collect()).collect();
    // cols[j][k - j] = (L⁻¹)[k][j]
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut col = Vec::with_capacity(n - j);
        col.push(1.0 / rows[j][j]);
        for i in j + 1..n {
            let row = &rows[i][j..i];
            let s: f64 = row.iter().zip(&col).map(|(a, b)| a * b).sum();
            col.push(-s / rows[i][i]);
        }
        cols.push(col);
    }
    let mut inv = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            // Σ_{k ≥ j} M[k][i] M[k][j]
            let a = &cols[i][j - i..];
            let v: f64 = a.iter().zip(&cols[j]).map(|(x, y)| x * y).sum();
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    inv
}

pub(crate) fn check(times: &[f64], y: &[f64], min: usize) -> Result<(), GpError> {
    if times.len() != y.len() {
        return Err(GpError::Shape(format!("{} times but {} values", times.len(), y.len())));
    }
    if times.len() < min {
        return Err(GpError::TooFewPoints { needed: min, got: times.len() });
    }
    if times.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(GpError::Shape("non-finite data".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_matches_generic() {
        let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let (c, _) = factor(&times, &Hyperparams::new(1.0, 0.5, 1e-2)).unwrap();
        let diff = (inverse_spd(&c) - c.inverse()).abs().max();
        assert!(diff < 1e-9, "{diff}");
    }
}
