//! The linear system `Aκ = b` obtained by evaluating an invariant on data,
//! its augmented-matrix test statistic and the tail bounds that calibrate it.

mod bounds;
mod report;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::diffpoly::{DiffMonomial, DiffVar, VarKind};
use crate::invariant::InvariantSpec;
use crate::poly::rational_to_f64;
use crate::simulate::{rng_from_seed, TimeSeries};

pub use bounds::{frobenius_chi_tail, pvalue_bound_from, tropp_tail, tropp_variance, PValueBound};
pub use report::{decide, decide_deterministic, Decision, SolvabilityReport, Verdict, DEFAULT_ALPHA, LOW_RANK_RATIO};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("data has no column `{0}`")]
    MissingColumn(String),
    #[error("row index {0} out of range")]
    RowOutOfRange(usize),
    #[error("non-finite entry at row {row} ({what})")]
    NonFinite { row: usize, what: String },
    #[error("perturbation bound must be non-negative, got {0}")]
    NegativeBound(f64),
    #[error("singular value decomposition failed")]
    Svd,
}

/// Column meaning: a monomial and, when its coefficient is a bare unknown,
/// that unknown's name and the factor relating it to `κ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnInfo {
    pub slot: String,
    pub monomial: DiffMonomial,
    pub unknown: Option<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Noise scales without the `ε` factor.
    pub ca: DMatrix<f64>,
    pub cb: DVector<f64>,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub columns: Vec<ColumnInfo>,
    pub warnings: Vec<String>,
}

/// Signals assumed to carry measurement noise: outputs and their derivatives.
pub fn is_noisy(v: &DiffVar) -> bool {
    v.kind == VarKind::Output
}

/// `‖∇ψ(x)∘x‖ = |ψ(x)|·√(Σ a_k²)` over the noisy factors of `ψ = Π x_k^{a_k}`.
pub fn monomial_noise_scale(psi: &DiffMonomial, value: impl Fn(&DiffVar) -> f64, noisy: impl Fn(&DiffVar) -> bool) -> f64 {
    let sq: u32 = psi.powers().iter().filter(|(v, _)| noisy(v)).map(|(_, a)| a * a).sum();
    psi.eval(value).abs() * (sq as f64).sqrt()
}

/// `‖∇ξ(x)∘x‖` for a polynomial: the per-variable sums are formed before the norm.
pub fn polynomial_noise_scale<'a>(
    terms: impl IntoIterator<Item = (&'a DiffMonomial, f64)>,
    value: impl Fn(&DiffVar) -> f64,
    noisy: impl Fn(&DiffVar) -> bool,
) -> f64 {
    let mut grad: Vec<(DiffVar, f64)> = Vec::new();
    for (m, c) in terms {
        let v = c * m.eval(&value);
        for (x, a) in m.powers() {
            if !noisy(x) {
                continue;
            }
            let g = v * *a as f64;
            match grad.iter_mut().find(|(y, _)| y == x) {
                Some((_, acc)) => *acc += g,
                None => grad.push((*x, g)),
            }
        }
    }
    grad.iter().map(|(_, g)| g * g).sum::<f64>().sqrt()
}

/// Evaluate `spec` on the selected rows of `data`.
///
/// Column `j` holds `ψ_j`, `b` holds `ξ`; `C_A`, `C_b` follow the
/// first-order relative-noise rule with only output signals noisy.
pub fn build_system(spec: &InvariantSpec, data: &TimeSeries, rows: &[usize], epsilon: f64) -> Result<LinearSystem, SolveError> {
    let mut needed: Vec<DiffVar> = spec.signals().into_iter().collect();
    needed.sort_by_key(|v| (v.kind, v.index, v.order));
    let mut cols = Vec::with_capacity(needed.len());
    for v in &needed {
        let c = data.column(v).ok_or_else(|| SolveError::MissingColumn(crate::simulate::column_name(v)))?;
        cols.push((*v, c));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= data.len()) {
        return Err(SolveError::RowOutOfRange(r));
    }
    let xi_terms: Vec<(DiffMonomial, f64)> = spec.xi.terms().map(|(m, c)| (m.clone(), rational_to_f64(c))).collect();
    let (m, n) = (rows.len(), spec.slots.len());
    let mut a = DMatrix::zeros(m, n);
    let mut ca = DMatrix::zeros(m, n);
    let mut b = DVector::zeros(m);
    let mut cb = DVector::zeros(m);
    for (i, &r) in rows.iter().enumerate() {
        let value = |v: &DiffVar| cols.iter().find(|(w, _)| w == v).map(|(_, c)| c[r]).expect("column collected");
        for (j, slot) in spec.slots.iter().enumerate() {
            a[(i, j)] = slot.monomial.eval(value);
            ca[(i, j)] = monomial_noise_scale(&slot.monomial, value, is_noisy);
        }
        b[i] = xi_terms.iter().map(|(mono, c)| c * mono.eval(value)).sum::<f64>();
        cb[i] = polynomial_noise_scale(xi_terms.iter().map(|(mono, c)| (mono, *c)), value, is_noisy);
        let finite = a.row(i).iter().chain(ca.row(i).iter()).all(|v| v.is_finite()) && b[i].is_finite() && cb[i].is_finite();
        if !finite {
            return Err(SolveError::NonFinite { row: r, what: format!("t = {}", data.times[r]) });
        }
    }
    let columns = spec
        .slots
        .iter()
        .map(|s| ColumnInfo {
            slot: s.id.clone(),
            monomial: s.monomial.clone(),
            unknown: s.unknown().map(|(name, scale)| (name.to_string(), rational_to_f64(&scale))),
        })
        .collect();
    let mut warnings = Vec::new();
    if m <= n {
        warnings.push(format!("uninformative: {m} rows for {n} unknowns (need m > n)"));
    }
    Ok(LinearSystem { a, b, ca, cb, epsilon, times: rows.iter().map(|&r| data.times[r]).collect(), columns, warnings })
}

/// Descending singular values.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>, SolveError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let svd = m.clone().try_svd(false, false, f64::EPSILON, 0).ok_or(SolveError::Svd)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

impl LinearSystem {
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn augmented(&self) -> DMatrix<f64> {
        let mut ab = self.a.clone().insert_column(self.n(), 0.0);
        ab.set_column(self.n(), &self.b);
        ab
    }

    pub fn augmented_scales(&self) -> DMatrix<f64> {
        let mut c = self.ca.clone().insert_column(self.n(), 0.0);
        c.set_column(self.n(), &self.cb);
        c
    }

    /// `C_b` as an `m × 1` matrix.
    pub fn cb_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.m(), 1, self.cb.as_slice())
    }

    /// `ε²·σ²` for `C_A` and `C_b`.
    pub fn variances(&self) -> (f64, f64) {
        let e2 = self.epsilon * self.epsilon;
        (e2 * tropp_variance(&self.ca), e2 * tropp_variance(&self.cb_matrix()))
    }

    /// Keep only the rows at `keep` (indices into this system).
    pub fn select_rows(&self, keep: &[usize]) -> LinearSystem {
        let pick = |mat: &DMatrix<f64>| DMatrix::from_fn(keep.len(), mat.ncols(), |i, j| mat[(keep[i], j)]);
        let mut out = LinearSystem {
            a: pick(&self.a),
            b: DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.b[i])),
            ca: pick(&self.ca),
            cb: DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.cb[i])),
            epsilon: self.epsilon,
            times: keep.iter().map(|&i| self.times[i]).collect(),
            columns: self.columns.clone(),
            warnings: Vec::new(),
        };
        if out.m() <= out.n() {
            out.warnings.push(format!("uninformative: {} rows for {} unknowns (need m > n)", out.m(), out.n()));
        }
        out
    }
}

/// `τ = σ_{n+1}([A, b])`, zero when the augmented matrix has fewer than `n+1` rows.
pub fn test_statistic(sys: &LinearSystem) -> Result<f64, SolveError> {
    let s = singular_values(&sys.augmented())?;
    Ok(s.get(sys.n()).copied().unwrap_or(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeterministicVerdict {
    pub tau: f64,
    pub bound: f64,
    pub reject: bool,
}

/// Reject when `τ` exceeds a bound on `‖[Ã − A, b̃ − b]‖`.
pub fn deterministic_reject(sys: &LinearSystem, bound: f64) -> Result<DeterministicVerdict, SolveError> {
    if bound < 0.0 || bound.is_nan() {
        return Err(SolveError::NegativeBound(bound));
    }
    let tau = test_statistic(sys)?;
    Ok(DeterministicVerdict { tau, bound, reject: tau > bound })
}

/// Add `ε·U(0, 1)` to every entry whose noise scale is positive.
///
/// Returns the perturbed system and the Frobenius norm of the perturbation
/// actually added.
pub fn perturb_uniform(sys: &LinearSystem, epsilon: f64, seed: u64) -> (LinearSystem, f64) {
    let mut rng = rng_from_seed(seed);
    let mut out = sys.clone();
    let mut sq = 0.0;
    for i in 0..sys.m() {
        for j in 0..sys.n() {
            if sys.ca[(i, j)] > 0.0 {
                let d = epsilon * rng.random::<f64>();
                out.a[(i, j)] += d;
                sq += d * d;
            }
        }
        if sys.cb[i] > 0.0 {
            let d = epsilon * rng.random::<f64>();
            out.b[i] += d;
            sq += d * d;
        }
    }
    (out, sq.sqrt())
}

/// Least-squares `κ` with its residual norm `‖Aκ − b‖`.
pub fn least_squares(sys: &LinearSystem) -> Result<(DVector<f64>, f64), SolveError> {
    if sys.n() == 0 {
        return Ok((DVector::zeros(0), sys.b.norm()));
    }
    let svd = sys.a.clone().try_svd(true, true, f64::EPSILON, 0).ok_or(SolveError::Svd)?;
    let kappa = svd.solve(&sys.b, 1e-13 * svd.singular_values.max()).map_err(|_| SolveError::Svd)?;
    let resid = (&sys.a * &kappa - &sys.b).norm();
    Ok((kappa, resid))
}

/// Values of the named unknowns implied by `κ`, in column order.
pub fn unknown_values(sys: &LinearSystem, kappa: &DVector<f64>) -> Vec<(String, f64)> {
    sys.columns.iter().zip(kappa.iter()).filter_map(|(c, k)| c.unknown.as_ref().map(|(name, scale)| (name.clone(), k / scale))).collect()
}
