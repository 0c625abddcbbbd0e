//! Differential polynomials and Ritt reduction.
//!
//! A [`DiffPolynomial`] is a polynomial in signal derivatives whose
//! coefficients are exact polynomials in the model parameters. Elimination
//! never divides by a coefficient, so coefficients stay polynomial until the
//! invariant module normalizes them.

mod ritt;
mod var;

use std::cmp::Ordering;

use thiserror::Error;

use crate::poly::{gcd_all, integer_content, Coeff, MPoly, Monomial, ParamPoly};

pub use ritt::{characteristic_set, extract_input_output, pseudo_divide, reduce, CharSet, PseudoDivision};
pub use var::{DiffVar, VarKind};

pub type DiffMonomial = Monomial<DiffVar>;
pub type DiffPolynomial = MPoly<DiffVar, ParamPoly>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiffError {
    #[error("no leader: polynomial has no differential indeterminate")]
    NoLeader,
    #[error("derivative order overflow: {var} would exceed the maximum order {max}")]
    OrderOverflow { var: String, max: u16 },
    #[error("reduction did not stabilize within {0} steps")]
    NotStabilized(usize),
    #[error("degenerate generator: polynomial is identically zero")]
    ZeroGenerator,
    #[error("inconsistent system: reduction produced the nonzero constant {0}")]
    Inconsistent(String),
    #[error("out of supported scope: {0}")]
    OutOfScope(String),
    #[error("elimination failed: characteristic set has no state-free member")]
    NoStateFree,
}

/// Configuration of the fixed orderly ranking and elimination limits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    pub max_order: u16,
    pub max_steps: usize,
    pub max_states: usize,
    pub max_outputs: usize,
    pub max_inputs: usize,
}

impl Default for Ranking {
    fn default() -> Self {
        Ranking { max_order: 12, max_steps: 10_000, max_states: 3, max_outputs: 1, max_inputs: 1 }
    }
}

/// Highest-ranked indeterminate of `p`.
pub fn leader(p: &DiffPolynomial) -> Result<DiffVar, DiffError> {
    p.max_var().ok_or(DiffError::NoLeader)
}

/// Coefficient of the highest power of the leader.
pub fn initial(p: &DiffPolynomial) -> Result<DiffPolynomial, DiffError> {
    Ok(p.lead_coeff_in(&leader(p)?))
}

/// Partial derivative with respect to the leader.
pub fn separant(p: &DiffPolynomial) -> Result<DiffPolynomial, DiffError> {
    Ok(p.partial(&leader(p)?))
}

/// Compare by leader, then by degree in the leader.
pub fn compare_rank(a: &DiffPolynomial, b: &DiffPolynomial, _r: &Ranking) -> Result<Ordering, DiffError> {
    let la = leader(a)?;
    let lb = leader(b)?;
    Ok(la.cmp(&lb).then_with(|| a.degree_in(&la).cmp(&b.degree_in(&lb))))
}

/// Total time derivative; parameters are constant.
pub fn differentiate(p: &DiffPolynomial, r: &Ranking) -> Result<DiffPolynomial, DiffError> {
    let mut out = DiffPolynomial::zero();
    for v in p.vars() {
        if v.order >= r.max_order {
            return Err(DiffError::OrderOverflow { var: v.derivative().to_string(), max: r.max_order });
        }
        let dv = DiffPolynomial::var(v.derivative());
        out = &out + &(&p.partial(&v) * &dv);
    }
    Ok(out)
}

/// `k`-fold time derivative.
pub fn prolong(p: &DiffPolynomial, k: u16, r: &Ranking) -> Result<DiffPolynomial, DiffError> {
    let mut out = p.clone();
    for _ in 0..k {
        out = differentiate(&out, r)?;
    }
    Ok(out)
}

/// Whether `f` is reduced with respect to `a`: no proper derivative of the
/// leader of `a` occurs in `f`, and the leader itself has lower degree.
pub fn is_reduced(f: &DiffPolynomial, a: &DiffPolynomial) -> Result<bool, DiffError> {
    let u = leader(a)?;
    let d = a.degree_in(&u);
    for v in f.vars() {
        match v.derivative_order_over(&u) {
            Some(0) if f.degree_in(&v) >= d => return Ok(false),
            Some(k) if k > 0 => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

pub fn is_state_free(p: &DiffPolynomial) -> bool {
    !p.vars().iter().any(DiffVar::is_state)
}

/// Remove the monomial content and the parameter content, then scale to
/// coprime integer coefficients with a positive leading coefficient.
///
/// Valid inside a prime differential ideal that contains neither signals nor
/// nonzero parameter polynomials.
pub fn simplify(p: &DiffPolynomial) -> DiffPolynomial {
    if p.is_zero() {
        return p.clone();
    }
    let mono = p.monomial_content();
    let p = if mono.is_one() { p.clone() } else { p.div_monomial(&mono).expect("content divides") };
    let g = gcd_all(p.terms().map(|(_, c)| c));
    let p = if g.is_constant() {
        p
    } else {
        p.map_coeffs(|c| c.exact_div(&g).expect("content divides"))
    };
    integer_normalize(&p)
}

/// Scale by a rational so all coefficients are coprime integers and the
/// leading coefficient of the leading term is positive.
pub fn integer_normalize(p: &DiffPolynomial) -> DiffPolynomial {
    if p.is_zero() {
        return p.clone();
    }
    let mut factor = integer_content(p.terms().flat_map(|(_, c)| c.terms().map(|(_, q)| q)));
    let lead = p.leading_term().map(|(_, c)| c.lead_coefficient()).expect("nonzero");
    if num_traits::Signed::is_negative(&(lead / &factor)) {
        factor = -factor;
    }
    let inv = ParamPoly::constant(num_traits::Inv::inv(factor));
    p.map_coeffs(|c| c.mul(&inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> DiffPolynomial {
        DiffPolynomial::var(DiffVar::parse(s).unwrap())
    }

    #[test]
    fn rank_comparisons() {
        let r = Ranking::default();
        assert_eq!(compare_rank(&v("d1y"), &v("d2y"), &r), Ok(Ordering::Less));
        let a = &v("d2y") + &v("y");
        assert_eq!(compare_rank(&a, &v("d2y").pow(2), &r), Ok(Ordering::Less));
        let b = &v("x1") - &v("y");
        let c = &v("d1y") - &v("u1");
        assert_eq!(compare_rank(&b, &c, &r), Ok(Ordering::Greater));
        assert_eq!(compare_rank(&DiffPolynomial::zero(), &c, &r), Err(DiffError::NoLeader));
    }

    #[test]
    fn differentiation_is_a_derivation() {
        let r = Ranking::default();
        let f = &v("y").pow(2) * &v("d1y");
        let df = differentiate(&f, &r).unwrap();
        let a = (&v("y") * &v("d1y").pow(2)).scale(&ParamPoly::from_integer(2));
        let want = &a + &(&v("y").pow(2) * &v("d2y"));
        assert_eq!(df, want);
        let tight = Ranking { max_order: 2, ..Ranking::default() };
        assert!(matches!(differentiate(&v("d2y"), &tight), Err(DiffError::OrderOverflow { .. })));
    }

    #[test]
    fn canonical_display() {
        let p11 = ParamPoly::var("p11".into());
        let p22 = ParamPoly::var("p22".into());
        let p12 = ParamPoly::var("p12".into());
        let p21 = ParamPoly::var("p21".into());
        let det = &(&p11 * &p22) - &(&p12 * &p21);
        let tr = &p11 + &p22;
        let f = &(&v("d2y") - &v("d1y").scale(&tr)) + &v("y").scale(&det);
        assert_eq!(f.to_string(), "d2y - (p11 + p22)*d1y + (p11*p22 - p12*p21)*y");
    }

    #[test]
    fn simplify_strips_contents() {
        let p1 = ParamPoly::var("p1".into());
        let two_p1 = p1.scale(&crate::poly::parse_decimal("-2").unwrap());
        let f = (&(&v("d1y") * &v("y")) - &(&v("y").pow(2).scale(&p1))).scale(&two_p1);
        let s = simplify(&f);
        assert_eq!(s.to_string(), "d1y - p1*y");
    }
}
