//! Exact sparse multivariate polynomials.
//!
//! [`MPoly`] is generic over its variable type and its coefficient ring, so
//! the same arithmetic serves parameter polynomials (`Q[p]`), differential
//! polynomials (`Q[p][y, ẏ, …, x, ẋ, …]`) and the flat polynomials produced by
//! the expression parser. Polynomials over `Q` additionally get exact
//! division and a recursive gcd, which [`RatFunc`] uses to stay canonical.

mod coeff;
mod gcd;
mod monomial;
mod mpoly;
mod ratfunc;
mod symbol;

pub use coeff::{parse_decimal, rational_to_f64, Coeff};
pub use gcd::{gcd_all, integer_content};
pub use monomial::Monomial;
pub use mpoly::MPoly;
pub use ratfunc::RatFunc;
pub use symbol::Symbol;

use num_rational::BigRational;

/// Anything usable as a polynomial indeterminate.
pub trait Variable: Clone + Ord + Eq + std::hash::Hash + std::fmt::Debug + std::fmt::Display + Send + Sync {}

impl<T> Variable for T where T: Clone + Ord + Eq + std::hash::Hash + std::fmt::Debug + std::fmt::Display + Send + Sync {}

/// Polynomial in parameter symbols with exact rational coefficients.
pub type ParamPoly = MPoly<Symbol, BigRational>;
/// Rational function in parameter symbols.
pub type ParamRational = RatFunc<Symbol>;
