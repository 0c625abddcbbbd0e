//! Models, invariants and the text formats for both.
//!
//! A `.model` file describes a rational ODE system; [`generators`] turns it
//! into differential polynomials for elimination. A `.inv` file holds one
//! invariant `Σ c_i·ψ_i = ξ`; [`InvariantSpec`] is its parsed, canonical form.

mod builtin;
mod model;
mod spec;
mod text;

use std::fmt;

use thiserror::Error;

use crate::diffpoly::{characteristic_set, extract_input_output, DiffError, DiffPolynomial, DiffVar, Ranking};
use crate::expr::{ExprError, Pos};
use crate::poly::Symbol;

pub use builtin::{builtin_invariant, builtin_model, BUILTIN_INVARIANTS, BUILTIN_MODELS};
pub use model::{generators, parse_model, InputDecl, ModelRational, ModelSpec, ParamDecl};
pub use spec::{
    default_pivot, identifiability_count, normalize_monic, parse_invariant, render, substitute_known, to_inv,
    Identifiability, IdentifiabilityReport, InvPolynomial, InvariantSpec, NumericPolynomial, Slot,
};

/// Indeterminate of a model right-hand side: parameters order below signals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Param(Symbol),
    Signal(DiffVar),
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Param(s) => write!(f, "{s}"),
            Atom::Signal(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("missing section '{0}'")]
    MissingSection(&'static str),
    #[error("{pos}: malformed derivative token '{token}'")]
    MalformedDerivative { pos: Pos, token: String },
    #[error("{pos}: equation is not polynomial in the signals")]
    NotPolynomial { pos: Pos },
    #[error("duplicate monomial {monomial}: its coefficient combines the unknowns {names}")]
    DuplicateMonomial { monomial: String, names: String },
    #[error("unknown {0} multiplies more than one monomial")]
    SharedUnknown(String),
    #[error("pivot {0} does not occur in the polynomial")]
    PivotAbsent(String),
    #[error("polynomial has no signal monomial to normalize on")]
    NoPivot,
    #[error(transparent)]
    Elimination(#[from] DiffError),
}

/// An extracted input-output polynomial and its monic form.
#[derive(Clone, Debug, PartialEq)]
pub struct Elimination {
    pub raw: DiffPolynomial,
    pub spec: InvariantSpec,
}

/// Eliminate the states of `model` and normalize each input-output
/// equation on its default pivot.
pub fn eliminate(model: &ModelSpec, ranking: &Ranking) -> Result<Vec<Elimination>, InvariantError> {
    let cs = characteristic_set(&generators(model), ranking)?;
    extract_input_output(&cs)?
        .into_iter()
        .map(|raw| {
            let pivot = default_pivot(&raw, |c| c.is_constant())?;
            let mut spec = normalize_monic(&raw, &pivot)?;
            spec.model = Some(model.name.clone());
            Ok(Elimination { raw, spec })
        })
        .collect()
}
