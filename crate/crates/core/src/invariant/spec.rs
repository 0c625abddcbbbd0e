use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::model::{split_monomial, ModelSpec};
use super::text::{header, split_assignment, split_items, strip_comment, Item};
use super::{Atom, InvariantError};
use crate::diffpoly::{DiffMonomial, DiffPolynomial, DiffVar, VarKind};
use crate::expr::{parse_expr_at, ExprError, Pos};
use crate::poly::{MPoly, ParamPoly, ParamRational, RatFunc, Symbol};

/// Signal polynomial over rational parameter functions.
pub type InvPolynomial = MPoly<DiffVar, ParamRational>;
/// Signal polynomial with numeric coefficients.
pub type NumericPolynomial = MPoly<DiffVar, BigRational>;

/// One unknown of the linear system: `coeff·monomial`.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub id: String,
    pub coeff: ParamRational,
    pub monomial: DiffMonomial,
}

impl Slot {
    /// `(c, a)` when the coefficient is exactly `a·c` for one opaque unknown `c`.
    pub fn unknown(&self) -> Option<(Symbol, BigRational)> {
        if !self.coeff.is_polynomial() || self.coeff.numer().num_terms() != 1 {
            return None;
        }
        let (m, a) = self.coeff.numer().leading_term()?;
        match m.powers() {
            [(s, 1)] if s.is_unknown_coefficient() => Some((s.clone(), a / self.coeff.denom().constant_term())),
            _ => None,
        }
    }
}

/// A monic input-output relation `Σ coeff_i·ψ_i = ξ`.
///
/// Built only through [`InvariantSpec::from_polynomial`], so the split
/// between slots and `ξ` is canonical: each coefficient's rational constant
/// part (see [`RatFunc::split_constant`]) lives in `ξ`, the rest in a slot.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantSpec {
    pub model: Option<String>,
    pub output: u16,
    /// Ordered by decreasing monomial rank.
    pub slots: Vec<Slot>,
    pub xi: NumericPolynomial,
    pub known: BTreeMap<Symbol, BigRational>,
}

impl InvariantSpec {
    /// Split `G = Σ coeff·ψ − ξ`.
    pub fn from_polynomial(g: &InvPolynomial) -> Result<Self, InvariantError> {
        let mut xi = NumericPolynomial::zero();
        let mut slots = Vec::new();
        let mut owners: BTreeMap<Symbol, DiffMonomial> = BTreeMap::new();
        for (m, c) in g.terms().rev() {
            let (k, rest) = c.split_constant();
            if !k.is_zero() {
                xi.add_term(m.clone(), &-k);
            }
            if rest.is_zero() {
                continue;
            }
            let unknowns: Vec<Symbol> = rest.vars().into_iter().filter(Symbol::is_unknown_coefficient).collect();
            if unknowns.len() > 1 {
                let names = unknowns.iter().map(Symbol::as_str).collect::<Vec<_>>().join(", ");
                return Err(InvariantError::DuplicateMonomial { monomial: m.descending().to_string(), names });
            }
            if let Some(u) = unknowns.into_iter().next() {
                if owners.insert(u.clone(), m.clone()).is_some() {
                    return Err(InvariantError::SharedUnknown(u.as_str().to_string()));
                }
            }
            slots.push(Slot { id: format!("c{}", slots.len() + 1), coeff: rest, monomial: m.clone() });
        }
        let output = g
            .vars()
            .into_iter()
            .find(|v| v.kind == VarKind::Output)
            .map_or(1, |v| v.index);
        Ok(InvariantSpec { model: None, output, slots, xi, known: BTreeMap::new() })
    }

    /// `Σ coeff·ψ − ξ`.
    pub fn polynomial(&self) -> InvPolynomial {
        let mut g = self.xi.map_coeffs(|c| -RatFunc::constant(c.clone()));
        for s in &self.slots {
            g.add_term(s.monomial.clone(), &s.coeff);
        }
        g
    }

    /// Parameters appearing in slot coefficients, opaque unknowns excluded.
    pub fn parameters(&self) -> BTreeSet<Symbol> {
        self.slots.iter().flat_map(|s| s.coeff.vars()).filter(|v| !v.is_unknown_coefficient()).collect()
    }

    pub fn signals(&self) -> BTreeSet<DiffVar> {
        let mut out = self.xi.vars();
        for s in &self.slots {
            out.extend(s.monomial.vars().copied());
        }
        out
    }

    /// Highest derivative order of the output that appears.
    pub fn max_output_order(&self) -> u16 {
        self.signals().into_iter().filter(|v| v.kind == VarKind::Output).map(|v| v.order).max().unwrap_or(0)
    }

    /// Renormalize on `pivot`, or on [`default_pivot`] when `None`.
    pub fn normalized(&self, pivot: Option<&DiffMonomial>) -> Result<Self, InvariantError> {
        let g = self.polynomial();
        let pivot = match pivot {
            Some(p) => p.clone(),
            None => default_pivot(&g, |c| c.is_constant())?,
        };
        let mut out = normalize_poly(&g, &pivot)?;
        out.model = self.model.clone();
        out.known = self.known.clone();
        Ok(out)
    }

    fn with_ids(mut self) -> Self {
        for (i, s) in self.slots.iter_mut().enumerate() {
            s.id = format!("c{}", i + 1);
        }
        self
    }
}

/// Default normalizing monomial: among the monomials that contain the
/// leader to the first power, one with a parameter-free coefficient if
/// any, otherwise the highest-ranked. Falls back to the highest monomial
/// containing the leader.
pub fn default_pivot<C: crate::poly::Coeff>(
    p: &MPoly<DiffVar, C>,
    parameter_free: impl Fn(&C) -> bool,
) -> Result<DiffMonomial, InvariantError> {
    let leader = p.max_var().ok_or(InvariantError::NoPivot)?;
    let with_leader: Vec<_> = p.terms().rev().filter(|(m, _)| m.degree_in(&leader) > 0).collect();
    let linear: Vec<_> = with_leader.iter().filter(|(m, _)| m.degree_in(&leader) == 1).collect();
    let pick = linear
        .iter()
        .find(|(_, c)| parameter_free(c))
        .or_else(|| linear.first())
        .map(|(m, _)| (*m).clone())
        .or_else(|| with_leader.first().map(|(m, _)| (*m).clone()));
    pick.ok_or(InvariantError::NoPivot)
}

fn normalize_poly(g: &InvPolynomial, pivot: &DiffMonomial) -> Result<InvariantSpec, InvariantError> {
    let c = g
        .coeff(pivot)
        .filter(|c| !c.is_zero())
        .ok_or_else(|| InvariantError::PivotAbsent(pivot.descending().to_string()))?;
    let factor = -c.recip();
    InvariantSpec::from_polynomial(&g.map_coeffs(|x| x * &factor))
}

/// Divide `p` by the coefficient of `pivot` so that `pivot` appears in `ξ`
/// with coefficient 1.
pub fn normalize_monic(p: &DiffPolynomial, pivot: &DiffMonomial) -> Result<InvariantSpec, InvariantError> {
    normalize_poly(&to_inv(p), pivot)
}

pub fn to_inv(p: &DiffPolynomial) -> InvPolynomial {
    p.map_coeffs(|c: &ParamPoly| RatFunc::from_poly(c.clone()))
}

/// Insert known parameter values. Names that occur nowhere in `spec` are
/// ignored and reported in the returned warnings.
pub fn substitute_known(
    spec: &InvariantSpec,
    known: &BTreeMap<Symbol, BigRational>,
) -> (InvariantSpec, Vec<String>) {
    let mut warnings = Vec::new();
    let present = spec.parameters();
    let mut used = BTreeMap::new();
    for (name, value) in known {
        if present.contains(name) {
            used.insert(name.clone(), value.clone());
        } else if !spec.known.contains_key(name) {
            warnings.push(format!("known parameter '{name}' does not occur in the invariant; ignored"));
        }
    }
    if used.is_empty() {
        return (spec.clone(), warnings);
    }
    let mut g = spec.xi.map_coeffs(|c| -RatFunc::constant(c.clone()));
    for s in &spec.slots {
        let coeff = s.coeff.substitute(&used).unwrap_or_else(|| {
            warnings.push(format!("slot {} has a vanishing denominator at the known values; kept symbolic", s.id));
            s.coeff.clone()
        });
        g.add_term(s.monomial.clone(), &coeff);
    }
    let mut out = InvariantSpec::from_polynomial(&g).expect("substitution cannot introduce unknowns").with_ids();
    out.model = spec.model.clone();
    out.output = spec.output;
    out.known = spec.known.clone();
    out.known.extend(used);
    (out, warnings)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identifiability {
    Unidentifiable,
    PossiblyIdentifiable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentifiabilityReport {
    pub n_params: usize,
    pub n_slots: usize,
    pub verdict: Identifiability,
}

/// More unknown parameters than coefficient slots means unidentifiable.
pub fn identifiability_count(spec: &InvariantSpec, model: &ModelSpec) -> IdentifiabilityReport {
    let n_params = model.params.iter().filter(|p| !spec.known.contains_key(&p.name)).count();
    let n_slots = spec.slots.len();
    let verdict = if n_params > n_slots {
        Identifiability::Unidentifiable
    } else {
        Identifiability::PossiblyIdentifiable
    };
    IdentifiabilityReport { n_params, n_slots, verdict }
}

fn syntax(pos: Pos, message: impl Into<String>) -> InvariantError {
    InvariantError::Syntax { pos, message: message.into() }
}

/// Signal atom for `name`, a malformed-token error, or `None` for a parameter.
fn signal_atom(name: &str, pos: Pos) -> Result<Option<DiffVar>, InvariantError> {
    if let Some(v) = DiffVar::parse(name) {
        if v.is_state() {
            return Err(syntax(pos, format!("state variable '{name}' cannot appear in an invariant")));
        }
        return Ok(Some(v));
    }
    let bytes = name.as_bytes();
    let looks_derivative = bytes.len() > 1 && bytes[0] == b'd' && bytes[1].is_ascii_digit();
    let looks_signal =
        matches!(bytes.first(), Some(b'x' | b'y' | b'u')) && bytes[1..].iter().all(u8::is_ascii_digit);
    if looks_derivative || looks_signal {
        return Err(InvariantError::MalformedDerivative { pos, token: name.to_string() });
    }
    Ok(None)
}

fn side_to_ratfunc(item: &Item<'_>) -> Result<RatFunc<Atom>, InvariantError> {
    let e = parse_expr_at(item.text, item.pos)?;
    for (name, pos) in e.idents() {
        signal_atom(name, pos)?;
    }
    Ok(e.to_ratfunc(&|name: &str, _pos| {
        Ok::<_, ExprError>(match DiffVar::parse(name) {
            Some(v) => RatFunc::var(Atom::Signal(v)),
            None => RatFunc::var(Atom::Param(Symbol::new(name))),
        })
    })?)
}

/// Regroup a rational function in mixed atoms as a signal polynomial.
fn to_signal_poly(r: &RatFunc<Atom>, pos: Pos) -> Result<InvPolynomial, InvariantError> {
    if r.denom().vars().iter().any(|a| matches!(a, Atom::Signal(_))) {
        return Err(InvariantError::NotPolynomial { pos });
    }
    let den: ParamPoly = r.denom().map_vars(|a| match a {
        Atom::Param(s) => s.clone(),
        Atom::Signal(_) => unreachable!("checked above"),
    });
    let mut grouped: BTreeMap<DiffMonomial, ParamPoly> = BTreeMap::new();
    for (m, c) in r.numer().terms() {
        let (params, signals) = split_monomial(m);
        grouped.entry(signals).or_insert_with(ParamPoly::zero).add_term(params, c);
    }
    Ok(InvPolynomial::from_terms(grouped.into_iter().map(|(m, c)| (m, RatFunc::new(c, den.clone())))))
}

fn parse_known(items: &[Item<'_>], into: &mut BTreeMap<Symbol, BigRational>) -> Result<(), InvariantError> {
    for item in items {
        let (name, rhs) = split_assignment(item).ok_or_else(|| syntax(item.pos, "expected 'name = value'"))?;
        if signal_atom(name, item.pos)?.is_some() || name.is_empty() {
            return Err(syntax(item.pos, format!("'{name}' is not a parameter")));
        }
        let e = parse_expr_at(rhs.text, rhs.pos)?;
        let value: RatFunc<Symbol> =
            e.to_ratfunc(&|n, pos| Err(ExprError::Undeclared { pos, name: n.to_string() }))?;
        let value = value.constant_value().ok_or_else(|| syntax(rhs.pos, "expected a numeric value"))?;
        into.insert(Symbol::new(name), value);
    }
    Ok(())
}

/// Parse the invariant DSL: one equation line, optional `model:` and `known:` lines.
pub fn parse_invariant(src: &str) -> Result<InvariantSpec, InvariantError> {
    let mut model = None;
    let mut known = BTreeMap::new();
    let mut equation: Option<(usize, &str)> = None;
    for (i, raw) in src.lines().enumerate() {
        let line = strip_comment(raw);
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some((name, body, col)) = header(line) {
            let items = split_items(body, lineno, col);
            match name {
                "model" => match items.as_slice() {
                    [item] if model.is_none() => model = Some(item.text.to_string()),
                    _ => return Err(syntax(Pos { line: lineno, column: 1 }, "expected a single model name")),
                },
                "known" => parse_known(&items, &mut known)?,
                _ => return Err(syntax(Pos { line: lineno, column: 1 }, format!("unknown section '{name}'"))),
            }
            continue;
        }
        if equation.is_some() {
            return Err(syntax(Pos { line: lineno, column: 1 }, "only one equation line is allowed"));
        }
        equation = Some((lineno, line));
    }
    let (lineno, line) = equation.ok_or(InvariantError::MissingSection("equation"))?;
    let eq = line.find('=').ok_or_else(|| syntax(Pos { line: lineno, column: 1 }, "equation needs '='"))?;
    if line[eq + 1..].contains('=') {
        return Err(syntax(Pos { line: lineno, column: eq + 2 }, "more than one '='"));
    }
    let side = |a: usize, b: usize| {
        let text = &line[a..b];
        let lead = text.len() - text.trim_start().len();
        Item { text: text.trim(), pos: Pos { line: lineno, column: a + lead + 1 } }
    };
    let lhs = side(0, eq);
    let rhs = side(eq + 1, line.len());
    for s in [&lhs, &rhs] {
        if s.text.is_empty() {
            return Err(syntax(s.pos, "empty side of equation"));
        }
    }
    let g = &side_to_ratfunc(&lhs)? - &side_to_ratfunc(&rhs)?;
    let g = to_signal_poly(&g, lhs.pos)?;
    if g.is_zero() {
        return Err(syntax(lhs.pos, "equation is identically zero"));
    }
    let mut spec = InvariantSpec::from_polynomial(&g)?;
    spec.model = model;
    spec.known = known;
    Ok(spec)
}

fn write_signed_term(out: &mut String, first: bool, negative: bool, body: &str) {
    match (first, negative) {
        (true, true) => out.push('-'),
        (true, false) => {}
        (false, true) => out.push_str(" - "),
        (false, false) => out.push_str(" + "),
    }
    out.push_str(body);
}

fn slot_term(s: &Slot) -> (bool, String) {
    let negative = s.coeff.numer().reads_negative();
    let shown = if negative { -s.coeff.clone() } else { s.coeff.clone() };
    let simple = shown.is_polynomial() && shown.numer().num_terms() == 1;
    let coeff = if simple { shown.to_string() } else { format!("({shown})") };
    let body = if s.monomial.is_one() { coeff } else { format!("{coeff}*{}", s.monomial.descending()) };
    (negative, body)
}

fn numeric_terms(p: &NumericPolynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().rev().enumerate() {
        let mag = c.abs();
        let body = match (m.is_one(), mag.is_one()) {
            (true, _) => mag.to_string(),
            (false, true) => m.descending().to_string(),
            (false, false) => format!("{mag}*{}", m.descending()),
        };
        write_signed_term(&mut out, i == 0, c.is_negative(), &body);
    }
    out
}

/// Text form accepted by [`parse_invariant`].
pub fn render(spec: &InvariantSpec) -> String {
    let mut out = String::new();
    if let Some(m) = &spec.model {
        let _ = writeln!(out, "model: {m}");
    }
    let mut lhs = String::new();
    for (i, s) in spec.slots.iter().enumerate() {
        let (neg, body) = slot_term(s);
        write_signed_term(&mut lhs, i == 0, neg, &body);
    }
    if lhs.is_empty() {
        lhs.push('0');
    }
    let _ = writeln!(out, "{lhs} = {}", numeric_terms(&spec.xi));
    for (name, value) in &spec.known {
        let _ = writeln!(out, "known: {name} = {value}");
    }
    out
}

impl fmt::Display for InvariantSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}
