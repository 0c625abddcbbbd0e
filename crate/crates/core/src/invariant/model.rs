use std::collections::BTreeMap;

use num_rational::BigRational;

use super::text::{header, split_assignment, split_items, strip_comment, Item};
use super::{Atom, InvariantError};
use crate::diffpoly::{DiffPolynomial, DiffVar};
use crate::expr::{parse_expr_at, Expr, ExprError, Pos};
use crate::poly::{MPoly, Monomial, ParamPoly, RatFunc, Symbol};

pub type ModelRational = RatFunc<Atom>;

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: Symbol,
    pub value: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputDecl {
    pub index: u16,
    /// Closed form in `t`; may reference valued parameters.
    pub expr: Expr,
}

/// A rational ODE model with one observed output.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub params: Vec<ParamDecl>,
    /// Initial conditions of `x1..xN`.
    pub initial: Vec<BigRational>,
    pub inputs: Vec<InputDecl>,
    /// Right-hand side of `dxK` at position `K-1`.
    pub rhs: Vec<ModelRational>,
    pub output: ModelRational,
    pub horizon: Option<f64>,
}

impl ModelSpec {
    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name.as_str() == name)
    }

    /// Values of all parameters that have one.
    pub fn param_values(&self) -> BTreeMap<Symbol, BigRational> {
        self.params.iter().filter_map(|p| p.value.clone().map(|v| (p.name.clone(), v))).collect()
    }

    /// Copy with the given parameter values replacing the declared ones.
    pub fn with_param_values(&self, values: &BTreeMap<Symbol, BigRational>) -> Self {
        let mut out = self.clone();
        for p in &mut out.params {
            if let Some(v) = values.get(&p.name) {
                p.value = Some(v.clone());
            }
        }
        out
    }

    pub fn with_initial(&self, initial: Vec<BigRational>) -> Self {
        assert_eq!(initial.len(), self.initial.len(), "initial condition length");
        ModelSpec { initial, ..self.clone() }
    }

    pub fn has_complete_values(&self) -> bool {
        self.params.iter().all(|p| p.value.is_some())
    }
}

/// Differential generators `den·dxK − num` and `den·y − num`.
pub fn generators(model: &ModelSpec) -> Vec<DiffPolynomial> {
    let mut out = Vec::with_capacity(model.rhs.len() + 1);
    for (k, f) in model.rhs.iter().enumerate() {
        let dx = MPoly::var(Atom::Signal(DiffVar::state(k as u16 + 1).derivative()));
        out.push(split_atoms(&(&(f.denom() * &dx) - f.numer())));
    }
    let y = MPoly::var(Atom::Signal(DiffVar::output(1)));
    let g = &model.output;
    out.push(split_atoms(&(&(g.denom() * &y) - g.numer())));
    out
}

/// Regroup a polynomial in mixed atoms as signals over parameter coefficients.
pub(crate) fn split_atoms(p: &MPoly<Atom, BigRational>) -> DiffPolynomial {
    let mut out = DiffPolynomial::zero();
    for (m, c) in p.terms() {
        let (params, signals) = split_monomial(m);
        out.add_term(signals, &ParamPoly::term(c.clone(), params));
    }
    out
}

pub(crate) fn split_monomial(m: &Monomial<Atom>) -> (Monomial<Symbol>, Monomial<DiffVar>) {
    let mut params = Vec::new();
    let mut signals = Vec::new();
    for (a, e) in m.powers() {
        match a {
            Atom::Param(s) => params.push((s.clone(), *e)),
            Atom::Signal(v) => signals.push((*v, *e)),
        }
    }
    (Monomial::from_powers(params), Monomial::from_powers(signals))
}

#[derive(Default)]
struct Sections<'a> {
    seen: BTreeMap<&'static str, Pos>,
    name: Option<Item<'a>>,
    params: Vec<Item<'a>>,
    states: Vec<Item<'a>>,
    inputs: Vec<Item<'a>>,
    odes: Vec<Item<'a>>,
    output: Vec<Item<'a>>,
    horizon: Vec<Item<'a>>,
}

const SECTIONS: [&str; 7] = ["model", "params", "states", "inputs", "odes", "output", "horizon"];

fn syntax(pos: Pos, message: impl Into<String>) -> InvariantError {
    InvariantError::Syntax { pos, message: message.into() }
}

fn collect_sections(src: &str) -> Result<Sections<'_>, InvariantError> {
    let mut s = Sections::default();
    let mut current: Option<&'static str> = None;
    for (i, raw) in src.lines().enumerate() {
        let line = strip_comment(raw);
        let lineno = i + 1;
        let (body, col) = match header(line) {
            Some((name, body, col)) => {
                let pos = Pos { line: lineno, column: line.len() - line.trim_start().len() + 1 };
                let key = SECTIONS
                    .iter()
                    .copied()
                    .find(|k| *k == name)
                    .ok_or_else(|| syntax(pos, format!("unknown section '{name}'")))?;
                if s.seen.insert(key, pos).is_some() {
                    return Err(syntax(pos, format!("duplicate section '{name}'")));
                }
                current = Some(key);
                (body, col)
            }
            None => (line, 1),
        };
        let items = split_items(body, lineno, col);
        if items.is_empty() {
            continue;
        }
        let target = match current {
            None => return Err(syntax(items[0].pos, "content before the first section header")),
            Some("model") => {
                if s.name.is_some() || items.len() > 1 {
                    return Err(syntax(items[0].pos, "model name must be a single identifier"));
                }
                s.name = Some(items[0].clone());
                continue;
            }
            Some("params") => &mut s.params,
            Some("states") => &mut s.states,
            Some("inputs") => &mut s.inputs,
            Some("odes") => &mut s.odes,
            Some("output") => &mut s.output,
            Some(_) => &mut s.horizon,
        };
        target.extend(items);
    }
    Ok(s)
}

fn parse_item_expr(item: &Item<'_>) -> Result<Expr, InvariantError> {
    Ok(parse_expr_at(item.text, item.pos)?)
}

/// Exact value of a constant expression.
fn constant_value(item: &Item<'_>) -> Result<BigRational, InvariantError> {
    let e = parse_item_expr(item)?;
    let r: RatFunc<Symbol> =
        e.to_ratfunc(&|name, pos| Err(ExprError::Undeclared { pos, name: name.to_string() }))?;
    r.constant_value().ok_or_else(|| syntax(item.pos, "expected a numeric constant"))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Index `K` of a bare `xK`, `uK` or `y`/`yK` token.
fn signal_index(token: &str, prefix: char) -> Option<u16> {
    let rest = token.strip_prefix(prefix)?;
    if rest.is_empty() && prefix == 'y' {
        return Some(1);
    }
    if rest.starts_with('0') {
        return None;
    }
    rest.parse::<u16>().ok().filter(|k| *k > 0)
}

fn parse_params(items: &[Item<'_>]) -> Result<Vec<ParamDecl>, InvariantError> {
    let mut out: Vec<ParamDecl> = Vec::new();
    for item in items {
        let (name, value) = match split_assignment(item) {
            Some((lhs, rhs)) => (lhs, Some(constant_value(&rhs)?)),
            None => (item.text, None),
        };
        if !is_identifier(name) || name == "t" || DiffVar::parse(name).is_some() {
            return Err(syntax(item.pos, format!("invalid parameter name '{name}'")));
        }
        if out.iter().any(|p| p.name.as_str() == name) {
            return Err(syntax(item.pos, format!("parameter '{name}' declared twice")));
        }
        out.push(ParamDecl { name: Symbol::new(name), value });
    }
    Ok(out)
}

fn parse_states(items: &[Item<'_>]) -> Result<Vec<BigRational>, InvariantError> {
    let mut found: BTreeMap<u16, BigRational> = BTreeMap::new();
    for item in items {
        let (lhs, rhs) =
            split_assignment(item).ok_or_else(|| syntax(item.pos, "expected 'xK(0) = value'"))?;
        let name = lhs.strip_suffix("(0)").map(str::trim_end).unwrap_or(lhs);
        let k = signal_index(name, 'x').ok_or_else(|| syntax(item.pos, format!("invalid state name '{lhs}'")))?;
        if found.insert(k, constant_value(&rhs)?).is_some() {
            return Err(syntax(item.pos, format!("state x{k} declared twice")));
        }
    }
    let n = found.len() as u16;
    if found.keys().copied().ne(1..=n) {
        let pos = items.first().map(|i| i.pos).unwrap_or_default();
        return Err(syntax(pos, "states must be numbered x1..xN without gaps"));
    }
    Ok(found.into_values().collect())
}

fn resolver<'m>(
    params: &'m [ParamDecl],
    n_states: usize,
    n_inputs: usize,
) -> impl Fn(&str, Pos) -> Result<ModelRational, ExprError> + 'm {
    move |name, pos| {
        if params.iter().any(|p| p.name.as_str() == name) {
            return Ok(RatFunc::var(Atom::Param(Symbol::new(name))));
        }
        if let Some(k) = signal_index(name, 'x').filter(|k| (*k as usize) <= n_states) {
            return Ok(RatFunc::var(Atom::Signal(DiffVar::state(k))));
        }
        if let Some(k) = signal_index(name, 'u').filter(|k| (*k as usize) <= n_inputs) {
            return Ok(RatFunc::var(Atom::Signal(DiffVar::input(k))));
        }
        Err(ExprError::Undeclared { pos, name: name.to_string() })
    }
}

/// Parse the model DSL.
pub fn parse_model(src: &str) -> Result<ModelSpec, InvariantError> {
    let s = collect_sections(src)?;
    for key in ["params", "states", "odes", "output"] {
        if !s.seen.contains_key(key) {
            return Err(InvariantError::MissingSection(key));
        }
    }
    let name = match &s.name {
        Some(item) if is_identifier(item.text) => item.text.to_string(),
        Some(item) => return Err(syntax(item.pos, format!("invalid model name '{}'", item.text))),
        None => "model".to_string(),
    };
    let params = parse_params(&s.params)?;
    let initial = parse_states(&s.states)?;
    if initial.is_empty() {
        return Err(syntax(s.seen["states"], "at least one state is required"));
    }

    let mut inputs: Vec<InputDecl> = Vec::new();
    for item in &s.inputs {
        let (lhs, rhs) = split_assignment(item).ok_or_else(|| syntax(item.pos, "expected 'uK = expression'"))?;
        let index = signal_index(lhs, 'u').ok_or_else(|| syntax(item.pos, format!("invalid input name '{lhs}'")))?;
        if inputs.iter().any(|i| i.index == index) {
            return Err(syntax(item.pos, format!("input u{index} declared twice")));
        }
        let expr = parse_item_expr(&rhs)?;
        for (id, pos) in expr.idents() {
            let known = id == "t" || params.iter().any(|p| p.name.as_str() == id && p.value.is_some());
            if !known {
                return Err(ExprError::Undeclared { pos, name: id.to_string() }.into());
            }
        }
        inputs.push(InputDecl { index, expr });
    }
    inputs.sort_by_key(|i| i.index);
    if inputs.iter().map(|i| i.index).ne(1..=inputs.len() as u16) {
        return Err(syntax(s.seen["inputs"], "inputs must be numbered u1..uK without gaps"));
    }

    let resolve = resolver(&params, initial.len(), inputs.len());
    let mut rhs: Vec<Option<ModelRational>> = vec![None; initial.len()];
    for item in &s.odes {
        let (lhs, body) = split_assignment(item).ok_or_else(|| syntax(item.pos, "expected 'dxK = expression'"))?;
        let k = lhs
            .strip_prefix("d1")
            .or_else(|| lhs.strip_prefix('d'))
            .and_then(|x| signal_index(x, 'x'))
            .ok_or_else(|| syntax(item.pos, format!("invalid derivative '{lhs}'")))?;
        let slot = rhs
            .get_mut(k as usize - 1)
            .ok_or_else(|| syntax(item.pos, format!("equation for undeclared state x{k}")))?;
        if slot.is_some() {
            return Err(syntax(item.pos, format!("second equation for x{k}")));
        }
        *slot = Some(parse_item_expr(&body)?.to_ratfunc(&resolve)?);
    }
    let rhs = rhs
        .into_iter()
        .enumerate()
        .map(|(k, f)| f.ok_or_else(|| syntax(s.seen["odes"], format!("missing equation for x{}", k + 1))))
        .collect::<Result<Vec<_>, _>>()?;

    let [item] = s.output.as_slice() else {
        return Err(syntax(s.seen["output"], "exactly one output 'y = expression' is required"));
    };
    let (lhs, body) = split_assignment(item).ok_or_else(|| syntax(item.pos, "expected 'y = expression'"))?;
    if signal_index(lhs, 'y') != Some(1) {
        return Err(syntax(item.pos, format!("unsupported output '{lhs}'")));
    }
    let output = parse_item_expr(&body)?.to_ratfunc(&resolve)?;

    let horizon = match s.horizon.as_slice() {
        [] => None,
        [item] => {
            let value = crate::poly::rational_to_f64(&constant_value(item)?);
            if !(value > 0.0 && value.is_finite()) {
                return Err(syntax(item.pos, "horizon must be positive"));
            }
            Some(value)
        }
        [_, second, ..] => return Err(syntax(second.pos, "horizon takes a single value")),
    };

    drop(resolve);
    Ok(ModelSpec { name, params, initial, inputs, rhs, output, horizon })
}
