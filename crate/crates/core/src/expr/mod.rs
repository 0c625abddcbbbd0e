//! Arithmetic expressions shared by the model and invariant file formats.

mod lexer;
mod parser;

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::{rational_to_f64, RatFunc, Variable};

pub use lexer::{tokenize, Tok};
pub use parser::{parse_expr, parse_expr_at};

/// 1-based line and column in a source file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: undeclared symbol '{name}'")]
    Undeclared { pos: Pos, name: String },
    #[error("{pos}: not a rational expression: {message}")]
    NonRational { pos: Pos, message: String },
    #[error("{pos}: division by zero")]
    DivisionByZero { pos: Pos },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(BigRational),
    Var(String, Pos),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>, Pos),
    Call(Func, Box<Expr>, Pos),
}

fn num(n: i64) -> Expr {
    Expr::Num(BigRational::from_integer(n.into()))
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string(), Pos::default())
    }

    fn as_num(&self) -> Option<&BigRational> {
        match self {
            Expr::Num(q) => Some(q),
            _ => None,
        }
    }

    fn is_num(&self, n: i64) -> bool {
        self.as_num().is_some_and(|q| *q == BigRational::from_integer(n.into()))
    }

    /// Every variable occurrence, in source order.
    pub fn idents(&self) -> Vec<(&str, Pos)> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(name, pos) = e {
                out.push((name.as_str(), *pos));
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Var(..) => {}
            Expr::Neg(a) | Expr::Call(_, a, _) => a.walk(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b, _) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    pub fn eval(&self, env: &impl Fn(&str) -> Option<f64>) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(q) => rational_to_f64(q),
            Expr::Var(name, pos) => env(name).ok_or_else(|| ExprError::Undeclared { pos: *pos, name: name.clone() })?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => a.eval(env)? / b.eval(env)?,
            Expr::Pow(a, b, _) => {
                let base = a.eval(env)?;
                match b.as_num().filter(|q| q.is_integer()).and_then(|q| q.to_integer().to_i32()) {
                    Some(k) => base.powi(k),
                    None => base.powf(b.eval(env)?),
                }
            }
            Expr::Call(func, a, _) => func.apply(a.eval(env)?),
        })
    }

    /// Symbolic derivative with respect to the variable `x`.
    pub fn diff(&self, x: &str) -> Expr {
        match self {
            Expr::Num(_) => num(0),
            Expr::Var(name, _) => num(i64::from(name == x)),
            Expr::Neg(a) => neg(a.diff(x)),
            Expr::Add(a, b) => add(a.diff(x), b.diff(x)),
            Expr::Sub(a, b) => sub(a.diff(x), b.diff(x)),
            Expr::Mul(a, b) => add(mul(a.diff(x), (**b).clone()), mul((**a).clone(), b.diff(x))),
            Expr::Div(a, b) => div(
                sub(mul(a.diff(x), (**b).clone()), mul((**a).clone(), b.diff(x))),
                pow((**b).clone(), num(2)),
            ),
            Expr::Pow(a, b, _) => {
                if let Some(k) = b.as_num() {
                    let k1 = Expr::Num(k - BigRational::one());
                    mul(mul(Expr::Num(k.clone()), pow((**a).clone(), k1)), a.diff(x))
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let ln_a = Expr::Call(Func::Ln, a.clone(), Pos::default());
                    let inner = add(mul(b.diff(x), ln_a), div(mul((**b).clone(), a.diff(x)), (**a).clone()));
                    mul(self.clone(), inner)
                }
            }
            Expr::Call(func, a, pos) => {
                let da = a.diff(x);
                let outer = match func {
                    Func::Exp => self.clone(),
                    Func::Ln => div(num(1), (**a).clone()),
                    Func::Sin => Expr::Call(Func::Cos, a.clone(), *pos),
                    Func::Cos => neg(Expr::Call(Func::Sin, a.clone(), *pos)),
                    Func::Sqrt => div(num(1), mul(num(2), self.clone())),
                };
                mul(outer, da)
            }
        }
    }

    /// Interpret as a rational function, mapping each variable through `resolve`.
    pub fn to_ratfunc<V: Variable>(
        &self,
        resolve: &impl Fn(&str, Pos) -> Result<RatFunc<V>, ExprError>,
    ) -> Result<RatFunc<V>, ExprError> {
        Ok(match self {
            Expr::Num(q) => RatFunc::constant(q.clone()),
            Expr::Var(name, pos) => resolve(name, *pos)?,
            Expr::Neg(a) => -a.to_ratfunc(resolve)?,
            Expr::Add(a, b) => &a.to_ratfunc(resolve)? + &b.to_ratfunc(resolve)?,
            Expr::Sub(a, b) => &a.to_ratfunc(resolve)? - &b.to_ratfunc(resolve)?,
            Expr::Mul(a, b) => &a.to_ratfunc(resolve)? * &b.to_ratfunc(resolve)?,
            Expr::Div(a, b) => {
                let d = b.to_ratfunc(resolve)?;
                if d.is_zero() {
                    return Err(ExprError::DivisionByZero { pos: self.first_pos() });
                }
                &a.to_ratfunc(resolve)? / &d
            }
            Expr::Pow(a, b, pos) => {
                let k = b
                    .integer_value()
                    .ok_or_else(|| ExprError::NonRational { pos: *pos, message: "exponent must be an integer constant".into() })?;
                let base = a.to_ratfunc(resolve)?;
                if k < 0 && base.is_zero() {
                    return Err(ExprError::DivisionByZero { pos: *pos });
                }
                let mut out = RatFunc::one();
                for _ in 0..k.unsigned_abs() {
                    out = &out * &base;
                }
                if k < 0 { out.recip() } else { out }
            }
            Expr::Call(func, _, pos) => {
                return Err(ExprError::NonRational { pos: *pos, message: format!("function '{}'", func.name()) })
            }
        })
    }

    fn integer_value(&self) -> Option<i64> {
        match self {
            Expr::Num(q) if q.is_integer() => q.to_integer().to_i64().filter(|k| k.abs() <= 64),
            Expr::Neg(a) => a.integer_value().map(|k| -k),
            _ => None,
        }
    }

    /// Position of the leftmost located node.
    pub fn first_pos(&self) -> Pos {
        let mut found = None;
        self.walk(&mut |e| {
            if found.is_none() {
                if let Expr::Var(_, p) | Expr::Pow(_, _, p) | Expr::Call(_, _, p) = e {
                    found = Some(*p);
                }
            }
        });
        found.unwrap_or_default()
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(q) => Expr::Num(-q),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x.is_zero() => b,
        (_, Some(y)) if y.is_zero() => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(x), _) if x.is_zero() => neg(b),
        (_, Some(y)) if y.is_zero() => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_num(0) || b.is_num(0) {
        return num(0);
    }
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) if x.is_one() => b,
        (_, Some(y)) if y.is_one() => a,
        (Some(x), _) if (-x).is_one() => neg(b),
        (_, Some(y)) if (-y).is_one() => neg(a),
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_num(0) {
        return num(0);
    }
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) if !y.is_zero() => Expr::Num(x / y),
        (_, Some(y)) if y.is_one() => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if b.is_num(0) {
        return num(1);
    }
    if b.is_num(1) {
        return a;
    }
    Expr::Pow(Box::new(a), Box::new(b), Pos::default())
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Num(q) if q.is_negative() || !q.is_integer() => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(q) if q.is_integer() => write!(f, "{}", q.numer()),
            Expr::Num(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Expr::Var(name, _) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 4)
            }
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" + ")?;
                write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(" - ")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("*")?;
                write_child(f, b, 4)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                f.write_str("/")?;
                write_child(f, b, 4)
            }
            Expr::Pow(a, b, _) => {
                write_child(f, a, 5)?;
                f.write_str("^")?;
                write_child(f, b, 4)
            }
            Expr::Call(func, a, _) => write!(f, "{}({a})", func.name()),
        }
    }
}
