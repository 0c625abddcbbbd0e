use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Coeff, MPoly, Variable};

/// Quotient of two polynomials over `Q`, kept in lowest terms with a monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFunc<V: Variable> {
    num: MPoly<V, BigRational>,
    den: MPoly<V, BigRational>,
}

impl<V: Variable> RatFunc<V> {
    pub fn new(num: MPoly<V, BigRational>, den: MPoly<V, BigRational>) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.exact_div(&g).expect("gcd divides"), den.exact_div(&g).expect("gcd divides"))
        };
        let lc = den.lead_coefficient();
        if lc.is_one() {
            RatFunc { num, den }
        } else {
            let inv = lc.recip();
            RatFunc { num: num.scale(&inv), den: den.scale(&inv) }
        }
    }

    pub fn from_poly(p: MPoly<V, BigRational>) -> Self {
        RatFunc { num: p, den: MPoly::one() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_poly(MPoly::constant(c))
    }

    pub fn var(v: V) -> Self {
        Self::from_poly(MPoly::var(v))
    }

    pub fn zero() -> Self {
        Self::from_poly(MPoly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(MPoly::one())
    }

    pub fn numer(&self) -> &MPoly<V, BigRational> {
        &self.num
    }

    pub fn denom(&self) -> &MPoly<V, BigRational> {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn is_constant(&self) -> bool {
        self.num.is_constant() && self.den.is_constant()
    }

    /// The rational value when free of indeterminates.
    pub fn constant_value(&self) -> Option<BigRational> {
        self.is_constant().then(|| self.num.constant_term() / self.den.constant_term())
    }

    pub fn vars(&self) -> BTreeSet<V> {
        let mut s = self.num.vars();
        s.extend(self.den.vars());
        s
    }

    pub fn contains_var(&self, v: &V) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn recip(&self) -> Self {
        Self::new(self.den.clone(), self.num.clone())
    }

    /// Split `self = c + rest` with `c` rational.
    ///
    /// `c` is the numerator's coefficient at the denominator's leading
    /// monomial, so `rest` has no such term; for a polynomial this is the
    /// constant term.
    pub fn split_constant(&self) -> (BigRational, Self) {
        let lm = self.den.leading_term().map(|(m, _)| m.clone()).expect("nonzero denominator");
        let c = self.num.coeff(&lm).cloned().unwrap_or_else(<BigRational as Zero>::zero);
        if Zero::is_zero(&c) {
            return (c, self.clone());
        }
        let rest = Self::new(&self.num - &self.den.scale(&c), self.den.clone());
        (c, rest)
    }

    /// Partial derivative with respect to `v`.
    pub fn partial(&self, v: &V) -> Self {
        let dn = self.num.partial(v);
        let dd = self.den.partial(v);
        if dd.is_zero() {
            return Self::new(dn, self.den.clone());
        }
        Self::new(&(&dn * &self.den) - &(&self.num * &dd), &self.den * &self.den)
    }

    pub fn eval_f64(&self, mut value: impl FnMut(&V) -> f64) -> f64 {
        self.num.eval_f64(&mut value) / self.den.eval_f64(&mut value)
    }

    /// Substitute exact values; `None` if the denominator vanishes.
    pub fn substitute(&self, values: &BTreeMap<V, BigRational>) -> Option<Self> {
        let den = self.den.substitute(values);
        if den.is_zero() {
            return None;
        }
        Some(Self::new(self.num.substitute(values), den))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if Zero::is_zero(c) {
            return Self::zero();
        }
        RatFunc { num: self.num.scale(c), den: self.den.clone() }
    }
}

impl<V: Variable> Coeff for RatFunc<V> {
    fn zero() -> Self {
        RatFunc::zero()
    }
    fn one() -> Self {
        RatFunc::one()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_integer(n: i64) -> Self {
        RatFunc::constant(<BigRational as Coeff>::from_integer(n))
    }
    fn is_constant(&self) -> bool {
        RatFunc::is_constant(self)
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl<V: Variable> Add for &RatFunc<V> {
    type Output = RatFunc<V>;
    fn add(self, rhs: Self) -> RatFunc<V> {
        if self.den == rhs.den {
            return RatFunc::new(&self.num + &rhs.num, self.den.clone());
        }
        RatFunc::new(&(&self.num * &rhs.den) + &(&rhs.num * &self.den), &self.den * &rhs.den)
    }
}

impl<V: Variable> Sub for &RatFunc<V> {
    type Output = RatFunc<V>;
    fn sub(self, rhs: Self) -> RatFunc<V> {
        self + &(-rhs)
    }
}

impl<V: Variable> Mul for &RatFunc<V> {
    type Output = RatFunc<V>;
    fn mul(self, rhs: Self) -> RatFunc<V> {
        if self.is_polynomial() && rhs.is_polynomial() {
            return RatFunc::new(&self.num * &rhs.num, &self.den * &rhs.den);
        }
        // cross-cancel first to keep intermediate sizes small
        let g1 = self.num.gcd(&rhs.den);
        let g2 = rhs.num.gcd(&self.den);
        let n1 = self.num.exact_div(&g1).expect("gcd divides");
        let d2 = rhs.den.exact_div(&g1).expect("gcd divides");
        let n2 = rhs.num.exact_div(&g2).expect("gcd divides");
        let d1 = self.den.exact_div(&g2).expect("gcd divides");
        RatFunc::new(&n1 * &n2, &d1 * &d2)
    }
}

impl<V: Variable> Div for &RatFunc<V> {
    type Output = RatFunc<V>;
    fn div(self, rhs: Self) -> RatFunc<V> {
        assert!(!rhs.is_zero(), "division by zero rational function");
        self * &rhs.recip()
    }
}

impl<V: Variable> Neg for &RatFunc<V> {
    type Output = RatFunc<V>;
    fn neg(self) -> RatFunc<V> {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl<V: Variable> Neg for RatFunc<V> {
    type Output = RatFunc<V>;
    fn neg(self) -> RatFunc<V> {
        -&self
    }
}

impl<V: Variable> fmt::Display for RatFunc<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one_poly() {
            return write!(f, "{}", self.num);
        }
        if self.num.num_terms() == 1 {
            write!(f, "{}", self.num)?;
        } else {
            write!(f, "({})", self.num)?;
        }
        let bare = self.den.leading_term().is_some_and(|(m, _)| m.powers().len() == 1) && self.den.num_terms() == 1;
        if bare {
            write!(f, "/{}", self.den)
        } else {
            write!(f, "/({})", self.den)
        }
    }
}

impl<V: Variable> fmt::Debug for RatFunc<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<V: Variable> MPoly<V, BigRational> {
    fn is_one_poly(&self) -> bool {
        self.is_constant() && self.constant_term().is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{ParamPoly, ParamRational, Symbol};

    fn r(name: &str) -> ParamRational {
        ParamRational::var(Symbol::new(name))
    }

    #[test]
    fn canonical_form() {
        let a = r("a");
        let b = r("b");
        let x = &(&a * &b) / &(&a + &b);
        let back = &x * &(&(&a + &b) / &b);
        assert_eq!(back, a);
        let half = &ParamRational::one() / &ParamRational::from_integer(2);
        assert_eq!(half.constant_value(), Some(BigRational::new(1.into(), 2.into())));
        let twice = &(&a + &a) / &(&b + &b);
        assert_eq!(twice.to_string(), "a/b");
        assert!((&x - &x).is_zero());
    }

    #[test]
    fn substitution_and_eval() {
        let a = r("a");
        let f = &(&a * &a) / &(&a - &ParamRational::one());
        let mut vals = BTreeMap::new();
        vals.insert(Symbol::new("a"), BigRational::from_integer(3.into()));
        let v = f.substitute(&vals).unwrap();
        assert_eq!(v.constant_value(), Some(BigRational::new(9.into(), 2.into())));
        assert!((f.eval_f64(|_| 3.0) - 4.5).abs() < 1e-15);
        vals.insert(Symbol::new("a"), <BigRational as One>::one());
        assert!(f.substitute(&vals).is_none());
    }

    #[test]
    fn constant_split() {
        let f = &r("a") + &ParamRational::from_integer(-1);
        let (c, rest) = f.split_constant();
        assert_eq!(c, BigRational::from_integer((-1).into()));
        assert_eq!(rest, r("a"));
        // (b - a)/b = 1 - a/b
        let g = &(&r("b") - &r("a")) / &r("b");
        let (c, rest) = g.split_constant();
        assert_eq!(c, <BigRational as One>::one());
        assert_eq!(rest.to_string(), "-a/b");
        let (c, _) = (&r("a") / &r("b")).split_constant();
        assert!(Zero::is_zero(&c));
    }

    #[test]
    fn quotient_rule() {
        let a = r("a");
        let f = &(&a * &a) / &(&a + &ParamRational::one());
        let df = f.partial(&Symbol::new("a"));
        let h = 1e-6;
        let fd = (f.eval_f64(|_| 2.0 + h) - f.eval_f64(|_| 2.0 - h)) / (2.0 * h);
        assert!((df.eval_f64(|_| 2.0) - fd).abs() < 1e-8);
        let _ = ParamPoly::one();
    }
}
