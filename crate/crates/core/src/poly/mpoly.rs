use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, Signed};

use super::{coeff::rational_to_f64, Coeff, Monomial, Variable};

/// Sparse multivariate polynomial: a map from monomials to nonzero coefficients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MPoly<V: Variable, C> {
    terms: BTreeMap<Monomial<V>, C>,
}

impl<V: Variable, C: Coeff> MPoly<V, C> {
    pub fn zero() -> Self {
        MPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn constant(c: C) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn var(v: V) -> Self {
        Self::term(C::one(), Monomial::var(v))
    }

    pub fn term(c: C, m: Monomial<V>) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MPoly { terms }
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (Monomial<V>, C)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in iter {
            p.add_term(m, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial<V>, &C)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial<V>, C)> {
        self.terms.into_iter()
    }

    pub fn coeff(&self, m: &Monomial<V>) -> Option<&C> {
        self.terms.get(m)
    }

    /// True when there is no indeterminate (the polynomial is a coefficient).
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn constant_term(&self) -> C {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(C::zero)
    }

    pub fn leading_term(&self) -> Option<(&Monomial<V>, &C)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Monomial<V>, c: &C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.add(c);
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        MPoly {
            terms: self
                .terms
                .iter()
                .filter_map(|(m, a)| {
                    let v = a.mul(c);
                    (!v.is_zero()).then(|| (m.clone(), v))
                })
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial<V>) -> Self {
        MPoly { terms: self.terms.iter().map(|(k, c)| (k.mul(m), c.clone())).collect() }
    }

    pub fn mul_term(&self, m: &Monomial<V>, c: &C) -> Self {
        self.mul_monomial(m).scale(c)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                out = &out * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        out
    }

    /// All indeterminates occurring in the polynomial.
    pub fn vars(&self) -> BTreeSet<V> {
        self.terms.keys().flat_map(|m| m.vars().cloned()).collect()
    }

    pub fn max_var(&self) -> Option<V> {
        self.terms.keys().filter_map(|m| m.max_var()).max().cloned()
    }

    pub fn contains_var(&self, v: &V) -> bool {
        self.terms.keys().any(|m| m.degree_in(v) > 0)
    }

    pub fn degree_in(&self, v: &V) -> u32 {
        self.terms.keys().map(|m| m.degree_in(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// View as a univariate polynomial in `v`: exponent → coefficient free of `v`.
    pub fn coefficients_in(&self, v: &V) -> BTreeMap<u32, Self> {
        let mut out: BTreeMap<u32, Self> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.degree_in(v);
            out.entry(e).or_insert_with(Self::zero).add_term(m.without(v), c);
        }
        out
    }

    /// Coefficient of the highest power of `v`.
    pub fn lead_coeff_in(&self, v: &V) -> Self {
        self.coefficients_in(v).into_iter().next_back().map(|(_, c)| c).unwrap_or_else(Self::zero)
    }

    /// Univariate pseudo-remainder of `self` by `divisor` in `v`.
    ///
    /// Returns `(multiplier, quotient, remainder)` with
    /// `multiplier·self = quotient·divisor + remainder` and
    /// `deg_v(remainder) < deg_v(divisor)`. The multiplier is a power of the
    /// divisor's leading coefficient in `v`.
    pub fn pseudo_rem_in(&self, divisor: &Self, v: &V) -> (Self, Self, Self) {
        let d = divisor.degree_in(v);
        let lc = divisor.lead_coeff_in(v);
        let mut mult = Self::one();
        let mut quot = Self::zero();
        let mut rem = self.clone();
        while !rem.is_zero() {
            let e = rem.degree_in(v);
            if e < d {
                break;
            }
            let lr = rem.lead_coeff_in(v);
            let shift = lr.mul_monomial(&Monomial::var_pow(v.clone(), e - d));
            rem = &(&rem * &lc) - &(&shift * divisor);
            quot = &(&quot * &lc) + &shift;
            mult = &mult * &lc;
        }
        (mult, quot, rem)
    }

    /// Formal partial derivative with respect to `v`.
    pub fn partial(&self, v: &V) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let e = m.degree_in(v);
            if e == 0 {
                continue;
            }
            let reduced = m.div(&Monomial::var(v.clone())).expect("variable present");
            out.add_term(reduced, &c.mul(&C::from_integer(e as i64)));
        }
        out
    }

    pub fn map_coeffs<D: Coeff>(&self, mut f: impl FnMut(&C) -> D) -> MPoly<V, D> {
        MPoly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), f(c))))
    }

    pub fn map_vars<W: Variable>(&self, mut f: impl FnMut(&V) -> W) -> MPoly<W, C> {
        MPoly::from_terms(self.terms.iter().map(|(m, c)| (m.map_vars(&mut f), c.clone())))
    }

    /// Monomial gcd of all terms.
    pub fn monomial_content(&self) -> Monomial<V> {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return Monomial::one() };
        it.fold(first.clone(), |acc, m| acc.gcd(m))
    }

    /// Divide every term by a monomial that divides all of them.
    pub fn div_monomial(&self, m: &Monomial<V>) -> Option<Self> {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            terms.insert(k.div(m)?, c.clone());
        }
        Some(MPoly { terms })
    }

    pub fn eval(&self, mut coeff: impl FnMut(&C) -> f64, mut value: impl FnMut(&V) -> f64) -> f64 {
        self.terms.iter().map(|(m, c)| coeff(c) * m.eval(&mut value)).sum()
    }
}

impl<V: Variable> MPoly<V, BigRational> {
    pub fn from_integer(n: i64) -> Self {
        Self::constant(<BigRational as Coeff>::from_integer(n))
    }

    pub fn eval_f64(&self, value: impl FnMut(&V) -> f64) -> f64 {
        self.eval(rational_to_f64, value)
    }

    /// Substitute exact values for some variables.
    pub fn substitute(&self, values: &BTreeMap<V, BigRational>) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for (v, e) in m.powers() {
                match values.get(v) {
                    Some(x) => coeff *= num_traits::pow(x.clone(), *e as usize),
                    None => rest.push((v.clone(), *e)),
                }
            }
            out.add_term(Monomial::from_powers(rest), &coeff);
        }
        out
    }

    /// Whether the first term in reading order is negative.
    pub fn reads_negative(&self) -> bool {
        self.terms
            .iter()
            .min_by(|a, b| display_order(a.0, b.0))
            .map(|(_, c)| c.is_negative())
            .unwrap_or(false)
    }

    pub fn is_positive_lead(&self) -> bool {
        self.leading_term().map(|(_, c)| c.is_positive()).unwrap_or(true)
    }

    pub fn lead_coefficient(&self) -> BigRational {
        self.leading_term().map(|(_, c)| c.clone()).unwrap_or_else(|| <BigRational as Coeff>::zero())
    }

    /// Scale so the leading coefficient is 1.
    pub fn monic(&self) -> Self {
        match self.leading_term() {
            Some((_, c)) if !c.is_one() => {
                let inv = c.recip();
                self.scale(&inv)
            }
            _ => self.clone(),
        }
    }
}

impl<V: Variable, C: Coeff> Coeff for MPoly<V, C> {
    fn zero() -> Self {
        MPoly::zero()
    }
    fn one() -> Self {
        MPoly::one()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
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
        MPoly::constant(C::from_integer(n))
    }
    fn is_constant(&self) -> bool {
        MPoly::is_constant(self) && self.terms.values().all(|c| c.is_constant())
    }
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

impl<V: Variable, C: Coeff> Add for &MPoly<V, C> {
    type Output = MPoly<V, C>;
    fn add(self, rhs: Self) -> MPoly<V, C> {
        let (mut big, small) = if self.terms.len() >= rhs.terms.len() { (self.clone(), rhs) } else { (rhs.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c);
        }
        big
    }
}

impl<V: Variable, C: Coeff> Sub for &MPoly<V, C> {
    type Output = MPoly<V, C>;
    fn sub(self, rhs: Self) -> MPoly<V, C> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), &c.neg());
        }
        out
    }
}

impl<V: Variable, C: Coeff> Mul for &MPoly<V, C> {
    type Output = MPoly<V, C>;
    fn mul(self, rhs: Self) -> MPoly<V, C> {
        let mut out = MPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), &ca.mul(cb));
            }
        }
        out
    }
}

impl<V: Variable, C: Coeff> Neg for &MPoly<V, C> {
    type Output = MPoly<V, C>;
    fn neg(self) -> MPoly<V, C> {
        MPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl<V: Variable, C: Coeff> $tr for MPoly<V, C> {
            type Output = MPoly<V, C>;
            fn $method(self, rhs: Self) -> MPoly<V, C> {
                <&MPoly<V, C> as $tr>::$method(&self, &rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl<V: Variable, C: Coeff> Neg for MPoly<V, C> {
    type Output = MPoly<V, C>;
    fn neg(self) -> MPoly<V, C> {
        -&self
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, c: &BigRational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

/// Reading order for flat polynomials: higher total degree first, then
/// smaller variables first.
fn display_order<V: Variable>(a: &Monomial<V>, b: &Monomial<V>) -> std::cmp::Ordering {
    b.degree().cmp(&a.degree()).then_with(|| {
        for ((va, ea), (vb, eb)) in a.powers().iter().zip(b.powers()) {
            let o = va.cmp(vb).then(eb.cmp(ea));
            if o.is_ne() {
                return o;
            }
        }
        b.powers().len().cmp(&a.powers().len())
    })
}

impl<V: Variable> fmt::Display for MPoly<V, BigRational> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| display_order(a.0, b.0));
        for (i, (m, c)) in terms.into_iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write_rational(f, &mag)?;
            } else {
                if !mag.is_one() {
                    write_rational(f, &mag)?;
                    f.write_str("*")?;
                }
                write!(f, "{m}")?;
            }
        }
        Ok(())
    }
}

impl<V: Variable, W: Variable> fmt::Display for MPoly<V, MPoly<W, BigRational>> {
    // outer monomials print largest variable first
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let single = c.num_terms() == 1;
            let negative = c.reads_negative();
            let shown = if negative { -c } else { c.clone() };
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                if single { write!(f, "{shown}")? } else { write!(f, "({shown})")? }
            } else if shown.is_constant() && shown.constant_term().is_one() {
                write!(f, "{}", m.descending())?;
            } else if single {
                write!(f, "{shown}*{}", m.descending())?;
            } else {
                write!(f, "({shown})*{}", m.descending())?;
            }
        }
        Ok(())
    }
}

impl<V: Variable, C: Coeff> fmt::Debug for MPoly<V, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if m.is_one() {
                write!(f, "({})", c.render())?;
            } else {
                write!(f, "({})*{}", c.render(), m.descending())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{ParamPoly, Symbol};

    fn p(name: &str) -> ParamPoly {
        ParamPoly::var(Symbol::new(name))
    }

    #[test]
    fn arithmetic_and_display() {
        let a = &p("p11") + &p("p22");
        let b = &(&p("p11") * &p("p22")) - &(&p("p12") * &p("p21"));
        assert_eq!(a.to_string(), "p11 + p22");
        assert_eq!(b.to_string(), "p11*p22 - p12*p21");
        let sq = a.pow(2);
        assert_eq!(sq.num_terms(), 3);
        assert_eq!((&sq - &sq).to_string(), "0");
    }

    #[test]
    fn pseudo_remainder_identity() {
        // (x^2 y + 1) prem (x y - 1) in x
        let x = p("x");
        let y = p("y");
        let a = &(&x.pow(2) * &y) + &ParamPoly::one();
        let b = &(&x * &y) - &ParamPoly::one();
        let (m, q, r) = a.pseudo_rem_in(&b, &Symbol::new("x"));
        assert_eq!(&m * &a, &(&q * &b) + &r);
        assert_eq!(r.degree_in(&Symbol::new("x")), 0);
    }

    #[test]
    fn partial_derivative() {
        let x = p("x");
        let f = &x.pow(3) + &(&x * &p("y"));
        let want = &x.pow(2).scale(&<BigRational as Coeff>::from_integer(3)) + &p("y");
        assert_eq!(f.partial(&Symbol::new("x")), want);
    }
}
