use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{MPoly, Variable};

type QPoly<V> = MPoly<V, BigRational>;

impl<V: Variable> MPoly<V, BigRational> {
    /// Exact quotient `self / divisor`, or `None` if the division leaves a remainder.
    pub fn exact_div(&self, divisor: &Self) -> Option<Self> {
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let (lm, lc) = divisor.leading_term().map(|(m, c)| (m.clone(), c.clone()))?;
        let inv = lc.recip();
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some((m, c)) = rem.leading_term() {
            let shift = m.div(&lm)?;
            let factor = c * &inv;
            rem = &rem - &divisor.mul_term(&shift, &factor);
            quot.add_term(shift, &factor);
        }
        Some(quot)
    }

    /// Greatest common divisor, normalized to leading coefficient 1.
    ///
    /// `gcd(0, 0) = 0`. Uses a recursive primitive remainder sequence in the
    /// largest variable present.
    pub fn gcd(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.monic();
        }
        if other.is_zero() {
            return self.monic();
        }
        if self.is_constant() || other.is_constant() {
            return Self::one();
        }
        if self.num_terms() == 1 || other.num_terms() == 1 {
            let m = self.monomial_content().gcd(&other.monomial_content());
            return Self::term(BigRational::one(), m);
        }
        let v = self.max_var().max(other.max_var()).expect("nonconstant");
        if !self.contains_var(&v) {
            return self.gcd(&other.content_in(&v));
        }
        if !other.contains_var(&v) {
            return self.content_in(&v).gcd(other);
        }
        let ca = self.content_in(&v);
        let cb = other.content_in(&v);
        let content = ca.gcd(&cb);
        let mut a = self.exact_div(&ca).expect("content divides");
        let mut b = other.exact_div(&cb).expect("content divides");
        if a.degree_in(&v) < b.degree_in(&v) {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() && b.degree_in(&v) > 0 {
            let (_, _, r) = a.pseudo_rem_in(&b, &v);
            a = b;
            b = if r.is_zero() { r } else { r.primitive_part_in(&v) };
        }
        let g = if b.is_zero() { a } else { Self::one() };
        (&content * &g).monic()
    }

    /// Gcd of the coefficients of `self` viewed as univariate in `v`.
    pub fn content_in(&self, v: &V) -> Self {
        let mut g = Self::zero();
        for c in self.coefficients_in(v).into_values() {
            g = g.gcd(&c);
            if g.is_constant() && !g.is_zero() {
                return Self::one();
            }
        }
        g
    }

    pub fn primitive_part_in(&self, v: &V) -> Self {
        let c = self.content_in(v);
        if c.is_zero() {
            return c;
        }
        self.exact_div(&c).expect("content divides")
    }

    /// Split into `factor · primitive` where `primitive` has coprime integer
    /// coefficients and a positive leading coefficient.
    pub fn integer_primitive(&self) -> (BigRational, Self) {
        if self.is_zero() {
            return (BigRational::zero(), Self::zero());
        }
        let mut factor = integer_content(self.terms().map(|(_, c)| c));
        if self.lead_coefficient().is_negative() {
            factor = -factor;
        }
        let inv = factor.recip();
        (factor, self.scale(&inv))
    }
}

/// Positive rational `g` such that every coefficient divided by `g` is an
/// integer and those integers are coprime.
pub fn integer_content<'a>(coeffs: impl IntoIterator<Item = &'a BigRational>) -> BigRational {
    let coeffs: Vec<&BigRational> = coeffs.into_iter().collect();
    let mut lcm = BigInt::one();
    for c in &coeffs {
        lcm = lcm.lcm(c.denom());
    }
    let mut g = BigInt::zero();
    for c in coeffs {
        g = g.gcd(&(c.numer() * (&lcm / c.denom())));
    }
    if g.is_zero() {
        return BigRational::one();
    }
    BigRational::new(g, lcm)
}

/// Gcd of a collection, `0` for an empty one.
pub fn gcd_all<'a, V: Variable + 'a>(polys: impl IntoIterator<Item = &'a QPoly<V>>) -> QPoly<V> {
    let mut g = QPoly::zero();
    for p in polys {
        g = g.gcd(p);
        if g.is_constant() && !g.is_zero() {
            break;
        }
    }
    g
}
