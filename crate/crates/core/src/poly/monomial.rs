use std::cmp::Ordering;
use std::fmt;

use super::Variable;

/// A power product `v1^e1 · v2^e2 · …` with positive exponents.
///
/// Monomials are ordered lexicographically with the *largest* variable most
/// significant, i.e. a proper monomial order in which `1` is minimal. For
/// differential monomials, where variables order by ranking, the maximal
/// monomial therefore carries the leader at its highest degree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial<V> {
    // sorted by variable, ascending; exponents > 0
    powers: Vec<(V, u32)>,
}

impl<V: Variable> Monomial<V> {
    pub fn one() -> Self {
        Monomial { powers: Vec::new() }
    }

    pub fn var(v: V) -> Self {
        Monomial { powers: vec![(v, 1)] }
    }

    pub fn var_pow(v: V, e: u32) -> Self {
        if e == 0 {
            Self::one()
        } else {
            Monomial { powers: vec![(v, e)] }
        }
    }

    pub fn from_powers(iter: impl IntoIterator<Item = (V, u32)>) -> Self {
        let mut m = Self::one();
        for (v, e) in iter {
            m = m.mul(&Self::var_pow(v, e));
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &[(V, u32)] {
        &self.powers
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, v: &V) -> u32 {
        match self.powers.binary_search_by(|(w, _)| w.cmp(v)) {
            Ok(i) => self.powers[i].1,
            Err(_) => 0,
        }
    }

    pub fn max_var(&self) -> Option<&V> {
        self.powers.last().map(|(v, _)| v)
    }

    pub fn vars(&self) -> impl Iterator<Item = &V> {
        self.powers.iter().map(|(v, _)| v)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.powers.len() + other.powers.len());
        let (mut i, mut j) = (0, 0);
        while i < self.powers.len() && j < other.powers.len() {
            let (a, ea) = &self.powers[i];
            let (b, eb) = &other.powers[j];
            match a.cmp(b) {
                Ordering::Less => {
                    out.push((a.clone(), *ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b.clone(), *eb));
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.clone(), ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.powers[i..]);
        out.extend_from_slice(&other.powers[j..]);
        Monomial { powers: out }
    }

    pub fn divides(&self, other: &Self) -> bool {
        self.powers.iter().all(|(v, e)| other.degree_in(v) >= *e)
    }

    /// `self / other`, if `other` divides `self`.
    pub fn div(&self, other: &Self) -> Option<Self> {
        let mut out = Vec::with_capacity(self.powers.len());
        for (v, e) in &self.powers {
            let d = other.degree_in(v);
            match e.cmp(&d) {
                Ordering::Greater => out.push((v.clone(), e - d)),
                Ordering::Equal => {}
                Ordering::Less => return None,
            }
        }
        if other.powers.iter().any(|(v, _)| self.degree_in(v) == 0) {
            return None;
        }
        Some(Monomial { powers: out })
    }

    /// Removes every power of `v`.
    pub fn without(&self, v: &V) -> Self {
        Monomial { powers: self.powers.iter().filter(|(w, _)| w != v).cloned().collect() }
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Self) -> Self {
        Monomial {
            powers: self
                .powers
                .iter()
                .filter_map(|(v, e)| {
                    let d = other.degree_in(v).min(*e);
                    (d > 0).then(|| (v.clone(), d))
                })
                .collect(),
        }
    }

    /// Replace every variable through `f`; the map must be injective.
    pub fn map_vars<W: Variable>(&self, mut f: impl FnMut(&V) -> W) -> Monomial<W> {
        Monomial::from_powers(self.powers.iter().map(|(v, e)| (f(v), *e)))
    }

    pub fn descending(&self) -> Descending<'_, V> {
        Descending(self)
    }

    pub fn eval(&self, mut value: impl FnMut(&V) -> f64) -> f64 {
        self.powers.iter().map(|(v, e)| value(v).powi(*e as i32)).product()
    }
}

impl<V: Variable> Ord for Monomial<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.powers.iter().rev();
        let mut b = other.powers.iter().rev();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((va, ea)), Some((vb, eb))) => {
                    let ord = va.cmp(vb).then(ea.cmp(eb));
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
            }
        }
    }
}

impl<V: Variable> PartialOrd for Monomial<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<V: Variable> fmt::Display for Monomial<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return f.write_str("1");
        }
        for (i, (v, e)) in self.powers.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Display adapter writing the largest variable first.
pub struct Descending<'a, V>(&'a Monomial<V>);

impl<V: Variable> fmt::Display for Descending<'_, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.powers.is_empty() {
            return f.write_str("1");
        }
        for (i, (v, e)) in self.0.powers.iter().rev().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        Ok(())
    }
}

impl<V: Variable> fmt::Debug for Monomial<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Monomial<u8>;

    #[test]
    fn lex_order_is_a_monomial_order() {
        let a = M::var(1);
        let b = M::var(2);
        assert!(a < b);
        assert!(M::var_pow(1, 5) < b);
        assert!(a.mul(&b) > b);
        assert!(M::one() < a);
        // compatible with multiplication
        let c = M::var(3);
        assert!(a.mul(&c) < b.mul(&c));
    }

    #[test]
    fn division() {
        let m = M::from_powers([(1, 2), (2, 1)]);
        assert_eq!(m.div(&M::var(1)), Some(M::from_powers([(1, 1), (2, 1)])));
        assert_eq!(m.div(&M::var(3)), None);
        assert_eq!(m.div(&M::var_pow(2, 2)), None);
        assert!(M::var(2).divides(&m));
        assert_eq!(m.gcd(&M::from_powers([(1, 1), (3, 4)])), M::var(1));
    }
}
