use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// A named parameter (or opaque unknown coefficient).
///
/// Symbols order naturally: an alphabetic prefix first, then a trailing
/// number compared numerically, so `p2 < p11` and `p01 < p02`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Opaque unknown coefficients are written `c1`, `c2`, … in invariant files.
    pub fn is_unknown_coefficient(&self) -> bool {
        let s = self.as_str();
        s.len() > 1 && s.starts_with('c') && s[1..].bytes().all(|b| b.is_ascii_digit())
    }

    fn split(&self) -> (&str, &str) {
        let s = self.as_str();
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        s.split_at(cut)
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        let (pa, na) = self.split();
        let (pb, nb) = other.split();
        pa.cmp(pb)
            .then_with(|| {
                // numeric comparison of digit suffixes without overflow
                let ta = na.trim_start_matches('0');
                let tb = nb.trim_start_matches('0');
                ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb))
            })
            .then_with(|| na.len().cmp(&nb.len()))
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}
