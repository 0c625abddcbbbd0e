use std::cmp::Ordering;
use std::fmt;

/// Class of a differential indeterminate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Input,
    Output,
    State,
}

/// A signal `x_k`, `y_j` or `u_i`, differentiated `order` times.
///
/// The total order on `DiffVar` *is* the elimination ranking: every state
/// derivative ranks above every output or input derivative; within each
/// class higher order ranks higher, then `(kind, index)` breaks ties.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct DiffVar {
    pub kind: VarKind,
    pub index: u16,
    pub order: u16,
}

impl DiffVar {
    pub const fn new(kind: VarKind, index: u16, order: u16) -> Self {
        DiffVar { kind, index, order }
    }

    pub const fn state(index: u16) -> Self {
        Self::new(VarKind::State, index, 0)
    }

    pub const fn output(index: u16) -> Self {
        Self::new(VarKind::Output, index, 0)
    }

    pub const fn input(index: u16) -> Self {
        Self::new(VarKind::Input, index, 0)
    }

    pub const fn with_order(self, order: u16) -> Self {
        DiffVar { order, ..self }
    }

    pub const fn derivative(self) -> Self {
        self.with_order(self.order + 1)
    }

    /// The underlying signal (order 0).
    pub const fn base(self) -> Self {
        self.with_order(0)
    }

    pub fn is_state(&self) -> bool {
        self.kind == VarKind::State
    }

    /// `Some(k)` when `self = other^(k)` for some `k ≥ 0`.
    pub fn derivative_order_over(&self, other: &DiffVar) -> Option<u16> {
        (self.kind == other.kind && self.index == other.index && self.order >= other.order)
            .then(|| self.order - other.order)
    }

    fn rank_key(&self) -> (bool, u16, VarKind, u16) {
        (self.is_state(), self.order, self.kind, self.index)
    }

    /// Parse the textual form: `y`, `y2`, `u1`, `x3`, `d2y`, `d1u1`, `d3x2`.
    pub fn parse(token: &str) -> Option<DiffVar> {
        let (order, rest) = match token.strip_prefix('d') {
            Some(body) => {
                let digits = body.bytes().take_while(u8::is_ascii_digit).count();
                if digits == 0 {
                    return None;
                }
                (body[..digits].parse().ok()?, &body[digits..])
            }
            None => (0, token),
        };
        let mut chars = rest.chars();
        let kind = match chars.next()? {
            'x' => VarKind::State,
            'y' => VarKind::Output,
            'u' => VarKind::Input,
            _ => return None,
        };
        let idx = chars.as_str();
        let index = if idx.is_empty() {
            if kind == VarKind::State {
                return None;
            }
            1
        } else {
            if !idx.bytes().all(|b| b.is_ascii_digit()) || idx.starts_with('0') {
                return None;
            }
            idx.parse().ok()?
        };
        Some(DiffVar::new(kind, index, order))
    }
}

impl Ord for DiffVar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_key().cmp(&other.rank_key())
    }
}

impl PartialOrd for DiffVar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DiffVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.order > 0 {
            write!(f, "d{}", self.order)?;
        }
        match self.kind {
            VarKind::State => write!(f, "x{}", self.index),
            VarKind::Input => write!(f, "u{}", self.index),
            VarKind::Output if self.index == 1 => f.write_str("y"),
            VarKind::Output => write!(f, "y{}", self.index),
        }
    }
}

impl fmt::Debug for DiffVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
