use super::compiled::CompiledRational;
use super::SimError;
use crate::diffpoly::{DiffVar, VarKind};
use crate::invariant::{Atom, ModelRational};

/// `D R = Σ ∂R/∂x_k · f_k + Σ ∂R/∂u_i^(j) · u_i^(j+1)`.
pub(crate) fn lie_derivative(r: &ModelRational, rhs: &[ModelRational]) -> ModelRational {
    let mut out = ModelRational::zero();
    for atom in r.vars() {
        let Atom::Signal(v) = atom else { continue };
        let w = match v.kind {
            VarKind::State => rhs[v.index as usize - 1].clone(),
            VarKind::Input => ModelRational::var(Atom::Signal(v.derivative())),
            VarKind::Output => continue,
        };
        let d = r.partial(&atom);
        if !d.is_zero() {
            out = &out + &(&d * &w);
        }
    }
    out
}

/// Exact `y, ẏ, …, y^(max_order)` as functions of states and input derivatives.
pub(crate) fn output_derivatives(output: &ModelRational, rhs: &[ModelRational], max_order: usize) -> Vec<ModelRational> {
    let mut chain = vec![output.clone()];
    for _ in 0..max_order {
        let next = lie_derivative(chain.last().expect("nonempty"), rhs);
        chain.push(next);
    }
    chain
}

/// Evaluation layout: states first, then input `i` at order `j` in slot
/// `n_states + i·(orders+1) + j`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub n_states: usize,
    pub orders: usize,
}

impl Layout {
    pub fn width(&self, n_inputs: usize) -> usize {
        self.n_states + n_inputs * (self.orders + 1)
    }

    pub fn index(&self, a: &Atom) -> Option<usize> {
        match a {
            Atom::Signal(v) => self.index_of(v),
            Atom::Param(_) => None,
        }
    }

    fn index_of(&self, v: &DiffVar) -> Option<usize> {
        match v.kind {
            VarKind::State if v.order == 0 => Some(v.index as usize - 1),
            VarKind::Input if (v.order as usize) <= self.orders => {
                Some(self.n_states + (v.index as usize - 1) * (self.orders + 1) + v.order as usize)
            }
            _ => None,
        }
    }
}

pub(crate) fn compile_chain(chain: &[ModelRational], layout: Layout) -> Result<Vec<CompiledRational>, SimError> {
    let index = |a: &Atom| layout.index(a);
    chain.iter().map(|r| CompiledRational::compile(r, &index)).collect()
}
