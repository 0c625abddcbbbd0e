use std::collections::BTreeMap;

use super::SimError;
use crate::expr::Expr;
use crate::invariant::ModelSpec;

/// Closed-form inputs and their symbolic time derivatives.
#[derive(Clone, Debug)]
pub struct InputSignals {
    /// `derivs[i][j]` is the `j`-th derivative of input `i + 1`.
    derivs: Vec<Vec<Expr>>,
    env: BTreeMap<String, f64>,
}

impl InputSignals {
    pub fn new(m: &ModelSpec, max_order: usize) -> Self {
        let derivs = m
            .inputs
            .iter()
            .map(|inp| {
                let mut chain = vec![inp.expr.clone()];
                for _ in 0..max_order {
                    let next = chain.last().expect("nonempty").diff("t");
                    chain.push(next);
                }
                chain
            })
            .collect();
        InputSignals { derivs, env: super::compiled::param_env(m) }
    }

    pub fn count(&self) -> usize {
        self.derivs.len()
    }

    pub fn max_order(&self) -> usize {
        self.derivs.first().map_or(0, |d| d.len() - 1)
    }

    pub fn eval(&self, input: usize, order: usize, t: f64) -> Result<f64, SimError> {
        let env = |name: &str| if name == "t" { Some(t) } else { self.env.get(name).copied() };
        let v = self.derivs[input][order].eval(&env).map_err(|e| SimError::Singular(e.to_string()))?;
        if !v.is_finite() {
            return Err(SimError::Singular(format!("input u{} is not finite at t = {t}", input + 1)));
        }
        Ok(v)
    }
}
