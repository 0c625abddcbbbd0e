use std::collections::BTreeMap;

use num_rational::BigRational;

use super::SimError;
use crate::invariant::{Atom, ModelRational, ModelSpec};
use crate::poly::{rational_to_f64, MPoly};

/// Flat polynomial for repeated floating-point evaluation.
#[derive(Clone, Debug)]
pub(crate) struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    fn compile(p: &MPoly<Atom, BigRational>, index: &impl Fn(&Atom) -> Option<usize>) -> Result<Self, SimError> {
        let mut terms = Vec::with_capacity(p.num_terms());
        for (m, c) in p.terms() {
            let mut powers = Vec::with_capacity(m.powers().len());
            for (a, e) in m.powers() {
                let i = index(a).ok_or_else(|| SimError::Unresolved(a.to_string()))?;
                powers.push((i, *e as i32));
            }
            terms.push((rational_to_f64(c), powers));
        }
        Ok(CompiledPoly { terms })
    }

    fn eval(&self, vals: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, powers)| powers.iter().fold(*c, |acc, &(i, e)| acc * vals[i].powi(e)))
            .sum()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledRational {
    num: CompiledPoly,
    den: Option<CompiledPoly>,
}

impl CompiledRational {
    pub fn compile(r: &ModelRational, index: &impl Fn(&Atom) -> Option<usize>) -> Result<Self, SimError> {
        let num = CompiledPoly::compile(r.numer(), index)?;
        let den = if r.is_polynomial() {
            let scale = rational_to_f64(&r.denom().constant_term());
            Some(CompiledPoly { terms: vec![(scale, Vec::new())] }).filter(|_| scale != 1.0)
        } else {
            Some(CompiledPoly::compile(r.denom(), index)?)
        };
        Ok(CompiledRational { num, den })
    }

    pub fn eval(&self, vals: &[f64]) -> f64 {
        let n = self.num.eval(vals);
        match &self.den {
            Some(d) => n / d.eval(vals),
            None => n,
        }
    }
}

/// Right-hand sides and output with every parameter replaced by its value.
pub(crate) fn numeric_model(m: &ModelSpec) -> Result<(Vec<ModelRational>, ModelRational), SimError> {
    let mut values = BTreeMap::new();
    for p in &m.params {
        let v = p.value.clone().ok_or_else(|| SimError::MissingValue(p.name.to_string()))?;
        values.insert(Atom::Param(p.name.clone()), v);
    }
    let sub = |r: &ModelRational| r.substitute(&values).ok_or(SimError::Singular("denominator vanishes at the parameter values".into()));
    let rhs = m.rhs.iter().map(sub).collect::<Result<Vec<_>, _>>()?;
    Ok((rhs, sub(&m.output)?))
}

/// Values of valued parameters, for evaluating input expressions.
pub(crate) fn param_env(m: &ModelSpec) -> BTreeMap<String, f64> {
    m.params.iter().filter_map(|p| p.value.as_ref().map(|v| (p.name.to_string(), rational_to_f64(v)))).collect()
}
