use std::collections::BTreeSet;

use super::{
    differentiate, is_reduced, is_state_free, leader, simplify, DiffError, DiffPolynomial, DiffVar, Ranking, VarKind,
};

/// Result of Ritt pseudodivision of `A_i` by `A_j`.
///
/// Satisfies `multiplier·A_i − remainder = Σ_k quotients[k]·A_j^(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoDivision {
    pub remainder: DiffPolynomial,
    /// Product of initials and separants of `A_j`; involves signals as well as parameters.
    pub multiplier: DiffPolynomial,
    pub quotients: Vec<DiffPolynomial>,
}

/// Autoreduced set, ordered by increasing rank; state-free members first.
#[derive(Clone, Debug, PartialEq)]
pub struct CharSet {
    members: Vec<DiffPolynomial>,
    state_free: usize,
}

impl CharSet {
    pub fn members(&self) -> &[DiffPolynomial] {
        &self.members
    }

    pub fn state_free_members(&self) -> &[DiffPolynomial] {
        &self.members[..self.state_free]
    }

    pub fn state_bearing_members(&self) -> &[DiffPolynomial] {
        &self.members[self.state_free..]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Highest-ranked variable of `f` reducible by a polynomial with leader `u`
/// of degree `d`, with the prolongation order it needs.
fn reducible_by(f: &DiffPolynomial, u: &DiffVar, d: u32) -> Option<(DiffVar, u16)> {
    f.vars().into_iter().rev().find_map(|v| match v.derivative_order_over(u) {
        Some(0) if f.degree_in(&v) >= d => Some((v, 0)),
        Some(k) if k > 0 => Some((v, k)),
        _ => None,
    })
}

fn tick(steps: &mut usize, r: &Ranking) -> Result<(), DiffError> {
    *steps += 1;
    if *steps > r.max_steps {
        return Err(DiffError::NotStabilized(r.max_steps));
    }
    Ok(())
}

/// Ritt pseudodivision of `ai` by `aj`: prolong `aj` as needed, eliminating
/// the highest-ranked reducible derivative first.
pub fn pseudo_divide(ai: &DiffPolynomial, aj: &DiffPolynomial, r: &Ranking) -> Result<PseudoDivision, DiffError> {
    let u = leader(aj)?;
    let d = aj.degree_in(&u);
    let mut prolongations = vec![aj.clone()];
    let mut rem = ai.clone();
    let mut multiplier = DiffPolynomial::one();
    let mut quotients: Vec<DiffPolynomial> = Vec::new();
    let mut steps = 0;
    while let Some((v, k)) = reducible_by(&rem, &u, d) {
        tick(&mut steps, r)?;
        let k = k as usize;
        while prolongations.len() <= k {
            let next = differentiate(prolongations.last().expect("nonempty"), r)?;
            prolongations.push(next);
        }
        let (m, q, next) = rem.pseudo_rem_in(&prolongations[k], &v);
        for qk in quotients.iter_mut() {
            *qk = &*qk * &m;
        }
        if quotients.len() <= k {
            quotients.resize(k + 1, DiffPolynomial::zero());
        }
        quotients[k] = &quotients[k] + &q;
        multiplier = &multiplier * &m;
        rem = next;
    }
    Ok(PseudoDivision { remainder: rem, multiplier, quotients })
}

fn reduce_counted(
    f: &DiffPolynomial,
    chain: &[DiffPolynomial],
    r: &Ranking,
    steps: &mut usize,
) -> Result<DiffPolynomial, DiffError> {
    let leaders: Vec<(DiffVar, u32)> = chain
        .iter()
        .map(|a| leader(a).map(|u| (u, a.degree_in(&u))))
        .collect::<Result<_, _>>()?;
    let mut prolongations: Vec<Vec<DiffPolynomial>> = chain.iter().map(|a| vec![a.clone()]).collect();
    let mut rem = f.clone();
    loop {
        let target = leaders
            .iter()
            .enumerate()
            .filter_map(|(j, (u, d))| reducible_by(&rem, u, *d).map(|(v, k)| (v, k, j)))
            .max_by_key(|(v, _, _)| *v);
        let Some((v, k, j)) = target else { return Ok(rem) };
        tick(steps, r)?;
        let k = k as usize;
        while prolongations[j].len() <= k {
            let next = differentiate(prolongations[j].last().expect("nonempty"), r)?;
            prolongations[j].push(next);
        }
        rem = rem.pseudo_rem_in(&prolongations[j][k], &v).2;
    }
}

/// Full reduction of `f` with respect to an autoreduced chain.
pub fn reduce(f: &DiffPolynomial, chain: &[DiffPolynomial], r: &Ranking) -> Result<DiffPolynomial, DiffError> {
    let mut steps = 0;
    reduce_counted(f, chain, r, &mut steps)
}

fn check_scope(generators: &[DiffPolynomial], r: &Ranking) -> Result<(), DiffError> {
    let signals: BTreeSet<DiffVar> = generators.iter().flat_map(|g| g.vars()).map(DiffVar::base).collect();
    let count = |kind| signals.iter().filter(|v| v.kind == kind).count();
    let limits = [
        (VarKind::State, r.max_states, "states"),
        (VarKind::Output, r.max_outputs, "outputs"),
        (VarKind::Input, r.max_inputs, "inputs"),
    ];
    for (kind, max, name) in limits {
        let n = count(kind);
        if n > max {
            return Err(DiffError::OutOfScope(format!("{n} {name} (at most {max} supported)")));
        }
    }
    Ok(())
}

/// Sort key: rank first, then the simpler polynomial.
fn rank_key(p: &DiffPolynomial) -> (DiffVar, u32, u32, usize) {
    let u = p.max_var().expect("nonconstant");
    (u, p.degree_in(&u), p.total_degree(), p.num_terms())
}

fn check_nonconstant(p: &DiffPolynomial) -> Result<(), DiffError> {
    if p.is_constant() {
        return Err(DiffError::Inconsistent(p.constant_term().to_string()));
    }
    Ok(())
}

/// Ritt's algorithm: alternate between extracting a basic set and reducing
/// the rest of the working set against it, until nothing new survives.
pub fn characteristic_set(generators: &[DiffPolynomial], r: &Ranking) -> Result<CharSet, DiffError> {
    if generators.iter().any(|g| g.is_zero()) {
        return Err(DiffError::ZeroGenerator);
    }
    check_scope(generators, r)?;
    let mut work: Vec<DiffPolynomial> = generators.iter().map(simplify).collect();
    for g in &work {
        check_nonconstant(g)?;
    }
    let mut steps = 0;
    loop {
        work.sort_by_cached_key(rank_key);
        work.dedup();
        let mut basic: Vec<DiffPolynomial> = Vec::new();
        let mut rest = Vec::new();
        for f in work {
            let mut ok = true;
            for b in &basic {
                if !is_reduced(&f, b)? {
                    ok = false;
                    break;
                }
            }
            if ok {
                basic.push(f);
            } else {
                rest.push(f);
            }
        }
        let mut fresh: Vec<DiffPolynomial> = Vec::new();
        for f in &rest {
            let rem = simplify(&reduce_counted(f, &basic, r, &mut steps)?);
            if rem.is_zero() {
                continue;
            }
            check_nonconstant(&rem)?;
            if !fresh.contains(&rem) && !basic.contains(&rem) {
                fresh.push(rem);
            }
        }
        if fresh.is_empty() {
            let state_free = basic.iter().take_while(|p| is_state_free(p)).count();
            return Ok(CharSet { members: basic, state_free });
        }
        basic.extend(fresh);
        work = basic;
    }
}

/// The state-free members: the input-output equations.
pub fn extract_input_output(cs: &CharSet) -> Result<Vec<DiffPolynomial>, DiffError> {
    if cs.state_free == 0 {
        return Err(DiffError::NoStateFree);
    }
    Ok(cs.state_free_members().to_vec())
}
