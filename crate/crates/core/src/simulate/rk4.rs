use super::compiled::{numeric_model, CompiledRational};
use super::inputs::InputSignals;
use super::SimError;
use crate::diffpoly::VarKind;
use crate::invariant::{Atom, ModelSpec};
use crate::poly::rational_to_f64;

const BLOW_UP: f64 = 1e12;
const TOLERANCE: f64 = 1e-8;
const MAX_SUBSTEPS: usize = 1 << 16;

/// State values at the grid times.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `states[i][k]` is `x_{k+1}(t_i)`.
    pub states: Vec<Vec<f64>>,
    /// RK4 steps per grid interval.
    pub substeps: usize,
}

struct Rhs {
    f: Vec<CompiledRational>,
    inputs: InputSignals,
    n: usize,
}

impl Rhs {
    fn new(m: &ModelSpec) -> Result<Self, SimError> {
        let (rhs, _) = numeric_model(m)?;
        let n = m.num_states();
        let index = |a: &Atom| match a {
            Atom::Signal(v) if v.order == 0 && v.kind == VarKind::State => Some(v.index as usize - 1),
            Atom::Signal(v) if v.order == 0 && v.kind == VarKind::Input => Some(n + v.index as usize - 1),
            _ => None,
        };
        let f = rhs.iter().map(|r| CompiledRational::compile(r, &index)).collect::<Result<_, _>>()?;
        Ok(Rhs { f, inputs: InputSignals::new(m, 0), n })
    }

    fn eval(&self, t: f64, x: &[f64], vals: &mut Vec<f64>, out: &mut [f64]) -> Result<(), SimError> {
        vals.clear();
        vals.extend_from_slice(x);
        for i in 0..self.inputs.count() {
            vals.push(self.inputs.eval(i, 0, t)?);
        }
        for (o, f) in out.iter_mut().zip(&self.f) {
            *o = f.eval(vals);
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<(), SimError> {
    if grid.is_empty() {
        return Err(SimError::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid[0] < 0.0 {
        return Err(SimError::InvalidGrid("times must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::InvalidGrid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Classical RK4 from `t = 0` with `substeps` equal steps per grid interval.
pub fn integrate_fixed(m: &ModelSpec, grid: &[f64], substeps: usize) -> Result<Trajectory, SimError> {
    check_grid(grid)?;
    assert!(substeps > 0, "at least one substep");
    let rhs = Rhs::new(m)?;
    let n = rhs.n;
    let mut x: Vec<f64> = m.initial.iter().map(rational_to_f64).collect();
    let mut vals = Vec::with_capacity(n + rhs.inputs.count());
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut states = Vec::with_capacity(grid.len());
    let mut t = 0.0;
    for &target in grid {
        let span = target - t;
        let steps = if span > 0.0 { substeps } else { 0 };
        let h = if steps > 0 { span / steps as f64 } else { 0.0 };
        for s in 0..steps {
            let t0 = t + s as f64 * h;
            rhs.eval(t0, &x, &mut vals, &mut k1)?;
            for k in 0..n {
                tmp[k] = x[k] + 0.5 * h * k1[k];
            }
            rhs.eval(t0 + 0.5 * h, &tmp, &mut vals, &mut k2)?;
            for k in 0..n {
                tmp[k] = x[k] + 0.5 * h * k2[k];
            }
            rhs.eval(t0 + 0.5 * h, &tmp, &mut vals, &mut k3)?;
            for k in 0..n {
                tmp[k] = x[k] + h * k3[k];
            }
            rhs.eval(t0 + h, &tmp, &mut vals, &mut k4)?;
            for k in 0..n {
                x[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            }
            if x.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP) {
                return Err(SimError::BlowUp { time: t0 + h });
            }
        }
        t = target;
        states.push(x.clone());
    }
    Ok(Trajectory { times: grid.to_vec(), states, substeps })
}

fn max_relative_change(a: &Trajectory, b: &Trajectory) -> f64 {
    let n = a.states.first().map_or(0, Vec::len);
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let scale = b.states.iter().map(|s| s[k].abs()).fold(0.0, f64::max);
        let floor = (scale * 1e-6).max(f64::MIN_POSITIVE);
        for (sa, sb) in a.states.iter().zip(&b.states) {
            worst = worst.max((sa[k] - sb[k]).abs() / sb[k].abs().max(floor));
        }
    }
    worst
}

/// RK4 with the substep count doubled until halving the step changes no
/// sample by more than 1e-8 relative.
pub fn integrate_model(m: &ModelSpec, grid: &[f64]) -> Result<Trajectory, SimError> {
    let mut substeps = 4;
    let mut coarse = integrate_fixed(m, grid, substeps)?;
    loop {
        substeps *= 2;
        let fine = integrate_fixed(m, grid, substeps)?;
        if max_relative_change(&coarse, &fine) < TOLERANCE {
            return Ok(fine);
        }
        if substeps >= MAX_SUBSTEPS {
            return Err(SimError::NotConverged(substeps));
        }
        coarse = fine;
    }
}
