use serde::{Deserialize, Serialize};

use super::kernel::Hyperparams;
use super::likelihood::{check, neg_log_marginal_likelihood, nll_and_gradient};
use super::GpError;

pub const MIN_FIT_POINTS: usize = 8;
pub const MAX_CG_ITERATIONS: usize = 200;

/// One multi-start run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub start: Hyperparams,
    pub start_nll: Option<f64>,
    pub end: Option<Hyperparams>,
    pub nll: Option<f64>,
    pub iterations: usize,
    pub error: Option<String>,
}

/// Best hyperparameters over the start grid, fitted to mean-centered data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub hyper: Hyperparams,
    pub nll: f64,
    pub y_mean: f64,
    pub starts: Vec<StartReport>,
}

pub(crate) fn center(y: &[f64]) -> (f64, Vec<f64>) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (mean, y.iter().map(|v| v - mean).collect())
}

fn median_gap(times: &[f64]) -> f64 {
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    if n % 2 == 1 {
        gaps[n / 2]
    } else {
        0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
    }
}

/// Box in log space keeping every start and iterate well defined.
struct Bounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Bounds {
    fn project(&self, x: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| x[k].clamp(self.lo[k], self.hi[k]))
    }

    /// Gradient with components pushing out of the box zeroed.
    fn projected_gradient(&self, x: &[f64; 3], g: &[f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| {
            let at_lo = x[k] <= self.lo[k] && g[k] > 0.0;
            let at_hi = x[k] >= self.hi[k] && g[k] < 0.0;
            if at_lo || at_hi {
                0.0
            } else {
                g[k]
            }
        })
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

type Objective<'a> = dyn Fn([f64; 3]) -> Result<(f64, [f64; 3]), GpError> + 'a;

/// A point on the search ray with its value, projected gradient and slope.
#[derive(Clone, Copy)]
struct Probe {
    alpha: f64,
    x: [f64; 3],
    f: f64,
    g: [f64; 3],
    slope: f64,
}

struct Ray<'a> {
    f: &'a Objective<'a>,
    bounds: &'a Bounds,
    x: [f64; 3],
    d: [f64; 3],
}

impl Ray<'_> {
    fn probe(&self, alpha: f64) -> Option<Probe> {
        let x = self.bounds.project([0, 1, 2].map(|k| self.x[k] + alpha * self.d[k]));
        let (f, g) = (self.f)(x).ok()?;
        let g = self.bounds.projected_gradient(&x, &g);
        let slope = dot(&g, &self.d);
        f.is_finite().then_some(Probe { alpha, x, f, g, slope })
    }
}

const C1: f64 = 1e-4;
const C2: f64 = 0.1;

/// Strong Wolfe line search along `ray`, starting from `at0` with trial step `alpha`.
fn wolfe(ray: &Ray, at0: &Probe, mut alpha: f64) -> Option<Probe> {
    let mut prev = *at0;
    for i in 0..20 {
        let Some(cur) = ray.probe(alpha) else {
            return zoom(ray, at0, prev, Probe { alpha, f: f64::INFINITY, ..prev });
        };
        if cur.f > at0.f + C1 * alpha * at0.slope || (i > 0 && cur.f >= prev.f) {
            return zoom(ray, at0, prev, cur);
        }
        if cur.slope.abs() <= -C2 * at0.slope {
            return Some(cur);
        }
        if cur.slope >= 0.0 {
            return zoom(ray, at0, cur, prev);
        }
        if cur.x == prev.x {
            // pinned against the box
            return Some(cur);
        }
        prev = cur;
        alpha *= 2.0;
    }
    Some(prev).filter(|p| p.f < at0.f)
}

fn zoom(ray: &Ray, at0: &Probe, mut lo: Probe, mut hi: Probe) -> Option<Probe> {
    for _ in 0..30 {
        // safeguarded quadratic interpolation from lo's value and slope
        let (a, b) = (lo.alpha, hi.alpha);
        let mut alpha = 0.5 * (a + b);
        if hi.f.is_finite() {
            let h = b - a;
            let denom = 2.0 * (hi.f - lo.f - lo.slope * h);
            if denom > 0.0 {
                let q = a - lo.slope * h * h / denom;
                let (mn, mx) = (a.min(b), a.max(b));
                if q > mn + 0.1 * (mx - mn) && q < mx - 0.1 * (mx - mn) {
                    alpha = q;
                }
            }
        }
        let Some(cur) = ray.probe(alpha) else {
            hi = Probe { alpha, f: f64::INFINITY, ..hi };
            continue;
        };
        if cur.f > at0.f + C1 * alpha * at0.slope || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.slope.abs() <= -C2 * at0.slope {
                return Some(cur);
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
        if (hi.alpha - lo.alpha).abs() < 1e-12 {
            break;
        }
    }
    Some(lo).filter(|p| p.f < at0.f)
}

/// Polak–Ribière+ conjugate gradient with a strong Wolfe line search,
/// projected onto the box.
fn minimize(f: &Objective, x0: [f64; 3], bounds: &Bounds) -> Result<([f64; 3], f64, usize), GpError> {
    let x = bounds.project(x0);
    let (fx, g) = f(x)?;
    let g = bounds.projected_gradient(&x, &g);
    let mut d = g.map(|v| -v);
    let mut here = Probe { alpha: 0.0, x, f: fx, g, slope: dot(&g, &d) };
    let mut last_step: Option<f64> = None;
    for iter in 0..MAX_CG_ITERATIONS {
        if here.g.iter().all(|v| v.abs() < 1e-6) {
            return Ok((here.x, here.f, iter));
        }
        if here.slope >= 0.0 {
            d = here.g.map(|v| -v);
            here.slope = dot(&here.g, &d);
        }
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let alpha0 = last_step.unwrap_or(1.0).min(2.0 / dmax);
        let ray = Ray { f, bounds, x: here.x, d };
        let Some(next) = wolfe(&ray, &Probe { alpha: 0.0, ..here }, alpha0) else {
            if iter > 0 && d != here.g.map(|v| -v) {
                // retry once along steepest descent
                d = here.g.map(|v| -v);
                here.slope = dot(&here.g, &d);
                last_step = None;
                continue;
            }
            return Ok((here.x, here.f, iter));
        };
        let g_old = here.g;
        let beta = if (iter + 1) % 3 == 0 {
            0.0
        } else {
            ((dot(&next.g, &next.g) - dot(&next.g, &g_old)) / dot(&g_old, &g_old)).max(0.0)
        };
        let step_len = next.alpha * dmax;
        d = [0, 1, 2].map(|k| -next.g[k] + beta * d[k]);
        let done = (here.f - next.f).abs() <= 1e-10 * (1.0 + here.f.abs());
        here = Probe { alpha: 0.0, slope: dot(&next.g, &d), ..next };
        let dmax_new = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        last_step = Some((step_len / dmax_new.max(1e-300)).max(1e-8));
        if done {
            return Ok((here.x, here.f, iter + 1));
        }
    }
    Ok((here.x, here.f, MAX_CG_ITERATIONS))
}

/// The 27 grid starts for the given data.
pub fn start_grid(times: &[f64], y: &[f64]) -> Vec<Hyperparams> {
    let (var, _) = variance_scale(y);
    let gap = median_gap(times);
    let mut out = Vec::with_capacity(27);
    for a in [0.1, 1.0, 10.0] {
        for l in [0.1, 1.0, 10.0] {
            for s in [1e-4, 1e-2, 1.0] {
                out.push(Hyperparams::new(a * var, l * gap * 10.0, s * var));
            }
        }
    }
    out
}

/// Sample variance, floored so constant data still has a usable scale.
fn variance_scale(y: &[f64]) -> (f64, f64) {
    let (mean, c) = center(y);
    let var = c.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
    let floor = 1e-12 * mean.abs().max(1.0).powi(2);
    (var.max(floor), mean)
}

fn bounds_for(times: &[f64], y: &[f64]) -> Bounds {
    let (var, _) = variance_scale(y);
    let gap = median_gap(times);
    let span = times[times.len() - 1] - times[0];
    Bounds {
        lo: [(1e-8 * var).ln(), (0.5 * gap).ln(), (1e-12 * var).ln()],
        hi: [(1e6 * var).ln(), (100.0 * span).ln(), (10.0 * var).ln()],
    }
}

/// Maximum-likelihood hyperparameters for mean-centered `y`.
///
/// Every grid start is refined by conjugate gradient in log space; the
/// lowest final NLL wins.
pub fn fit_hyperparameters(times: &[f64], y: &[f64]) -> Result<Fit, GpError> {
    check(times, y, MIN_FIT_POINTS)?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GpError::Shape("times must be strictly increasing".into()));
    }
    let (y_mean, yc) = center(y);
    let bounds = bounds_for(times, y);
    let objective = |p: [f64; 3]| nll_and_gradient(times, &yc, &Hyperparams::from_log(p));
    let mut starts = Vec::new();
    let mut best: Option<(Hyperparams, f64)> = None;
    for h0 in start_grid(times, y) {
        let start_nll = neg_log_marginal_likelihood(times, &yc, &h0).ok();
        let report = match minimize(&objective, h0.to_log(), &bounds) {
            Ok((p, nll, iterations)) => {
                let h = Hyperparams::from_log(p);
                if best.is_none_or(|(_, b)| nll < b) {
                    best = Some((h, nll));
                }
                StartReport { start: h0, start_nll, end: Some(h), nll: Some(nll), iterations, error: None }
            }
            Err(e) => StartReport { start: h0, start_nll, end: None, nll: None, iterations: 0, error: Some(e.to_string()) },
        };
        starts.push(report);
    }
    match best {
        Some((hyper, nll)) => Ok(Fit { hyper, nll, y_mean, starts }),
        None => Err(GpError::AllStartsFailed(starts.iter().filter_map(|s| s.error.clone()).collect())),
    }
}
