use serde::{Deserialize, Serialize};

use super::bounds::pvalue_bound_from;
use super::{deterministic_reject, singular_values, test_statistic, LinearSystem, SolveError};

pub const DEFAULT_ALPHA: f64 = 0.05;
/// `σ_n(Ã) < LOW_RANK_RATIO·σ_1(Ã)` flags a numerically low-rank matrix.
pub const LOW_RANK_RATIO: f64 = 1e-8;
/// With no noise in the scales, `τ` at or below this fraction of `σ_1([Ã, b̃])` counts as zero.
const ZERO_TAU_RATIO: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Reject,
    Compatible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Statistical,
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub model: String,
    pub data_source: String,
    pub noise_level: f64,
    pub mode: Decision,
    pub m: usize,
    pub n: usize,
    pub tau: f64,
    #[serde(rename = "sv_A")]
    pub sv_a: Vec<f64>,
    #[serde(rename = "sv_Ab")]
    pub sv_ab: Vec<f64>,
    #[serde(rename = "sigmaA2")]
    pub sigma_a2: f64,
    #[serde(rename = "sigmaB2")]
    pub sigma_b2: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "P2")]
    pub p2: f64,
    pub p_bound: f64,
    pub alpha: f64,
    /// Perturbation bound used by the deterministic rule.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

impl SolvabilityReport {
    pub fn is_reject(&self) -> bool {
        self.verdict == Verdict::Reject
    }

    pub fn with_labels(mut self, model: &str, data_source: &str) -> Self {
        self.model = model.to_string();
        self.data_source = data_source.to_string();
        self
    }
}

fn base_report(sys: &LinearSystem, alpha: f64) -> Result<SolvabilityReport, SolveError> {
    let sv_a = singular_values(&sys.a)?;
    let sv_ab = singular_values(&sys.augmented())?;
    let tau = test_statistic(sys)?;
    let (sigma_a2, sigma_b2) = sys.variances();
    let mut x = tau;
    if sigma_a2 == 0.0 && sigma_b2 == 0.0 && tau <= ZERO_TAU_RATIO * sv_ab.first().copied().unwrap_or(0.0) {
        x = 0.0;
    }
    let p = pvalue_bound_from(sigma_a2, sigma_b2, sys.m(), sys.n(), x);
    let mut warnings = sys.warnings.clone();
    if sys.n() > 0 {
        if let (Some(first), Some(last)) = (sv_a.first(), sv_a.get(sys.n() - 1)) {
            if *last < LOW_RANK_RATIO * first {
                warnings.push(format!("A is numerically low-rank: sigma_n/sigma_1 = {:.3e}", last / first));
            }
        }
    }
    Ok(SolvabilityReport {
        model: String::new(),
        data_source: String::new(),
        noise_level: sys.epsilon,
        mode: Decision::Statistical,
        m: sys.m(),
        n: sys.n(),
        tau,
        sv_a,
        sv_ab,
        sigma_a2,
        sigma_b2,
        p1: p.p1,
        p2: p.p2,
        p_bound: p.p_bound,
        alpha,
        bound: None,
        verdict: Verdict::Compatible,
        warnings,
    })
}

/// Statistical verdict: reject iff `p_bound ≤ α` and there are more rows than unknowns.
pub fn decide(sys: &LinearSystem, alpha: f64) -> Result<SolvabilityReport, SolveError> {
    let mut r = base_report(sys, alpha)?;
    let informative = sys.m() > sys.n();
    r.verdict = if r.p_bound <= alpha && informative { Verdict::Reject } else { Verdict::Compatible };
    Ok(r)
}

/// Deterministic verdict: reject iff `τ > bound`.
pub fn decide_deterministic(sys: &LinearSystem, bound: f64, alpha: f64) -> Result<SolvabilityReport, SolveError> {
    let d = deterministic_reject(sys, bound)?;
    let mut r = base_report(sys, alpha)?;
    r.mode = Decision::Deterministic;
    r.bound = Some(bound);
    let informative = sys.m() > sys.n();
    r.verdict = if d.reject && informative { Verdict::Reject } else { Verdict::Compatible };
    Ok(r)
}
