use serde::{Deserialize, Serialize};

use super::posterior::GpPosterior;

/// Thresholds for accepting a GP fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    /// The fit fails when its NLL is at least this value.
    pub max_nll: f64,
    /// A point is an outlier when its top-order std exceeds this multiple of the median.
    pub std_ratio: f64,
    /// The fit fails when more than this fraction of points are outliers.
    pub max_outlier_fraction: f64,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig { max_nll: 0.0, std_ratio: 10.0, max_outlier_fraction: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub pass: bool,
    pub reasons: Vec<String>,
    /// Prediction indices whose std exceeds the cap at some order; dropped downstream.
    pub excluded: Vec<usize>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn outliers(std: &[f64], ratio: f64) -> Vec<usize> {
    let cap = ratio * median(std.to_vec());
    std.iter().enumerate().filter(|(_, s)| **s > cap).map(|(i, _)| i).collect()
}

pub fn quality_gate(p: &GpPosterior, cfg: &GateConfig) -> GateVerdict {
    let mut reasons = Vec::new();
    if !(p.nll < cfg.max_nll) {
        reasons.push(format!("negative log likelihood {:.6} is not below {}", p.nll, cfg.max_nll));
    }
    let top = p.max_order();
    let stds: Vec<Vec<f64>> = p.orders.iter().map(|o| o.std().collect()).collect();
    let top_out = outliers(&stds[top], cfg.std_ratio);
    let n = p.times.len().max(1);
    if top_out.len() as f64 > cfg.max_outlier_fraction * n as f64 {
        reasons.push(format!(
            "{} of {} points have order-{top} std above {}x the median: {:?}",
            top_out.len(),
            n,
            cfg.std_ratio,
            top_out
        ));
    }
    let mut excluded: Vec<usize> = stds.iter().skip(1).flat_map(|s| outliers(s, cfg.std_ratio)).collect();
    excluded.sort_unstable();
    excluded.dedup();
    GateVerdict { pass: reasons.is_empty(), reasons, excluded }
}
