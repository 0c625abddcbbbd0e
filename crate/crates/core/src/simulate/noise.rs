use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{SimError, TimeSeries};
use crate::diffpoly::VarKind;

/// How measurement noise enters the output samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// `ỹ = (1 + εZ)·y`, `Z ~ N(0, 1)`.
    Relative,
    /// `ỹ = y + εZ`.
    AdditiveGaussian,
    /// `ỹ = y + ε·U(0, 1)`.
    AdditiveUniform,
}

impl NoiseMode {
    pub const ALL: [NoiseMode; 3] = [NoiseMode::Relative, NoiseMode::AdditiveGaussian, NoiseMode::AdditiveUniform];

    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Relative => "relative",
            NoiseMode::AdditiveGaussian => "additive-gaussian",
            NoiseMode::AdditiveUniform => "additive-uniform",
        }
    }

    /// Perturb one value with a fresh draw.
    pub fn apply(self, value: f64, level: f64, rng: &mut impl Rng) -> f64 {
        match self {
            NoiseMode::Relative => value * (1.0 + level * rng.sample::<f64, _>(StandardNormal)),
            NoiseMode::AdditiveGaussian => value + level * rng.sample::<f64, _>(StandardNormal),
            NoiseMode::AdditiveUniform => value + level * rng.random::<f64>(),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        NoiseMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| SimError::UnknownNoiseMode(s.to_string()))
    }
}

/// Noise applied to a series, recorded alongside it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub level: f64,
    pub seed: u64,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Perturb every output column; times and inputs are left untouched.
///
/// Columns are visited in file order and rows in time order, so the result
/// depends only on `(series, mode, level, seed)`.
pub fn add_noise(ts: &TimeSeries, mode: NoiseMode, level: f64, seed: u64) -> Result<TimeSeries, SimError> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(SimError::InvalidNoise(level));
    }
    let mut out = ts.clone();
    out.noise = Some(NoiseSpec { mode, level, seed });
    if level == 0.0 {
        return Ok(out);
    }
    let mut rng = rng_from_seed(seed);
    for (var, col) in out.columns.iter_mut() {
        if var.kind != VarKind::Output {
            continue;
        }
        for v in col.iter_mut() {
            *v = mode.apply(*v, level, &mut rng);
        }
    }
    Ok(out)
}
