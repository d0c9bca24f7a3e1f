//! Conflict probability, severity, risk and grading.
//!
//! Probability follows a Beta-CDF curve of the normalized distance,
//! `P(d) = I_{d/d_max}(alpha, beta)` below `d_max` and 1 from `d_max` on.
//! Severity is `e^d - 1` and risk is `P * S`.

mod beta;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use beta::{ln_gamma, regularized_incomplete_beta};

use crate::error::{Error, Result};
use crate::metrics::{VodMetric, DEFAULT_EPSILON};

/// Shape and saturation distance of one conflict-probability curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskParams {
    pub alpha: f64,
    pub beta: f64,
    pub d_max: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            alpha: 2.0,
            beta: 2.0,
            d_max: 1.0,
        }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("d_max", self.d_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("d", format!("distance {d} must be >= 0")))
    }
}

pub fn conflict_probability(d: f64, params: &RiskParams) -> Result<f64> {
    check_distance(d)?;
    params.validate()?;
    if d >= params.d_max {
        return Ok(1.0);
    }
    regularized_incomplete_beta(d / params.d_max, params.alpha, params.beta)
}

/// `e^d - 1`; overflows to `+inf` for `d` above roughly 709.
pub fn severity(d: f64) -> Result<f64> {
    check_distance(d)?;
    Ok(d.exp_m1())
}

pub fn risk(probability: f64, severity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::param("probability", format!("{probability} is outside [0, 1]")));
    }
    if !(severity >= 0.0) {
        return Err(Error::param("severity", format!("{severity} must be >= 0")));
    }
    if probability == 0.0 {
        return Ok(0.0);
    }
    Ok(probability * severity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Grade {
    Low,
    Medium,
    High,
    Critical,
}

impl Grade {
    pub const ALL: [Grade; 4] = [Grade::Low, Grade::Medium, Grade::High, Grade::Critical];

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::Low => "Low",
            Grade::Medium => "Medium",
            Grade::High => "High",
            Grade::Critical => "Critical",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Three ascending risk thresholds separating Low | Medium | High | Critical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradeScale {
    pub thresholds: [f64; 3],
}

impl GradeScale {
    pub fn new(thresholds: [f64; 3]) -> Result<Self> {
        let scale = GradeScale { thresholds };
        scale.validate()?;
        Ok(scale)
    }

    /// Quartiles of `[0, e^{d_max} - 1]`.
    pub fn quartiles(d_max: f64) -> Result<Self> {
        let top = severity(d_max)?;
        GradeScale::new([0.25 * top, 0.5 * top, 0.75 * top])
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.thresholds;
        if t.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("thresholds", "must be finite and >= 0"));
        }
        if t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("thresholds", "must be strictly ascending"));
        }
        Ok(())
    }
}

/// A value equal to a threshold belongs to the higher grade.
pub fn grade(r: f64, scale: &GradeScale) -> Grade {
    let above = scale.thresholds.iter().filter(|&&th| r >= th).count();
    Grade::ALL[above]
}

/// Which distance drives the per-sample probability, severity and risk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    /// The distance with the largest `d / d_max`; ties go to VOD, then VID.
    #[default]
    Max,
    Vod,
    Vid,
    Vad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskConfig {
    pub vod: RiskParams,
    pub vid: RiskParams,
    pub vad: RiskParams,
    pub aggregate: Aggregate,
    pub vod_metric: VodMetric,
    /// Probability clamp for the interpretation cross entropy.
    pub epsilon: f64,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            vod: RiskParams::default(),
            vid: RiskParams::default(),
            vad: RiskParams::default(),
            aggregate: Aggregate::Max,
            vod_metric: VodMetric::Euclidean,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Probability, severity and risk of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment {
    pub probability: f64,
    pub severity: f64,
    pub risk: f64,
}

impl RiskConfig {
    pub fn validate(&self) -> Result<()> {
        self.vod.validate()?;
        self.vid.validate()?;
        self.vad.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1e-3) {
            return Err(Error::param("epsilon", "must lie in (0, 1e-3]"));
        }
        Ok(())
    }

    pub fn assess(&self, d_vod: f64, d_vid: f64, d_vad: f64) -> Result<Assessment> {
        let candidates = [(d_vod, &self.vod), (d_vid, &self.vid), (d_vad, &self.vad)];
        let (d, params) = match self.aggregate {
            Aggregate::Vod => candidates[0],
            Aggregate::Vid => candidates[1],
            Aggregate::Vad => candidates[2],
            Aggregate::Max => candidates.into_iter().fold(candidates[0], |best, c| {
                if c.0 / c.1.d_max > best.0 / best.1.d_max {
                    c
                } else {
                    best
                }
            }),
        };
        let probability = conflict_probability(d, params)?;
        let severity = severity(d)?;
        Ok(Assessment {
            probability,
            severity,
            risk: risk(probability, severity)?,
        })
    }
}
