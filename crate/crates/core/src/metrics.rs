//! Conflict variables and their distances.
//!
//! * observation: `VOD = X_A - X_H`, measured with L1 or L2 distance;
//! * interpretation: `VID = y_A - y_H` over one-hot classes, measured with the
//!   cross entropy of the AI probability vector against the human one;
//! * action: `VAD = U_A - U_H`, measured with L2 distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default clamp applied to predicted probabilities before taking logs.
pub const DEFAULT_EPSILON: f64 = 1e-12;

/// One participant's observation of the `n` process variables at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationVector {
    pub values: Vec<f64>,
    pub t: f64,
}

/// One participant's `p` actuator commands at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector {
    pub values: Vec<f64>,
    pub t: f64,
}

fn checked_vector(values: Vec<f64>, what: &'static str) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::param(what, "must not be empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param(what, "entries must be finite"));
    }
    Ok(values)
}

impl ObservationVector {
    pub fn new(values: Vec<f64>, t: f64) -> Result<Self> {
        Ok(ObservationVector {
            values: checked_vector(values, "observation")?,
            t,
        })
    }
}

impl ActionVector {
    pub fn new(values: Vec<f64>, t: f64) -> Result<Self> {
        Ok(ActionVector {
            values: checked_vector(values, "action")?,
            t,
        })
    }
}

fn difference(a: &[f64], ta: f64, b: &[f64], tb: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if ta != tb {
        return Err(Error::Timestamp { left: ta, right: tb });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn vod(x_a: &ObservationVector, x_h: &ObservationVector) -> Result<Vec<f64>> {
    difference(&x_a.values, x_a.t, &x_h.values, x_h.t)
}

pub fn d_vod_manhattan(x_a: &ObservationVector, x_h: &ObservationVector) -> Result<f64> {
    vod(x_a, x_h).map(|d| l1(&d))
}

pub fn d_vod_euclidean(x_a: &ObservationVector, x_h: &ObservationVector) -> Result<f64> {
    vod(x_a, x_h).map(|d| l2(&d))
}

pub fn vad(u_a: &ActionVector, u_h: &ActionVector) -> Result<Vec<f64>> {
    difference(&u_a.values, u_a.t, &u_h.values, u_h.t)
}

pub fn d_vad(u_a: &ActionVector, u_h: &ActionVector) -> Result<f64> {
    vad(u_a, u_h).map(|d| l2(&d))
}

/// Which norm measures the observation difference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VodMetric {
    Manhattan,
    #[default]
    Euclidean,
}

impl VodMetric {
    pub fn distance(self, x_a: &ObservationVector, x_h: &ObservationVector) -> Result<f64> {
        match self {
            VodMetric::Manhattan => d_vod_manhattan(x_a, x_h),
            VodMetric::Euclidean => d_vod_euclidean(x_a, x_h),
        }
    }
}

/// Raw classifier scores over `m >= 2` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::param("scores", "need at least two classes"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::param("scores", "entries must be finite"));
        }
        Ok(ScoreVector(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A distribution over `m` classes: entries in `[0, 1]` summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::param("probs", "must not be empty"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::param("probs", "entries must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("probs", format!("entries sum to {sum}, not 1")));
        }
        Ok(ProbabilityVector(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&OneHotClass> for ProbabilityVector {
    fn from(y: &OneHotClass) -> Self {
        ProbabilityVector(y.as_vector())
    }
}

/// Classification outcome `class_index` out of `m` classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHotClass {
    class_index: usize,
    m: usize,
}

impl OneHotClass {
    pub fn new(class_index: usize, m: usize) -> Result<Self> {
        if class_index >= m {
            return Err(Error::param(
                "class_index",
                format!("{class_index} out of range for m = {m}"),
            ));
        }
        Ok(OneHotClass { class_index, m })
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn as_vector(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| if i == self.class_index { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Max-shifted softmax.
pub fn softmax(scores: &ScoreVector) -> ProbabilityVector {
    let s = scores.as_slice();
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    ProbabilityVector(exps.into_iter().map(|e| e / total).collect())
}

/// One-hot at the argmax; ties go to the lowest index.
pub fn classify(probs: &ProbabilityVector) -> OneHotClass {
    let p = probs.as_slice();
    let class_index = p
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > p[best] { i } else { best });
    OneHotClass {
        class_index,
        m: p.len(),
    }
}

pub fn vid(y_a: &OneHotClass, y_h: &OneHotClass) -> Result<Vec<f64>> {
    if y_a.m != y_h.m {
        return Err(Error::Dimension {
            expected: y_a.m,
            actual: y_h.m,
        });
    }
    Ok(y_a
        .as_vector()
        .into_iter()
        .zip(y_h.as_vector())
        .map(|(a, h)| a - h)
        .collect())
}

/// `-sum_i p_H[i] * ln(max(p_A[i], epsilon))`: the human vector is the target
/// distribution and the AI vector the prediction.
pub fn d_vid_cross_entropy(p_a: &ProbabilityVector, p_h: &ProbabilityVector, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-3) {
        return Err(Error::param("epsilon", "must lie in (0, 1e-3]"));
    }
    if p_a.len() != p_h.len() {
        return Err(Error::Dimension {
            expected: p_a.len(),
            actual: p_h.len(),
        });
    }
    let ce: f64 = p_h
        .as_slice()
        .iter()
        .zip(p_a.as_slice())
        .filter(|(&target, _)| target > 0.0)
        .map(|(&target, &pred)| -target * pred.max(epsilon).ln())
        .sum();
    // -1 * ln(1) is -0.0
    Ok(ce.max(0.0))
}

/// Maps a process-variable value onto `boundaries.len() + 1` ordered classes.
///
/// Class `c` covers `[b[c-1], b[c]]`; a value sitting exactly on a boundary
/// belongs to the lower class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpreter {
    /// Index of the process variable being interpreted.
    pub variable: usize,
    pub boundaries: Vec<f64>,
    /// Score falloff per unit distance outside a class interval.
    pub sharpness: f64,
}

impl Interpreter {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.variable >= n {
            return Err(Error::param(
                "variable",
                format!("index {} out of range for n = {n}", self.variable),
            ));
        }
        if self.boundaries.is_empty() {
            return Err(Error::param("boundaries", "need at least one boundary (two classes)"));
        }
        if self.boundaries.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("boundaries", "must be finite"));
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("boundaries", "must be strictly ascending"));
        }
        if !(self.sharpness > 0.0 && self.sharpness.is_finite()) {
            return Err(Error::param("sharpness", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// AI scoring: `-sharpness * distance(x, class interval)`.
    pub fn scores(&self, observation: &[f64]) -> Result<ScoreVector> {
        let x = observation[self.variable];
        let m = self.classes();
        let scores = (0..m)
            .map(|c| {
                let lo = if c == 0 {
                    f64::NEG_INFINITY
                } else {
                    self.boundaries[c - 1]
                };
                let hi = if c == m - 1 { f64::INFINITY } else { self.boundaries[c] };
                let outside = if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    0.0
                };
                -self.sharpness * outside
            })
            .collect();
        ScoreVector::new(scores)
    }

    /// Human interpretation: the class whose interval holds the value.
    pub fn direct_class(&self, observation: &[f64]) -> OneHotClass {
        let x = observation[self.variable];
        OneHotClass {
            class_index: self.boundaries.iter().filter(|&&b| b < x).count(),
            m: self.classes(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(v: &[f64]) -> ObservationVector {
        ObservationVector::new(v.to_vec(), 0.0).unwrap()
    }

    fn act(v: &[f64]) -> ActionVector {
        ActionVector::new(v.to_vec(), 0.0).unwrap()
    }

    fn probs(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn vod_examples() {
        assert_eq!(vod(&obs(&[1.0, 2.0]), &obs(&[1.0, 2.0])).unwrap(), vec![0.0, 0.0]);
        assert_eq!(vod(&obs(&[12.0]), &obs(&[10.0])).unwrap(), vec![2.0]);
        // x_A = x_N + 1 + 2, x_H = x_N + 0.5 + 0.5
        assert_eq!(vod(&obs(&[13.0]), &obs(&[11.0])).unwrap(), vec![2.0]);
    }

    #[test]
    fn vod_rejects_mismatch() {
        assert!(matches!(
            vod(&obs(&[1.0]), &obs(&[1.0, 2.0])),
            Err(Error::Dimension { .. })
        ));
        let late = ObservationVector::new(vec![1.0], 1.0).unwrap();
        assert!(matches!(vod(&obs(&[1.0]), &late), Err(Error::Timestamp { .. })));
        assert!(ObservationVector::new(vec![], 0.0).is_err());
        assert!(ObservationVector::new(vec![f64::NAN], 0.0).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(d_vod_manhattan(&obs(&[7.0]), &obs(&[4.0])).unwrap(), 3.0);
        assert_eq!(d_vod_manhattan(&obs(&[1.0, 2.0]), &obs(&[0.0, 0.0])).unwrap(), 3.0);
        assert_eq!(d_vod_euclidean(&obs(&[3.0, 4.0]), &obs(&[0.0, 0.0])).unwrap(), 5.0);
        assert_eq!(d_vod_euclidean(&obs(&[-2.5]), &obs(&[4.0])).unwrap(), 6.5);
        assert_eq!(d_vad(&act(&[1.0, 1.0]), &act(&[0.0, 0.0])).unwrap(), 2f64.sqrt());
        assert_eq!(d_vad(&act(&[4.0]), &act(&[1.0])).unwrap(), 3.0);
        assert_eq!(vad(&act(&[5.0]), &act(&[2.0])).unwrap(), vec![3.0]);
    }

    #[test]
    fn softmax_examples() {
        let uniform = softmax(&ScoreVector::new(vec![0.3; 3]).unwrap());
        for p in uniform.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let big = softmax(&ScoreVector::new(vec![1000.0, 1000.1]).unwrap());
        assert!(big.as_slice().iter().all(|p| p.is_finite()));
        let pair = softmax(&ScoreVector::new(vec![0.0, 2f64.ln()]).unwrap());
        assert!((pair.as_slice()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((pair.as_slice()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!(ScoreVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&probs(&[0.1, 0.7, 0.2])).class_index(), 1);
        assert_eq!(classify(&probs(&[0.5, 0.5])).class_index(), 0);
        let y = OneHotClass::new(2, 4).unwrap();
        assert_eq!(classify(&ProbabilityVector::from(&y)), y);
    }

    #[test]
    fn vid_examples() {
        let a = OneHotClass::new(0, 3).unwrap();
        let h = OneHotClass::new(2, 3).unwrap();
        assert_eq!(vid(&a, &a).unwrap(), vec![0.0; 3]);
        assert_eq!(vid(&a, &h).unwrap(), vec![1.0, 0.0, -1.0]);
        assert!(vid(&a, &OneHotClass::new(0, 2).unwrap()).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let eps = DEFAULT_EPSILON;
        let target = probs(&[1.0, 0.0, 0.0]);
        let near = probs(&[1.0 - 2.0 * eps, eps, eps]);
        assert!(d_vid_cross_entropy(&near, &target, eps).unwrap() < 1e-11);
        let d = d_vid_cross_entropy(&probs(&[0.7, 0.2, 0.1]), &target, eps).unwrap();
        assert!((d - 0.356_674_943_938_732_4).abs() < 1e-12);
        let third = 1.0 / 3.0;
        let d = d_vid_cross_entropy(&probs(&[third, third, third]), &target, eps).unwrap();
        assert!((d - 1.098_612_288_668_109_8).abs() < 1e-12);
        // zero prediction at the target class is clamped, not infinite
        let d = d_vid_cross_entropy(&probs(&[0.0, 1.0, 0.0]), &target, eps).unwrap();
        assert!((d + eps.ln()).abs() < 1e-9);
        assert!(d_vid_cross_entropy(&target, &target, 0.0).is_err());
        assert!(d_vid_cross_entropy(&target, &probs(&[0.5, 0.5]), eps).is_err());
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbabilityVector::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn interpreter_classes() {
        let it = Interpreter {
            variable: 0,
            boundaries: vec![10.0, 20.0],
            sharpness: 1.0,
        };
        assert!(it.validate(1).is_ok());
        for (x, class) in [(5.0, 0), (10.0, 0), (15.0, 1), (20.0, 1), (25.0, 2)] {
            assert_eq!(it.direct_class(&[x]).class_index(), class, "x = {x}");
            let ai = classify(&softmax(&it.scores(&[x]).unwrap()));
            assert_eq!(ai.class_index(), class, "x = {x}");
        }
        let bad = Interpreter {
            boundaries: vec![20.0, 10.0],
            ..it.clone()
        };
        assert!(bad.validate(1).is_err());
        assert!(it.validate(0).is_err());
    }
}
