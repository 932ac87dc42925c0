//! Scalar metrics: Brier score, ROC AUC, AUPRC, Theil–Sen slope, confusion
//! arithmetic, and across-game dispersion.
//!
//! Undefined values (empty input, single-class AUC, zero denominators) are
//! reported as absent, never coerced to 0.

use serde::{Deserialize, Serialize};

pub const CI95_Z: f64 = 1.96;

/// Why a metric could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricAbsence {
    EmptyInput,
    SingleClass,
    NoPositives,
    TooFewPoints,
}

impl std::fmt::Display for MetricAbsence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricAbsence::EmptyInput => f.write_str("empty input"),
            MetricAbsence::SingleClass => f.write_str("needs both a positive and a negative label"),
            MetricAbsence::NoPositives => f.write_str("needs at least one positive label"),
            MetricAbsence::TooFewPoints => f.write_str("needs two points with distinct x"),
        }
    }
}

/// Mean of `(score - label)^2` over `(score, label)` pairs.
pub fn brier(pairs: &[(f64, bool)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let sum: f64 = pairs
        .iter()
        .map(|&(s, d)| {
            let y = if d { 1.0 } else { 0.0 };
            (s - y) * (s - y)
        })
        .sum();
    Some(sum / pairs.len() as f64)
}

/// Sort pairs descending by score and group equal scores.
fn score_groups(pairs: &[(f64, bool)]) -> Vec<(f64, usize, usize)> {
    let mut sorted: Vec<(f64, bool)> = pairs.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (s, d) in sorted {
        match groups.last_mut() {
            Some((gs, pos, neg)) if *gs == s => {
                if d {
                    *pos += 1;
                } else {
                    *neg += 1;
                }
            }
            _ => groups.push((s, d as usize, !d as usize)),
        }
    }
    groups
}

/// ROC AUC via tie-grouped trapezoidal integration, equal to the
/// Mann–Whitney probability that a random positive outscores a random
/// negative with ties counted half.
pub fn roc_auc(pairs: &[(f64, bool)]) -> Result<f64, MetricAbsence> {
    let positives = pairs.iter().filter(|(_, d)| *d).count();
    let negatives = pairs.len() - positives;
    if pairs.is_empty() {
        return Err(MetricAbsence::EmptyInput);
    }
    if positives == 0 || negatives == 0 {
        return Err(MetricAbsence::SingleClass);
    }
    let mut tp = 0.0f64;
    let mut area = 0.0f64;
    for (_, pos, neg) in score_groups(pairs) {
        let dtp = pos as f64;
        let dfp = neg as f64;
        area += dfp * (tp + dtp / 2.0);
        tp += dtp;
    }
    Ok(area / (positives as f64 * negatives as f64))
}

/// Area under the precision–recall curve by step-wise interpolation over
/// descending unique score thresholds (average precision).
pub fn auprc(pairs: &[(f64, bool)]) -> Result<f64, MetricAbsence> {
    if pairs.is_empty() {
        return Err(MetricAbsence::EmptyInput);
    }
    let positives = pairs.iter().filter(|(_, d)| *d).count();
    if positives == 0 {
        return Err(MetricAbsence::NoPositives);
    }
    let total_pos = positives as f64;
    let mut cum_tp = 0.0f64;
    let mut cum_fp = 0.0f64;
    let mut area = 0.0f64;
    for (_, pos, neg) in score_groups(pairs) {
        cum_tp += pos as f64;
        cum_fp += neg as f64;
        if pos > 0 {
            let precision = cum_tp / (cum_tp + cum_fp);
            let recall_step = pos as f64 / total_pos;
            area += recall_step * precision;
        }
    }
    Ok(area)
}

/// Median of all pairwise slopes over points with distinct x. Even counts
/// average the two middle values.
pub fn theil_sen(points: &[(f64, f64)]) -> Option<f64> {
    let mut slopes = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let (xi, yi) = points[i];
            let (xj, yj) = points[j];
            if xi != xj {
                slopes.push((yj - yi) / (xj - xi));
            }
        }
    }
    if slopes.is_empty() {
        return None;
    }
    slopes.sort_by(|a, b| a.total_cmp(b));
    let mid = slopes.len() / 2;
    Some(if slopes.len() % 2 == 1 {
        slopes[mid]
    } else {
        (slopes[mid - 1] + slopes[mid]) / 2.0
    })
}

/// Confusion counts with the peer flag as prediction and the speaker's
/// self-label as ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    #[serde(rename = "tp")]
    pub true_pos: u64,
    #[serde(rename = "tn")]
    pub true_neg: u64,
    #[serde(rename = "fp")]
    pub false_pos: u64,
    #[serde(rename = "fn")]
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.true_pos += 1,
            (false, false) => self.true_neg += 1,
            (true, false) => self.false_pos += 1,
            (false, true) => self.false_neg += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.true_neg += other.true_neg;
        self.false_pos += other.false_pos;
        self.false_neg += other.false_neg;
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn accuracy(&self) -> Option<f64> {
        ratio(self.true_pos + self.true_neg, self.total())
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.true_pos, self.true_pos + self.false_pos)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.true_pos, self.true_pos + self.false_neg)
    }

    pub fn f1(&self) -> Option<f64> {
        let p = self.precision()?;
        let r = self.recall()?;
        if p + r == 0.0 {
            None
        } else {
            Some(2.0 * p * r / (p + r))
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Sample standard deviation (n − 1 denominator); needs at least two values.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Standard error of the mean across independent samples.
pub fn sem(xs: &[f64]) -> Option<f64> {
    Some(sample_std(xs)? / (xs.len() as f64).sqrt())
}
