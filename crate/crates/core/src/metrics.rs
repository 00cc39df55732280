//! Precision, recall and F1 for the positive class, plus the
//! `median [min, max]` summary used to report repeated runs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CareError, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Metrics whose denominator was zero and were reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDivision {
    Precision,
    Recall,
    F1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_division: Vec<ZeroDivision>,
}

/// Predict 1 when `prob >= threshold`.
pub fn classification_metrics(y_true: &[u8], y_prob: &[f64], threshold: f64) -> Result<MetricReport> {
    if y_true.len() != y_prob.len() {
        return Err(CareError::Shape(format!("{} labels but {} predictions", y_true.len(), y_prob.len())));
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&y, &p) in y_true.iter().zip(y_prob) {
        match (y == 1, p >= threshold) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => {}
        }
    }
    Ok(from_counts(tp, fp, fneg))
}

/// Metrics from confusion counts.
pub fn from_counts(tp: usize, fp: usize, fneg: usize) -> MetricReport {
    let mut zero_division = Vec::new();
    let ratio = |num: usize, den: usize, which: ZeroDivision, flags: &mut Vec<ZeroDivision>| {
        if den == 0 {
            flags.push(which);
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp, ZeroDivision::Precision, &mut zero_division);
    let recall = ratio(tp, tp + fneg, ZeroDivision::Recall, &mut zero_division);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        zero_division.push(ZeroDivision::F1);
        0.0
    };
    MetricReport { precision, recall, f1, zero_division }
}

/// Median with `[min, max]` across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// Lower median for even counts.
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(CareError::InvalidArgument("cannot summarize zero runs".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(Self { median: v[(v.len() - 1) / 2], min: v[0], max: v[v.len() - 1] })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} [{:.2}, {:.2}]", self.median, self.min, self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub precision: Summary,
    pub recall: Summary,
    pub f1: Summary,
    pub runs: usize,
}

pub fn aggregate(reports: &[MetricReport]) -> Result<AggregateReport> {
    let pick = |f: fn(&MetricReport) -> f64| Summary::of(&reports.iter().map(f).collect::<Vec<_>>());
    Ok(AggregateReport {
        precision: pick(|r| r.precision)?,
        recall: pick(|r| r.recall)?,
        f1: pick(|r| r.f1)?,
        runs: reports.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect() {
        let r = classification_metrics(&[1, 0, 1], &[0.9, 0.1, 0.5], 0.5).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
        assert!(r.zero_division.is_empty());
    }

    #[test]
    fn halves() {
        let r = classification_metrics(&[1, 0, 1, 0], &[0.9, 0.8, 0.2, 0.1], 0.5).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn no_positive_predictions() {
        let r = classification_metrics(&[1, 0], &[0.1, 0.2], 0.5).unwrap();
        assert_eq!((r.precision, r.f1), (0.0, 0.0));
        assert_eq!(r.zero_division, vec![ZeroDivision::Precision, ZeroDivision::F1]);
        assert!(classification_metrics(&[1], &[0.1, 0.2], 0.5).is_err());
    }

    #[test]
    fn summaries() {
        assert_eq!(Summary::of(&[0.8]).unwrap().to_string(), "0.80 [0.80, 0.80]");
        assert_eq!(Summary::of(&[0.76, 0.75, 0.76]).unwrap().to_string(), "0.76 [0.75, 0.76]");
        assert_eq!(Summary::of(&[0.9, 0.5]).unwrap().median, 0.5);
        assert!(Summary::of(&[]).is_err());
        assert!(aggregate(&[]).is_err());
    }
}
