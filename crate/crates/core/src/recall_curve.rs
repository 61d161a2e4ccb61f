//! Empirical recall of PASS records as a function of the cutoff.
//!
//! A record passes when `score >= threshold`. Candidate thresholds are `0`
//! plus every distinct score in the data.

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, ScoreDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallPoint {
    pub threshold: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallCurve {
    /// Ascending in threshold.
    pub points: Vec<RecallPoint>,
    pub positives_total: usize,
}

impl RecallCurve {
    /// Recall at an arbitrary cutoff, counted from the curve's positives.
    pub fn recall_at(&self, threshold: f64) -> f64 {
        match self.points.iter().position(|p| p.threshold >= threshold) {
            Some(i) => self.points[i].recall,
            None => 0.0,
        }
    }
}

pub fn empirical_recall_curve(dataset: &ScoreDataset) -> Result<RecallCurve> {
    let mut pass = dataset.scores_with(Label::Pass);
    if pass.is_empty() {
        return Err(Error::NoPositives);
    }
    pass.sort_by(f64::total_cmp);
    let mut candidates = dataset.scores();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let total = pass.len();
    // Walk candidates upward; `below` counts PASS scores strictly under t.
    let mut below = 0;
    let points = candidates
        .into_iter()
        .map(|t| {
            while below < total && pass[below] < t {
                below += 1;
            }
            RecallPoint {
                threshold: t,
                recall: (total - below) as f64 / total as f64,
            }
        })
        .collect();
    Ok(RecallCurve {
        points,
        positives_total: total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallThreshold {
    pub threshold: f64,
    pub recall: f64,
}

/// Largest candidate threshold whose recall is at least `target`.
pub fn recall_threshold_on_curve(curve: &RecallCurve, target: f64) -> Result<RecallThreshold> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "recall target must be in (0, 1], got {target}"
        )));
    }
    let p = curve
        .points
        .iter()
        .rev()
        .find(|p| p.recall >= target)
        .expect("recall at threshold 0 is 1");
    Ok(RecallThreshold {
        threshold: p.threshold,
        recall: p.recall,
    })
}

pub fn recall_threshold(dataset: &ScoreDataset, target: f64) -> Result<RecallThreshold> {
    recall_threshold_on_curve(&empirical_recall_curve(dataset)?, target)
}
