//! Split conformal prediction on top of a calibrated classifier.
//!
//! The classifier is fit on one part of the data; conformity scores
//! `s = 1 - μ̂(x)_y` on a disjoint calibration part give the quantile `Q`, and
//! a label enters the prediction set for `x` when `μ̂(x)_y ≥ 1 - Q`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifiers::CalibratedClassifier;
use crate::dataset::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::grid::{score_grid, suffix_start, DEFAULT_GRID_STEP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibrator {
    pub classifier: CalibratedClassifier,
    /// Ascending.
    pub conformity: Vec<f64>,
    pub n_calib: usize,
}

/// `1 - μ̂(score)_label`.
pub fn conformity_score(classifier: &CalibratedClassifier, score: f64, label: Label) -> f64 {
    let p = classifier.predict_prob(score);
    match label {
        Label::Pass => 1.0 - p,
        Label::Fail => p,
    }
}

pub fn calibrate(
    classifier: CalibratedClassifier,
    holdout: &ScoreDataset,
) -> Result<ConformalCalibrator> {
    if holdout.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let mut conformity: Vec<f64> = holdout
        .records
        .iter()
        .map(|r| conformity_score(&classifier, r.score, r.label))
        .collect();
    conformity.sort_by(f64::total_cmp);
    Ok(ConformalCalibrator {
        classifier,
        n_calib: conformity.len(),
        conformity,
    })
}

/// Rank `⌈(n+1)(1-α)⌉` of the finite-sample quantile; may exceed `n`.
pub fn quantile_rank(n_calib: usize, alpha: f64) -> usize {
    // The small offset keeps exact products such as 10 · 0.9 from rounding up.
    let r = ((n_calib as f64 + 1.0) * (1.0 - alpha) - 1e-9).ceil();
    r.max(1.0) as usize
}

/// The `⌈(n+1)(1-α)⌉`-th smallest conformity score, or `+∞` when that rank
/// exceeds the calibration size.
pub fn conformal_quantile(calibrator: &ConformalCalibrator, alpha: f64) -> f64 {
    let rank = quantile_rank(calibrator.n_calib, alpha);
    if rank > calibrator.n_calib {
        f64::INFINITY
    } else {
        calibrator.conformity[rank - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub contains_pass: bool,
    pub contains_fail: bool,
}

impl PredictionSet {
    pub fn width(self) -> usize {
        self.contains_pass as usize + self.contains_fail as usize
    }

    pub fn contains(self, label: Label) -> bool {
        match label {
            Label::Pass => self.contains_pass,
            Label::Fail => self.contains_fail,
        }
    }
}

/// Labels whose probability is at least `1 - Q`. The comparison is done as
/// `s ≤ Q` on the same conformity expression used for calibration, so a test
/// point tied with a calibration point is treated identically.
pub fn prediction_set(calibrator: &ConformalCalibrator, q: f64, score: f64) -> PredictionSet {
    let c = &calibrator.classifier;
    PredictionSet {
        contains_pass: conformity_score(c, score, Label::Pass) <= q,
        contains_fail: conformity_score(c, score, Label::Fail) <= q,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalEvaluation {
    pub alpha: f64,
    pub coverage: f64,
    pub avg_width: f64,
    pub empty_fraction: f64,
    /// `None` when PASS is in no prediction set near the top of the range.
    pub threshold_score: Option<f64>,
}

pub fn evaluate(
    calibrator: &ConformalCalibrator,
    q: f64,
    test: &ScoreDataset,
    alpha: f64,
) -> Result<ConformalEvaluation> {
    evaluate_with_step(calibrator, q, test, alpha, DEFAULT_GRID_STEP)
}

pub fn evaluate_with_step(
    calibrator: &ConformalCalibrator,
    q: f64,
    test: &ScoreDataset,
    alpha: f64,
    grid_step: f64,
) -> Result<ConformalEvaluation> {
    if test.is_empty() {
        return Err(Error::EmptyTest);
    }
    let (mut covered, mut width, mut empty) = (0usize, 0usize, 0usize);
    for r in &test.records {
        let set = prediction_set(calibrator, q, r.score);
        covered += set.contains(r.label) as usize;
        width += set.width();
        empty += (set.width() == 0) as usize;
    }
    let n = test.len() as f64;
    let threshold_score = match conformal_score_threshold(calibrator, q, grid_step) {
        Ok(t) => Some(t),
        Err(Error::PassNeverIncluded) => None,
        Err(e) => return Err(e),
    };
    Ok(ConformalEvaluation {
        alpha,
        coverage: covered as f64 / n,
        avg_width: width as f64 / n,
        empty_fraction: empty as f64 / n,
        threshold_score,
    })
}

/// Smallest grid score from which PASS stays in every prediction set up to 1.
pub fn conformal_score_threshold(
    calibrator: &ConformalCalibrator,
    q: f64,
    grid_step: f64,
) -> Result<f64> {
    let grid = score_grid(grid_step)?;
    let ok: Vec<bool> = grid
        .iter()
        .map(|&x| prediction_set(calibrator, q, x).contains_pass)
        .collect();
    suffix_start(&ok)
        .map(|i| grid[i])
        .ok_or(Error::PassNeverIncluded)
}

/// One line of a coverage table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub library: String,
    pub confidence: f64,
    pub threshold: Option<f64>,
    pub coverage: f64,
    pub width: f64,
}

impl CoverageRow {
    pub fn new(library: impl Into<String>, eval: &ConformalEvaluation) -> Self {
        Self {
            library: library.into(),
            confidence: 1.0 - eval.alpha,
            threshold: eval.threshold_score,
            coverage: eval.coverage,
            width: eval.avg_width,
        }
    }
}

pub fn write_coverage_csv(rows: &[CoverageRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
