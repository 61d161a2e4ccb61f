//! ROC and precision-recall curves over raw scores or calibrated
//! probabilities, and the cutoffs read off them.
//!
//! The rule is inclusive everywhere: `value >= threshold` predicts PASS.
//! PASS is the positive class.

use std::path::Path;

use serde::Serialize;

use crate::dataset::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    /// Descending thresholds. The first point has threshold `+∞` and sits at
    /// `(0, 0)`; the last one is the smallest value and sits at `(1, 1)`.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// Distinct values in descending order with PASS/FAIL counts at each.
fn grouped_counts(values: &[f64], labels: &[Label]) -> Vec<(f64, usize, usize)> {
    assert_eq!(
        values.len(),
        labels.len(),
        "values and labels differ in length"
    );
    let mut pairs: Vec<(f64, Label)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    for (v, l) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == v => {}
            _ => out.push((v, 0, 0)),
        }
        let last = out.last_mut().expect("just pushed");
        if l.is_pass() {
            last.1 += 1;
        } else {
            last.2 += 1;
        }
    }
    out
}

pub fn roc_curve(values: &[f64], labels: &[Label]) -> Result<RocCurve> {
    let groups = grouped_counts(values, labels);
    let pos: usize = groups.iter().map(|g| g.1).sum();
    let neg: usize = groups.iter().map(|g| g.2).sum();
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
    }];
    // Trapezoid area in integer units: Σ ΔFP · (TP_prev + TP) / (2 P N).
    let mut area2: u128 = 0;
    let (mut tp, mut fp) = (0usize, 0usize);
    for (v, p, n) in groups {
        area2 += (n as u128) * ((2 * tp + p) as u128);
        tp += p;
        fp += n;
        points.push(RocPoint {
            threshold: v,
            tpr: tp as f64 / pos as f64,
            fpr: fp as f64 / neg as f64,
        });
    }
    Ok(RocCurve {
        points,
        auc: area2 as f64 / (2.0 * pos as f64 * neg as f64),
        positives: pos,
        negatives: neg,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrCurve {
    /// Descending thresholds, one per distinct value.
    pub points: Vec<PrPoint>,
    pub average_precision: f64,
}

pub fn pr_curve(values: &[f64], labels: &[Label]) -> Result<PrCurve> {
    let groups = grouped_counts(values, labels);
    let pos: usize = groups.iter().map(|g| g.1).sum();
    if pos == 0 {
        return Err(Error::NoPositives);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::with_capacity(groups.len());
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (v, p, n) in groups {
        tp += p;
        fp += n;
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push(PrPoint {
            threshold: v,
            precision,
            recall,
        });
    }
    Ok(PrCurve {
        points,
        average_precision: ap,
    })
}

/// Smallest threshold on the curve whose FPR is within `max_fpr`. When only
/// the `+∞` point qualifies, the result is the next float above the largest
/// value, which rejects everything.
pub fn threshold_at_fpr(curve: &RocCurve, max_fpr: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&max_fpr) {
        return Err(Error::OutOfRange(format!(
            "max FPR must be in [0, 1], got {max_fpr}"
        )));
    }
    let best = curve
        .points
        .iter()
        .rev()
        .find(|p| p.fpr <= max_fpr)
        .expect("the first point has fpr 0");
    if best.threshold.is_finite() {
        Ok(best.threshold)
    } else {
        Ok(curve.points[1].threshold.next_up())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecallSelection {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Largest threshold whose recall reaches `target_recall`.
pub fn threshold_at_recall(
    values: &[f64],
    labels: &[Label],
    target_recall: f64,
) -> Result<RecallSelection> {
    if !(target_recall > 0.0 && target_recall <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "recall target must be in (0, 1], got {target_recall}"
        )));
    }
    let curve = pr_curve(values, labels)?;
    selection_at_recall(&curve, target_recall)
}

pub fn selection_at_recall(curve: &PrCurve, target_recall: f64) -> Result<RecallSelection> {
    let p = curve
        .points
        .iter()
        .find(|p| p.recall >= target_recall)
        .ok_or(Error::NoPositives)?;
    Ok(RecallSelection {
        threshold: p.threshold,
        precision: p.precision,
        recall: p.recall,
    })
}

/// Threshold maximizing `tpr - fpr`; ties go to the larger threshold. The
/// `+∞` point is not a candidate.
pub fn youden_threshold(curve: &RocCurve) -> f64 {
    let mut best = (f64::NEG_INFINITY, curve.points[1].threshold);
    for p in &curve.points[1..] {
        let j = p.tpr - p.fpr;
        if j > best.0 {
            best = (j, p.threshold);
        }
    }
    best.1
}

pub fn write_roc_csv(curve: &RocCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in &curve.points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pr_csv(curve: &PrCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in &curve.points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Fail as F, Pass as P};

    #[test]
    fn separated_and_chance() {
        let c = roc_curve(&[0.9, 0.8, 0.2, 0.1], &[P, P, F, F]).unwrap();
        assert_eq!(c.auc, 1.0);
        let y = youden_threshold(&c);
        assert!(y > 0.2 && y <= 0.8);

        let c = roc_curve(&[0.5; 4], &[P, F, P, F]).unwrap();
        assert_eq!(c.auc, 0.5);
        assert_eq!(c.points.len(), 2);
        assert_eq!(youden_threshold(&c), 0.5);
    }

    #[test]
    fn endpoints() {
        let c = roc_curve(&[0.3, 0.6, 0.6, 0.1], &[P, F, P, F]).unwrap();
        let first = c.points[0];
        let last = *c.points.last().unwrap();
        assert_eq!((first.tpr, first.fpr), (0.0, 0.0));
        assert_eq!((last.tpr, last.fpr), (1.0, 1.0));
        assert!(matches!(roc_curve(&[0.1], &[P]), Err(Error::SingleClass)));
    }

    #[test]
    fn fpr_budget() {
        let v = [0.9, 0.7, 0.6, 0.4, 0.2];
        let l = [P, F, P, F, F];
        let c = roc_curve(&v, &l).unwrap();
        assert_eq!(threshold_at_fpr(&c, 1.0).unwrap(), 0.2);
        assert_eq!(threshold_at_fpr(&c, 0.0).unwrap(), 0.9);
        assert_eq!(threshold_at_fpr(&c, 0.34).unwrap(), 0.6);

        // The largest value is a FAIL: nothing but "reject all" has FPR 0.
        let c = roc_curve(&[0.9, 0.5], &[F, P]).unwrap();
        let t = threshold_at_fpr(&c, 0.0).unwrap();
        assert!(t > 0.9 && t < 0.9 + 1e-15);
    }

    #[test]
    fn pr_basics() {
        let c = pr_curve(&[0.2, 0.5, 0.9], &[P, P, P]).unwrap();
        assert!(c.points.iter().all(|p| p.precision == 1.0));
        assert_eq!(c.average_precision, 1.0);

        let v = [0.1, 0.4, 0.35, 0.8];
        let l = [F, F, P, P];
        let c = pr_curve(&v, &l).unwrap();
        let last = c.points.last().unwrap();
        assert_eq!(last.recall, 1.0);
        assert_eq!(last.precision, 0.5);
        // 0.5 * 1 + 0.5 * 2/3
        assert!((c.average_precision - (0.5 + 1.0 / 3.0)).abs() < 1e-15);

        let s = threshold_at_recall(&v, &l, 1.0).unwrap();
        assert_eq!(s.threshold, 0.35);
        assert!(matches!(
            threshold_at_recall(&v, &[F; 4], 0.5),
            Err(Error::NoPositives)
        ));
    }
}
