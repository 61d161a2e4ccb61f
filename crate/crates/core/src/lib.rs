//! Statistically grounded decision thresholds for continuous evaluation
//! metrics (faithfulness and similar scores in `[0, 1]`) learned from
//! PASS/FAIL-labelled data.
//!
//! The crate offers several independent ways to turn a labelled score sample
//! into a cutoff, plus a cross-validation harness that compares them:
//!
//! * [`zscore`]: normal-theory intervals around the mean score.
//! * [`density`]: histogram midpoints and KDE + Bayes posterior floors.
//! * [`recall_curve`]: the largest cutoff that keeps a target recall.
//! * [`roc`]: ROC / precision-recall curves, FPR budgets and Youden's J.
//! * [`classifiers`] + [`conformal`]: Platt-style calibration (logistic,
//!   polynomial logistic, P-spline GAM) followed by split conformal
//!   prediction, mapped back to score space.
//!
//! Everything operates on a cleaned [`dataset::ScoreDataset`]. The
//! [`harness`] module runs the stratified K-fold protocol, and [`cli`] backs
//! the `threshcal` binary.

pub mod classifiers;
pub mod cli;
pub mod conformal;
pub mod dataset;
pub mod density;
pub mod error;
pub mod grid;
pub mod harness;
mod normal;
pub mod recall_curve;
pub mod roc;
pub mod synthetic;
pub mod zscore;

pub use dataset::{Label, LabeledScoreRecord, ScoreDataset};
pub use error::{Error, ErrorKind, Result};
