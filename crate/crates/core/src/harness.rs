//! Stratified K-fold comparison of threshold methods across confidence
//! levels, with per-fold rows, fold aggregates and plot-ready CSV series.
//!
//! What "confidence level" means depends on the method:
//!
//! | method       | level is used as                                  | metric on test fold |
//! |--------------|---------------------------------------------------|---------------------|
//! | `ZSCORE`     | interval confidence; threshold = lower bound      | recall              |
//! | `HIST_MIN`   | ignored                                           | recall              |
//! | `KDE`        | floor on `P(PASS \| x)`                           | recall              |
//! | `EMP_RECALL` | recall target on training scores                  | recall              |
//! | `PR_CURVE`   | recall target on calibrated probabilities         | recall              |
//! | `ROC_FPR`    | `1 - level` is the FPR budget on probabilities    | recall              |
//! | `YOUDEN`     | ignored                                           | recall              |
//! | `CONFORMAL`  | `1 - α`                                           | coverage, width     |
//!
//! A method that fails on a fold (for instance an unreachable posterior
//! floor) contributes threshold `0` with the failure recorded on the row.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    invert_probability_threshold, CalibratedClassifier, ClassifierKind, ClassifierSettings,
};
use crate::conformal::{self, ConformalCalibrator};
use crate::dataset::{split_holdout, stratified_kfold, Label, ScoreDataset};
use crate::density::{self, histogram_local_minimum, posterior_curve, PosteriorModel};
use crate::error::{Error, Result};
use crate::grid::DEFAULT_GRID_STEP;
use crate::recall_curve::{empirical_recall_curve, recall_threshold};
use crate::roc::{self, roc_curve, threshold_at_fpr, youden_threshold};
use crate::zscore::{z_interval, ZMode};

pub const DEFAULT_LEVELS: [f64; 5] = [0.8, 0.9, 0.95, 0.975, 0.99];
pub const DEFAULT_HIST_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Zscore,
    HistMin,
    Kde,
    EmpRecall,
    PrCurve(ClassifierKind),
    RocFpr(ClassifierKind),
    Youden,
    Conformal(ClassifierKind),
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Zscore => "ZSCORE",
            Method::HistMin => "HIST_MIN",
            Method::Kde => "KDE",
            Method::EmpRecall => "EMP_RECALL",
            Method::PrCurve(_) => "PR_CURVE",
            Method::RocFpr(_) => "ROC_FPR",
            Method::Youden => "YOUDEN",
            Method::Conformal(_) => "CONFORMAL",
        }
    }

    pub fn classifier(self) -> Option<ClassifierKind> {
        match self {
            Method::PrCurve(c) | Method::RocFpr(c) | Method::Conformal(c) => Some(c),
            _ => None,
        }
    }

    /// Every method, classifier-backed ones once per classifier kind.
    pub fn all() -> Vec<Method> {
        let mut out = vec![
            Method::Zscore,
            Method::HistMin,
            Method::Kde,
            Method::EmpRecall,
            Method::Youden,
        ];
        for c in ClassifierKind::ALL {
            out.extend([Method::PrCurve(c), Method::RocFpr(c), Method::Conformal(c)]);
        }
        out
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.classifier() {
            Some(c) => write!(
                f,
                "{}:{}",
                self.name().to_ascii_lowercase().replace('_', "-"),
                c
            ),
            None => f.write_str(&self.name().to_ascii_lowercase().replace('_', "-")),
        }
    }
}

/// Accepts `zscore`, `hist-min`, `kde`, `emp-recall`, `youden`, and
/// `pr-curve`, `roc-fpr`, `conformal` optionally followed by `:<classifier>`
/// (default `gam`). Case and `-`/`_` are not significant.
impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        let head = head.trim().to_ascii_lowercase().replace('_', "-");
        let classifier = tail.map(str::parse::<ClassifierKind>).transpose()?;
        let plain = |m: Method| match classifier {
            None => Ok(m),
            Some(_) => Err(Error::ConfigInvalid(format!(
                "method `{head}` takes no classifier"
            ))),
        };
        let kind = classifier.unwrap_or(ClassifierKind::Gam);
        match head.as_str() {
            "zscore" | "z-score" => plain(Method::Zscore),
            "hist-min" => plain(Method::HistMin),
            "kde" => plain(Method::Kde),
            "emp-recall" => plain(Method::EmpRecall),
            "youden" => plain(Method::Youden),
            "pr-curve" | "pr" => Ok(Method::PrCurve(kind)),
            "roc-fpr" | "roc" => Ok(Method::RocFpr(kind)),
            "conformal" => Ok(Method::Conformal(kind)),
            _ => Err(Error::ConfigInvalid(format!("unknown method `{s}`"))),
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub confidence_levels: Vec<f64>,
    pub k_folds: usize,
    pub seed: u64,
    pub classifier: ClassifierSettings,
    pub grid_step: f64,
    pub hist_bins: usize,
    /// Share of each training fold used to calibrate conformal predictors.
    pub calib_fraction: f64,
    pub z_mode: ZMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: Method::all(),
            confidence_levels: DEFAULT_LEVELS.to_vec(),
            k_folds: 5,
            seed: 0,
            classifier: ClassifierSettings::default(),
            grid_step: DEFAULT_GRID_STEP,
            hist_bins: DEFAULT_HIST_BINS,
            calib_fraction: 0.5,
            z_mode: ZMode::Population,
        }
    }
}

impl RunConfig {
    /// Checks ranges and returns a copy with levels sorted and deduplicated
    /// and methods deduplicated in first-seen order.
    pub fn validated(&self) -> Result<RunConfig> {
        if self.methods.is_empty() {
            return Err(Error::ConfigInvalid("no methods selected".into()));
        }
        if self.confidence_levels.is_empty() {
            return Err(Error::ConfigInvalid("no confidence levels".into()));
        }
        if let Some(l) = self
            .confidence_levels
            .iter()
            .find(|l| !(**l > 0.0 && **l < 1.0))
        {
            return Err(Error::ConfigInvalid(format!(
                "confidence level {l} is outside (0, 1)"
            )));
        }
        if self.k_folds < 2 {
            return Err(Error::ConfigInvalid(format!(
                "k must be at least 2, got {}",
                self.k_folds
            )));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "grid step {} is outside (0, 1]",
                self.grid_step
            )));
        }
        if self.hist_bins < 3 {
            return Err(Error::ConfigInvalid(
                "need at least 3 histogram bins".into(),
            ));
        }
        if !(self.calib_fraction > 0.0 && self.calib_fraction < 1.0) {
            return Err(Error::ConfigInvalid(
                "calib_fraction must be in (0, 1)".into(),
            ));
        }
        self.classifier.validate()?;

        let mut out = self.clone();
        out.confidence_levels.sort_by(f64::total_cmp);
        out.confidence_levels.dedup();
        let mut seen = Vec::new();
        out.methods.retain(|m| {
            let fresh = !seen.contains(m);
            seen.push(*m);
            fresh
        });
        Ok(out)
    }

    fn classifier_kinds(&self) -> Vec<ClassifierKind> {
        let mut kinds: Vec<ClassifierKind> =
            self.methods.iter().filter_map(|m| m.classifier()).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub classifier: String,
    pub confidence: f64,
    pub fold: usize,
    pub threshold: f64,
    pub metric_name: String,
    pub metric_value: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub classifier: String,
    pub confidence: f64,
    pub threshold_mean: f64,
    pub threshold_std: f64,
    pub metric_name: String,
    pub metric_mean: f64,
    pub metric_std: f64,
    /// Folds whose threshold fell back to 0.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Name of the score column the report was computed on.
    pub score_field: String,
    pub k_folds: usize,
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Mean and sample standard deviation (`0` for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregates grouped by `(method, classifier, confidence, metric)` in the
/// order the groups first appear in `rows`.
pub fn aggregate_rows(rows: &[ReportRow]) -> Vec<Aggregate> {
    let mut order: Vec<(String, String, u64, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String, u64, String), Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        let key = (
            r.method.clone(),
            r.classifier.clone(),
            r.confidence.to_bits(),
            r.metric_name.clone(),
        );
        let entry = groups.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let g = &groups[&key];
            let (threshold_mean, threshold_std) =
                mean_std(&g.iter().map(|r| r.threshold).collect::<Vec<_>>());
            let (metric_mean, metric_std) =
                mean_std(&g.iter().map(|r| r.metric_value).collect::<Vec<_>>());
            Aggregate {
                method: key.0.clone(),
                classifier: key.1.clone(),
                confidence: f64::from_bits(key.2),
                threshold_mean,
                threshold_std,
                metric_name: key.3.clone(),
                metric_mean,
                metric_std,
                failures: g.iter().filter(|r| r.failure.is_some()).count(),
            }
        })
        .collect()
}

/// Share of PASS records at or above `threshold`.
pub fn recall_at(dataset: &ScoreDataset, threshold: f64) -> f64 {
    let pass = dataset.scores_with(Label::Pass);
    if pass.is_empty() {
        return f64::NAN;
    }
    pass.iter().filter(|&&s| s >= threshold).count() as f64 / pass.len() as f64
}

/// Classifiers fitted once per training set and reused across levels.
struct Fitted {
    /// Fit on the whole training part, for PR and ROC methods.
    full: BTreeMap<ClassifierKind, CachedFit<(CalibratedClassifier, Vec<f64>)>>,
    /// Fit on the first half and calibrated on the second, for conformal.
    conformal: BTreeMap<ClassifierKind, CachedFit<ConformalCalibrator>>,
}

/// Cached fit failures only ever become row messages, so the message is
/// what is kept.
type CachedFit<T> = std::result::Result<T, String>;

impl Fitted {
    fn new(config: &RunConfig, train: &ScoreDataset, split_seed: u64) -> Self {
        let kinds = config.classifier_kinds();
        let need_full: Vec<ClassifierKind> = kinds
            .iter()
            .copied()
            .filter(|k| {
                config
                    .methods
                    .iter()
                    .any(|m| matches!(m, Method::PrCurve(c) | Method::RocFpr(c) if c == k))
            })
            .collect();
        let need_conformal: Vec<ClassifierKind> = kinds
            .iter()
            .copied()
            .filter(|k| config.methods.contains(&Method::Conformal(*k)))
            .collect();

        let full = need_full
            .into_iter()
            .map(|k| {
                let fitted = config
                    .classifier
                    .fit(k, train)
                    .map(|m| {
                        let probs = train
                            .records
                            .iter()
                            .map(|r| m.predict_prob(r.score))
                            .collect();
                        (m, probs)
                    })
                    .map_err(|e| e.to_string());
                (k, fitted)
            })
            .collect();

        let split = if need_conformal.is_empty() {
            None
        } else {
            Some(split_holdout(
                train,
                config.calib_fraction,
                split_seed,
                true,
            ))
        };
        let conformal = need_conformal
            .into_iter()
            .map(|k| {
                let cal = match &split {
                    Some(Ok((fit, calib))) => config
                        .classifier
                        .fit(k, fit)
                        .and_then(|m| conformal::calibrate(m, calib))
                        .map_err(|e| e.to_string()),
                    Some(Err(e)) => Err(e.to_string()),
                    None => unreachable!("split exists whenever conformal methods do"),
                };
                (k, cal)
            })
            .collect();
        Self { full, conformal }
    }
}

/// Score-space cutoff where the calibrated probability reaches `p`.
fn probability_to_score(model: &CalibratedClassifier, p: f64, grid_step: f64) -> Result<f64> {
    // Probabilities are strictly inside (0, 1); the guard only matters for
    // the "reject everything" cutoff that sits just above the largest one.
    if p >= 1.0 {
        return Err(Error::UnreachableProbability(p));
    }
    invert_probability_threshold(model, p, grid_step).map(|c| c.canonical_threshold)
}

/// Metrics of a conformal cell that could not be built: with threshold 0
/// every set is treated as `{PASS, FAIL}`.
const VACUOUS: [(&str, f64); 2] = [("coverage", 1.0), ("width", 2.0)];

/// `(threshold, [(metric_name, value)])` for one method and level.
type Outcome = (f64, Vec<(&'static str, f64)>);

/// Thresholds of the methods that need no classifier.
fn plain_threshold(
    method: Method,
    level: f64,
    config: &RunConfig,
    train: &ScoreDataset,
) -> Result<f64> {
    match method {
        Method::Zscore => Ok(z_interval(&train.scores(), level, config.z_mode)?
            .lower
            .clamp(0.0, 1.0)),
        Method::HistMin => {
            Ok(histogram_local_minimum(&train.scores(), config.hist_bins)?.threshold)
        }
        Method::Kde => density::kde_threshold(train, level, config.grid_step),
        Method::EmpRecall => Ok(recall_threshold(train, level)?.threshold),
        Method::Youden => Ok(youden_threshold(&roc_curve(
            &train.scores(),
            &train.labels(),
        )?)),
        _ => unreachable!("classifier-backed method {method}"),
    }
}

/// Probability cutoff for the PR and ROC methods.
fn probability_cutoff(method: Method, level: f64, probs: &[f64], labels: &[Label]) -> Result<f64> {
    match method {
        Method::PrCurve(_) => Ok(roc::threshold_at_recall(probs, labels, level)?.threshold),
        Method::RocFpr(_) => threshold_at_fpr(&roc_curve(probs, labels)?, 1.0 - level),
        _ => unreachable!("{method} does not threshold probabilities"),
    }
}

fn threshold_for(
    method: Method,
    level: f64,
    config: &RunConfig,
    train: &ScoreDataset,
    fitted: &Fitted,
) -> std::result::Result<f64, String> {
    match method {
        Method::PrCurve(k) | Method::RocFpr(k) => {
            let (model, probs) = fitted.full[&k].as_ref()?;
            probability_cutoff(method, level, probs, &train.labels())
                .and_then(|p| probability_to_score(model, p, config.grid_step))
                .map_err(|e| e.to_string())
        }
        Method::Conformal(_) => unreachable!("conformal cells are evaluated separately"),
        _ => plain_threshold(method, level, config, train).map_err(|e| e.to_string()),
    }
}

fn evaluate_cell(
    method: Method,
    level: f64,
    config: &RunConfig,
    train: &ScoreDataset,
    test: &ScoreDataset,
    fitted: &Fitted,
) -> (Outcome, Option<String>) {
    if let Method::Conformal(k) = method {
        let cal = match &fitted.conformal[&k] {
            Ok(c) => c,
            Err(e) => return ((0.0, VACUOUS.to_vec()), Some(e.clone())),
        };
        let alpha = 1.0 - level;
        let q = conformal::conformal_quantile(cal, alpha);
        return match conformal::evaluate_with_step(cal, q, test, alpha, config.grid_step) {
            Ok(e) => {
                let metrics = vec![("coverage", e.coverage), ("width", e.avg_width)];
                match e.threshold_score {
                    Some(t) => ((t, metrics), None),
                    None => ((0.0, metrics), Some(Error::PassNeverIncluded.to_string())),
                }
            }
            Err(e) => ((0.0, VACUOUS.to_vec()), Some(e.to_string())),
        };
    }
    let (threshold, failure) = match threshold_for(method, level, config, train, fitted) {
        Ok(t) => (t, None),
        Err(e) => (0.0, Some(e)),
    };
    (
        (threshold, vec![("recall", recall_at(test, threshold))]),
        failure,
    )
}

fn rows_for_split(
    config: &RunConfig,
    fold: usize,
    train: &ScoreDataset,
    test: &ScoreDataset,
    split_seed: u64,
) -> Vec<ReportRow> {
    let fitted = Fitted::new(config, train, split_seed);
    let mut rows = Vec::new();
    for &method in &config.methods {
        for &level in &config.confidence_levels {
            let ((threshold, metrics), failure) =
                evaluate_cell(method, level, config, train, test, &fitted);
            for (name, value) in metrics {
                rows.push(ReportRow {
                    method: method.name().to_string(),
                    classifier: method
                        .classifier()
                        .map(|c| c.to_string())
                        .unwrap_or_default(),
                    confidence: level,
                    fold,
                    threshold,
                    metric_name: name.to_string(),
                    metric_value: value,
                    failure: failure.clone(),
                });
            }
        }
    }
    rows
}

/// Runs every method at every level on every fold. Folds run in parallel;
/// rows come back ordered by method, level and fold regardless.
pub fn run(config: &RunConfig, dataset: &ScoreDataset) -> Result<ThresholdReport> {
    let config = config.validated()?;
    dataset.require_both_labels()?;
    let folds = stratified_kfold(dataset, config.k_folds, config.seed)?;
    let per_fold: Vec<Vec<ReportRow>> = (0..config.k_folds)
        .into_par_iter()
        .map(|f| {
            let (train_idx, test_idx) = folds.train_test(f);
            let train = dataset.subset(&train_idx);
            let test = dataset.subset(&test_idx);
            rows_for_split(
                &config,
                f,
                &train,
                &test,
                config.seed.wrapping_add(1 + f as u64),
            )
        })
        .collect();

    // Regroup so each (method, level, metric) block lists folds in order.
    let cells = per_fold[0].len();
    let mut rows = Vec::with_capacity(cells * config.k_folds);
    for c in 0..cells {
        for fold_rows in &per_fold {
            rows.push(fold_rows[c].clone());
        }
    }
    Ok(ThresholdReport {
        score_field: dataset.metric_name.clone(),
        k_folds: config.k_folds,
        seed: config.seed,
        aggregates: aggregate_rows(&rows),
        rows,
    })
}

/// A threshold computed on a whole dataset, with the metric it achieves on
/// that same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleThreshold {
    pub method: String,
    pub classifier: String,
    pub confidence: f64,
    pub threshold: f64,
    pub metrics: BTreeMap<String, f64>,
}

/// One method at one level on the full dataset. Unlike [`run`], failures are
/// returned as errors.
pub fn single_threshold(
    method: Method,
    level: f64,
    config: &RunConfig,
    dataset: &ScoreDataset,
) -> Result<SingleThreshold> {
    let config = RunConfig {
        methods: vec![method],
        confidence_levels: vec![level],
        ..config.clone()
    }
    .validated()?;
    dataset.require_both_labels()?;
    let mut metrics = BTreeMap::new();
    let threshold = match method {
        Method::Conformal(k) => {
            let (fit, calib) = split_holdout(dataset, config.calib_fraction, config.seed, true)?;
            let cal = conformal::calibrate(config.classifier.fit(k, &fit)?, &calib)?;
            let alpha = 1.0 - level;
            let q = conformal::conformal_quantile(&cal, alpha);
            let e = conformal::evaluate_with_step(&cal, q, dataset, alpha, config.grid_step)?;
            metrics.insert("coverage".to_string(), e.coverage);
            metrics.insert("width".to_string(), e.avg_width);
            metrics.insert("quantile".to_string(), q);
            conformal::conformal_score_threshold(&cal, q, config.grid_step)?
        }
        Method::PrCurve(k) | Method::RocFpr(k) => {
            let model = config.classifier.fit(k, dataset)?;
            let probs: Vec<f64> = dataset
                .records
                .iter()
                .map(|r| model.predict_prob(r.score))
                .collect();
            let p = probability_cutoff(method, level, &probs, &dataset.labels())?;
            metrics.insert("probability".to_string(), p);
            probability_to_score(&model, p, config.grid_step)?
        }
        Method::Zscore => {
            let z = z_interval(&dataset.scores(), level, config.z_mode)?;
            metrics.insert("lower".to_string(), z.lower);
            metrics.insert("upper".to_string(), z.upper);
            z.lower.clamp(0.0, 1.0)
        }
        _ => plain_threshold(method, level, &config, dataset)?,
    };
    if !matches!(method, Method::Conformal(_)) {
        metrics.insert("recall".to_string(), recall_at(dataset, threshold));
    }
    Ok(SingleThreshold {
        method: method.name().to_string(),
        classifier: method
            .classifier()
            .map(|c| c.to_string())
            .unwrap_or_default(),
        confidence: level,
        threshold,
        metrics,
    })
}

/// One threshold per method and level computed on the whole dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullDataThreshold {
    pub method: String,
    pub classifier: String,
    pub confidence: f64,
    pub threshold: f64,
    pub failure: Option<String>,
}

pub fn full_data_thresholds(
    config: &RunConfig,
    dataset: &ScoreDataset,
) -> Result<Vec<FullDataThreshold>> {
    let config = config.validated()?;
    dataset.require_both_labels()?;
    let fitted = Fitted::new(&config, dataset, config.seed);
    let mut out = Vec::new();
    for &method in &config.methods {
        for &level in &config.confidence_levels {
            let ((threshold, _), failure) =
                evaluate_cell(method, level, &config, dataset, dataset, &fitted);
            out.push(FullDataThreshold {
                method: method.name().to_string(),
                classifier: method
                    .classifier()
                    .map(|c| c.to_string())
                    .unwrap_or_default(),
                confidence: level,
                threshold,
                failure,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::ConfigInvalid(format!(
                "unknown report format `{other}`"
            ))),
        }
    }
}

#[derive(Serialize)]
struct CsvAggregate<'a> {
    method: &'a str,
    classifier: &'a str,
    confidence: f64,
    threshold_mean: f64,
    threshold_std: f64,
    metric_name: &'a str,
    metric_mean: f64,
    metric_std: f64,
}

pub fn write_report<W: std::io::Write>(
    report: &ThresholdReport,
    format: ReportFormat,
    out: W,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for a in &report.aggregates {
                w.serialize(CsvAggregate {
                    method: &a.method,
                    classifier: &a.classifier,
                    confidence: a.confidence,
                    threshold_mean: a.threshold_mean,
                    threshold_std: a.threshold_std,
                    metric_name: &a.metric_name,
                    metric_mean: a.metric_mean,
                    metric_std: a.metric_std,
                })?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn export_report(
    report: &ThresholdReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::ConfigInvalid("report has no rows".into()));
    }
    let file = fs::File::create(path)?;
    write_report(report, format, std::io::BufWriter::new(file))
}

pub fn import_report_json(path: impl AsRef<Path>) -> Result<ThresholdReport> {
    Ok(serde_json::from_reader(std::io::BufReader::new(
        fs::File::open(path)?,
    ))?)
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ConditionalBin {
    bin_left: f64,
    bin_right: f64,
    count_pass: usize,
    count_fail: usize,
}

#[derive(Serialize)]
struct AnnotatedBin {
    bin_center: f64,
    count: usize,
    smoothed: f64,
    marker: &'static str,
}

#[derive(Serialize)]
struct CoveragePoint {
    classifier: String,
    confidence: f64,
    coverage: f64,
    width: f64,
    threshold: Option<f64>,
}

#[derive(Serialize)]
struct ConformityBin {
    bin_left: f64,
    bin_right: f64,
    count: usize,
}

#[derive(Serialize)]
struct QuantileMarker {
    confidence: f64,
    quantile: f64,
}

/// Confidence grid used for coverage and width curves.
fn coverage_levels(config: &RunConfig) -> Vec<f64> {
    let mut levels: Vec<f64> = (50..100).map(|i| i as f64 / 100.0).collect();
    levels.extend(&config.confidence_levels);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
}

/// Writes the plot series for one dataset into `out_dir` as
/// `fig<N>_<library>[_<series>].csv` and returns the paths written.
pub fn export_plot_data(
    dataset: &ScoreDataset,
    config: &RunConfig,
    out_dir: impl AsRef<Path>,
    library: &str,
) -> Result<Vec<std::path::PathBuf>> {
    let config = config.validated()?;
    dataset.require_both_labels()?;
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut path = |name: String| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };
    let bins = config.hist_bins;

    // Conditional histograms.
    let hp = density::Histogram::new(&dataset.scores_with(Label::Pass), bins);
    let hf = density::Histogram::new(&dataset.scores_with(Label::Fail), bins);
    write_csv(
        &path(format!("fig1_{library}.csv")),
        (0..bins).map(|b| ConditionalBin {
            bin_left: b as f64 / bins as f64,
            bin_right: (b + 1) as f64 / bins as f64,
            count_pass: hp.counts[b],
            count_fail: hf.counts[b],
        }),
    )?;

    // ROC and PR on raw scores.
    let (scores, labels) = (dataset.scores(), dataset.labels());
    roc::write_roc_csv(
        &roc_curve(&scores, &labels)?,
        path(format!("fig2_{library}_roc.csv")),
    )?;
    roc::write_pr_csv(
        &roc::pr_curve(&scores, &labels)?,
        path(format!("fig2_{library}_pr.csv")),
    )?;

    // Histogram with peaks and valley marked.
    let (hist, peaks, valley) = match histogram_local_minimum(&scores, bins) {
        Ok(m) => (m.histogram, Some(m.peaks), Some(m.valley_bin)),
        Err(Error::NoBimodalStructure) => (density::Histogram::new(&scores, bins), None, None),
        Err(e) => return Err(e),
    };
    write_csv(
        &path(format!("fig3_{library}.csv")),
        (0..bins).map(|b| AnnotatedBin {
            bin_center: hist.center(b),
            count: hist.counts[b],
            smoothed: hist.smoothed[b],
            marker: if peaks.is_some_and(|p| p.0 == b || p.1 == b) {
                "peak"
            } else if valley == Some(b) {
                "valley"
            } else {
                ""
            },
        }),
    )?;

    // KDE densities and posterior.
    let model = PosteriorModel::fit(dataset, None)?;
    write_csv(
        &path(format!("fig4_{library}.csv")),
        posterior_curve(&model, config.grid_step)?,
    )?;

    // Empirical recall curve.
    write_csv(
        &path(format!("fig5_{library}.csv")),
        empirical_recall_curve(dataset)?.points,
    )?;

    // Thresholds against confidence level for every configured method.
    write_csv(
        &path(format!("fig6_{library}.csv")),
        full_data_thresholds(&config, dataset)?,
    )?;

    // Conformal coverage and width against confidence on a three-way split.
    let mut kinds: Vec<ClassifierKind> = config
        .methods
        .iter()
        .filter_map(|m| match m {
            Method::Conformal(k) => Some(*k),
            _ => None,
        })
        .collect();
    if kinds.is_empty() {
        kinds.push(ClassifierKind::Gam);
    }
    let (fit, rest) = split_holdout(dataset, 0.5, config.seed, true)?;
    let (test, calib) = split_holdout(&rest, 0.5, config.seed.wrapping_add(1), true)?;
    let levels = coverage_levels(&config);
    let mut points = Vec::new();
    let mut first_cal: Option<ConformalCalibrator> = None;
    for &k in &kinds {
        let cal = conformal::calibrate(config.classifier.fit(k, &fit)?, &calib)?;
        for &level in &levels {
            let alpha = 1.0 - level;
            let q = conformal::conformal_quantile(&cal, alpha);
            let e = conformal::evaluate_with_step(&cal, q, &test, alpha, config.grid_step)?;
            points.push(CoveragePoint {
                classifier: k.to_string(),
                confidence: level,
                coverage: e.coverage,
                width: e.avg_width,
                threshold: e.threshold_score,
            });
        }
        first_cal.get_or_insert(cal);
    }
    write_csv(&path(format!("fig7_{library}.csv")), points)?;

    // Conformity score histogram with the quantile at each configured level.
    let cal = first_cal.expect("at least one classifier kind");
    let mut counts = vec![0usize; bins];
    for &s in &cal.conformity {
        counts[((s * bins as f64).floor() as usize).min(bins - 1)] += 1;
    }
    write_csv(
        &path(format!("fig8_{library}_hist.csv")),
        (0..bins).map(|b| ConformityBin {
            bin_left: b as f64 / bins as f64,
            bin_right: (b + 1) as f64 / bins as f64,
            count: counts[b],
        }),
    )?;
    write_csv(
        &path(format!("fig8_{library}_quantiles.csv")),
        config
            .confidence_levels
            .iter()
            .map(|&level| QuantileMarker {
                confidence: level,
                quantile: conformal::conformal_quantile(&cal, 1.0 - level),
            }),
    )?;
    Ok(written)
}
