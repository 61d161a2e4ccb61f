//! Score → `P(PASS)` calibration models (Platt scaling and its flexible
//! relatives) and inversion of probability cutoffs back to score space.
//!
//! Three model families share one fitting routine, penalized IRLS over a
//! feature map of the single score:
//!
//! * standard logistic regression: features `[x]`, tiny ridge;
//! * polynomial logistic regression: `[x, x², …, x^d]`, each column
//!   standardized before fitting (coefficients stay in standardized space);
//! * a GAM with logit link: cubic B-splines on knots at score quantiles with a
//!   second-difference penalty on the spline coefficients.

mod bspline;
pub mod irls;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_kfold, Label, ScoreDataset};
use crate::density::quantile_sorted;
use crate::error::{Error, Result};
use crate::grid::{score_grid, suffix_start};
use irls::sigmoid;
pub use irls::LogisticProblem;

pub const DEFAULT_POLY_DEGREE: usize = 3;
pub const DEFAULT_GAM_KNOTS: usize = 10;
pub const DEFAULT_RIDGE: f64 = 1e-6;
pub const SPLINE_DEGREE: usize = 3;
/// λ candidates searched when a GAM's smoothing is chosen automatically.
pub const AUTO_LAMBDA_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
const AUTO_LAMBDA_FOLDS: usize = 3;
const AUTO_LAMBDA_SEED: u64 = 0;

/// Linear predictors are clamped so probabilities stay strictly inside (0, 1).
const ETA_LIMIT: f64 = 36.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Identity,
    Polynomial {
        degree: usize,
    },
    Spline {
        knots: Vec<f64>,
        spline_degree: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    #[serde(flatten)]
    pub kind: FeatureKind,
    /// `(mean, scale)` per feature; empty means no normalization.
    #[serde(default)]
    pub normalization: Vec<(f64, f64)>,
}

impl FeatureMap {
    pub fn identity() -> Self {
        Self {
            kind: FeatureKind::Identity,
            normalization: Vec::new(),
        }
    }

    pub fn polynomial(degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::OutOfRange(
                "polynomial degree must be at least 1".into(),
            ));
        }
        Ok(Self {
            kind: FeatureKind::Polynomial { degree },
            normalization: Vec::new(),
        })
    }

    pub fn spline(knots: Vec<f64>, spline_degree: usize) -> Result<Self> {
        let inside = knots.iter().all(|&k| k > 0.0 && k < 1.0);
        let ascending = knots.windows(2).all(|w| w[0] < w[1]);
        if !inside || !ascending || spline_degree == 0 {
            return Err(Error::OutOfRange(
                "spline knots must be strictly ascending inside (0, 1)".into(),
            ));
        }
        Ok(Self {
            kind: FeatureKind::Spline {
                knots,
                spline_degree,
            },
            normalization: Vec::new(),
        })
    }

    /// Number of non-intercept features.
    pub fn dim(&self) -> usize {
        match &self.kind {
            FeatureKind::Identity => 1,
            FeatureKind::Polynomial { degree } => *degree,
            // The first basis function is dropped; the intercept spans it.
            FeatureKind::Spline {
                knots,
                spline_degree,
            } => knots.len() + spline_degree,
        }
    }

    fn raw(&self, x: f64) -> Vec<f64> {
        match &self.kind {
            FeatureKind::Identity => vec![x],
            FeatureKind::Polynomial { degree } => (1..=*degree as i32).map(|d| x.powi(d)).collect(),
            FeatureKind::Spline {
                knots,
                spline_degree,
            } => bspline::basis(knots, *spline_degree, x)[1..].to_vec(),
        }
    }

    pub fn features(&self, x: f64) -> Vec<f64> {
        let mut f = self.raw(x);
        for (v, &(mean, scale)) in f.iter_mut().zip(&self.normalization) {
            *v = (*v - mean) / scale;
        }
        f
    }

    /// Polynomial maps get per-column standardization from `scores`.
    fn normalized_for(mut self, scores: &[f64]) -> Self {
        if let FeatureKind::Polynomial { .. } = self.kind {
            let n = scores.len() as f64;
            let rows: Vec<Vec<f64>> = scores.iter().map(|&x| self.raw(x)).collect();
            self.normalization = (0..self.dim())
                .map(|j| {
                    let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                    let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
                    (mean, scale)
                })
                .collect();
        }
        self
    }

    /// Penalty on `[intercept, features…]`: ridge for polynomial and
    /// identity maps, second differences of spline coefficients for splines.
    fn penalty(&self) -> DMatrix<f64> {
        let p = self.dim() + 1;
        match &self.kind {
            FeatureKind::Spline {
                knots,
                spline_degree,
            } => {
                let d = bspline::difference_matrix(knots, *spline_degree);
                let mut pen = DMatrix::zeros(p, p);
                // Column 0 of `d` belongs to the dropped basis function,
                // whose coefficient is pinned to the intercept.
                for row in &d {
                    for a in 1..p {
                        for b in 1..p {
                            pen[(a, b)] += row[a] * row[b];
                        }
                    }
                }
                pen
            }
            _ => {
                let mut pen = DMatrix::identity(p, p);
                pen[(0, 0)] = 0.0;
                pen
            }
        }
    }

    fn design(&self, scores: &[f64]) -> DMatrix<f64> {
        let p = self.dim() + 1;
        let mut x = DMatrix::zeros(scores.len(), p);
        for (i, &s) in scores.iter().enumerate() {
            x[(i, 0)] = 1.0;
            for (j, v) in self.features(s).into_iter().enumerate() {
                x[(i, j + 1)] = v;
            }
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub deviance: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedClassifier {
    #[serde(flatten)]
    pub feature_map: FeatureMap,
    /// `β₀, β₁, …` in the (possibly standardized) feature space.
    pub coefficients: Vec<f64>,
    #[serde(rename = "lambda")]
    pub penalty_lambda: f64,
    pub diagnostics: FitDiagnostics,
}

impl CalibratedClassifier {
    /// Unfitted model from explicit coefficients; mostly useful in tests.
    pub fn from_coefficients(feature_map: FeatureMap, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), feature_map.dim() + 1);
        Self {
            feature_map,
            coefficients,
            penalty_lambda: 0.0,
            diagnostics: FitDiagnostics {
                iterations: 0,
                deviance: f64::NAN,
                converged: true,
            },
        }
    }

    pub fn linear_predictor(&self, score: f64) -> f64 {
        self.coefficients[0]
            + self
                .feature_map
                .features(score)
                .iter()
                .zip(&self.coefficients[1..])
                .map(|(f, b)| f * b)
                .sum::<f64>()
    }

    /// `P(PASS | score)`, strictly inside (0, 1).
    pub fn predict_prob(&self, score: f64) -> f64 {
        sigmoid(self.linear_predictor(score).clamp(-ETA_LIMIT, ETA_LIMIT))
    }

    /// Probability assigned to `label`.
    pub fn prob_of(&self, score: f64, label: Label) -> f64 {
        let p = self.predict_prob(score);
        match label {
            Label::Pass => p,
            Label::Fail => 1.0 - p,
        }
    }

    /// Mean held-out deviance contribution is `deviance_on(ds) / ds.len()`.
    pub fn deviance_on(&self, dataset: &ScoreDataset) -> f64 {
        dataset
            .records
            .iter()
            .map(|r| {
                let eta = self.linear_predictor(r.score);
                let y = if r.label.is_pass() { 1.0 } else { 0.0 };
                2.0 * (irls::softplus(eta) - y * eta)
            })
            .sum()
    }
}

pub fn predict_prob(model: &CalibratedClassifier, score: f64) -> f64 {
    model.predict_prob(score)
}

fn response(dataset: &ScoreDataset) -> DVector<f64> {
    DVector::from_iterator(
        dataset.len(),
        dataset
            .records
            .iter()
            .map(|r| if r.label.is_pass() { 1.0 } else { 0.0 }),
    )
}

impl LogisticProblem {
    /// Problem for `dataset` under a feature map whose normalization is
    /// already fixed.
    pub fn from_dataset(dataset: &ScoreDataset, feature_map: &FeatureMap, lambda: f64) -> Self {
        Self {
            design: feature_map.design(&dataset.scores()),
            response: response(dataset),
            penalty: feature_map.penalty(),
            lambda,
        }
    }
}

/// Penalized maximum likelihood fit of `P(PASS | score)`.
pub fn fit_logistic(
    dataset: &ScoreDataset,
    feature_map: FeatureMap,
    penalty_lambda: f64,
) -> Result<CalibratedClassifier> {
    dataset.require_both_labels()?;
    if !(penalty_lambda >= 0.0 && penalty_lambda.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "penalty must be non-negative, got {penalty_lambda}"
        )));
    }
    let feature_map = feature_map.normalized_for(&dataset.scores());
    let problem = LogisticProblem::from_dataset(dataset, &feature_map, penalty_lambda);
    let sol = problem.solve()?;
    Ok(CalibratedClassifier {
        feature_map,
        coefficients: sol.coefficients.iter().copied().collect(),
        penalty_lambda,
        diagnostics: FitDiagnostics {
            iterations: sol.iterations,
            deviance: sol.deviance,
            converged: true,
        },
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GamLambda {
    #[default]
    Auto,
    #[serde(untagged)]
    Fixed(f64),
}

impl FromStr for GamLambda {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GamLambda::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| *v >= 0.0)
            .map(GamLambda::Fixed)
            .ok_or_else(|| Error::ConfigInvalid(format!("bad GAM lambda `{s}`")))
    }
}

/// Interior knots at the `j/(K+1)` score quantiles, deduplicated and kept
/// strictly inside (0, 1). Heavy ties at the range ends can leave fewer than
/// `knot_count` knots.
pub fn quantile_knots(scores: &[f64], knot_count: usize) -> Vec<f64> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut knots: Vec<f64> = Vec::new();
    for j in 1..=knot_count {
        let q = quantile_sorted(&sorted, j as f64 / (knot_count + 1) as f64);
        if q > 1e-6 && q < 1.0 - 1e-6 && knots.last().is_none_or(|&k| q - k > 1e-6) {
            knots.push(q);
        }
    }
    knots
}

/// Cubic P-spline GAM with logit link.
pub fn fit_gam(
    dataset: &ScoreDataset,
    knot_count: usize,
    lambda: GamLambda,
) -> Result<CalibratedClassifier> {
    dataset.require_both_labels()?;
    let knots = quantile_knots(&dataset.scores(), knot_count);
    let map = FeatureMap::spline(knots, SPLINE_DEGREE)?;
    if dataset.len() <= map.dim() + 1 {
        return Err(Error::TooFewSamples {
            needed: map.dim() + 2,
            got: dataset.len(),
        });
    }
    let lambda = match lambda {
        GamLambda::Fixed(l) => l,
        GamLambda::Auto => select_lambda(dataset, &map)?,
    };
    fit_logistic(dataset, map, lambda)
}

/// λ from [`AUTO_LAMBDA_GRID`] minimizing 3-fold held-out deviance; ties go
/// to the smoother fit.
fn select_lambda(dataset: &ScoreDataset, map: &FeatureMap) -> Result<f64> {
    let folds = match stratified_kfold(dataset, AUTO_LAMBDA_FOLDS, AUTO_LAMBDA_SEED) {
        Ok(f) => f,
        // Too small to cross-validate: fall back to moderate smoothing.
        Err(Error::TooFewPerClass { .. }) => return Ok(1.0),
        Err(e) => return Err(e),
    };
    let splits: Vec<(ScoreDataset, ScoreDataset)> = (0..AUTO_LAMBDA_FOLDS)
        .map(|f| {
            let (train, test) = folds.train_test(f);
            (dataset.subset(&train), dataset.subset(&test))
        })
        .collect();
    let mut best = (f64::INFINITY, AUTO_LAMBDA_GRID[0]);
    for &lam in &AUTO_LAMBDA_GRID {
        let total: f64 = splits
            .iter()
            .map(
                |(train, test)| match fit_logistic(train, map.clone(), lam) {
                    Ok(m) => m.deviance_on(test),
                    Err(_) => f64::INFINITY,
                },
            )
            .sum();
        if total <= best.0 {
            best = (total, lam);
        }
    }
    if best.0.is_finite() {
        Ok(best.1)
    } else {
        Err(Error::NotConverged(irls::MAX_ITERATIONS))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Standard,
    Polynomial,
    Gam,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Gam,
        ClassifierKind::Polynomial,
        ClassifierKind::Standard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Standard => "standard",
            ClassifierKind::Polynomial => "polynomial",
            ClassifierKind::Gam => "gam",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" | "lr" | "logistic" => Ok(ClassifierKind::Standard),
            "polynomial" | "poly" => Ok(ClassifierKind::Polynomial),
            "gam" => Ok(ClassifierKind::Gam),
            other => Err(Error::ConfigInvalid(format!(
                "unknown classifier `{other}`"
            ))),
        }
    }
}

/// Hyper-parameters shared by every classifier the harness fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub poly_degree: usize,
    pub gam_knots: usize,
    pub gam_lambda: GamLambda,
    pub lr_lambda: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            poly_degree: DEFAULT_POLY_DEGREE,
            gam_knots: DEFAULT_GAM_KNOTS,
            gam_lambda: GamLambda::Auto,
            lr_lambda: DEFAULT_RIDGE,
        }
    }
}

impl ClassifierSettings {
    pub fn fit(
        &self,
        kind: ClassifierKind,
        dataset: &ScoreDataset,
    ) -> Result<CalibratedClassifier> {
        match kind {
            ClassifierKind::Standard => {
                fit_logistic(dataset, FeatureMap::identity(), self.lr_lambda)
            }
            ClassifierKind::Polynomial => fit_logistic(
                dataset,
                FeatureMap::polynomial(self.poly_degree)?,
                self.lr_lambda,
            ),
            ClassifierKind::Gam => fit_gam(dataset, self.gam_knots, self.gam_lambda),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.poly_degree) {
            return Err(Error::ConfigInvalid(format!(
                "polynomial degree must be 1..=6, got {}",
                self.poly_degree
            )));
        }
        if self.lr_lambda < 0.0 || !self.lr_lambda.is_finite() {
            return Err(Error::ConfigInvalid(
                "lr_lambda must be non-negative".into(),
            ));
        }
        if let GamLambda::Fixed(l) = self.gam_lambda {
            if l < 0.0 || !l.is_finite() {
                return Err(Error::ConfigInvalid(
                    "gam_lambda must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingSet {
    pub target_prob: f64,
    /// Scores where `P(PASS)` crosses the target, ascending.
    pub crossings: Vec<f64>,
    /// Start of the region where `P(PASS) ≥ target` holds up to score 1.
    pub canonical_threshold: f64,
}

const BISECTION_TOLERANCE: f64 = 1e-6;

/// Bisects `f(x) = p(x) - target` on `[lo, hi]` where the sign differs; the
/// returned point is on the `p ≥ target` side.
fn bisect(model: &CalibratedClassifier, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let above_lo = model.predict_prob(lo) >= target;
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if (model.predict_prob(mid) >= target) == above_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if above_lo {
        lo
    } else {
        hi
    }
}

/// Every crossing of `target` by `P(PASS)` on the `[0, 1]` grid, refined by
/// bisection, plus the canonical (suffix-rule) threshold.
pub fn invert_probability_threshold(
    model: &CalibratedClassifier,
    target_prob: f64,
    grid_step: f64,
) -> Result<CrossingSet> {
    if !(target_prob > 0.0 && target_prob < 1.0) {
        return Err(Error::OutOfRange(format!(
            "target probability must be in (0, 1), got {target_prob}"
        )));
    }
    let grid = score_grid(grid_step)?;
    let above: Vec<bool> = grid
        .iter()
        .map(|&x| model.predict_prob(x) >= target_prob)
        .collect();
    let start = suffix_start(&above).ok_or(Error::UnreachableProbability(target_prob))?;

    let mut crossings = Vec::new();
    let mut canonical = 0.0;
    for i in 1..grid.len() {
        if above[i] != above[i - 1] {
            let x = bisect(model, target_prob, grid[i - 1], grid[i]);
            if i == start {
                canonical = x;
            }
            crossings.push(x);
        }
    }
    Ok(CrossingSet {
        target_prob,
        crossings,
        canonical_threshold: canonical,
    })
}
