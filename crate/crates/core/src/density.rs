//! Density-based thresholds.
//!
//! Two approaches live here:
//!
//! * [`histogram_local_min_threshold`] finds the valley between the two main
//!   modes of the score histogram. It has no notion of a confidence level.
//! * [`kde_threshold`] fits one Gaussian KDE per label, combines them with the
//!   empirical class priors through Bayes' rule, and returns the lowest score
//!   above which `P(PASS | x)` never drops below the requested level.
//!
//! The KDE is not boundary-corrected, so density leaks past `0` and `1` when
//! scores pile up at the ends of the range.

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, ScoreDataset};
use crate::error::{Error, Result};
use crate::grid::{score_grid, suffix_start};
use crate::normal::INV_SQRT_2PI;
use crate::stats_tests::mean_var;

/// Bandwidth used when the sample has no spread at all.
pub const FALLBACK_BANDWIDTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Kernel {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    pub sample: Vec<f64>,
    pub bandwidth: f64,
    pub kernel: Kernel,
}

impl KdeModel {
    pub fn pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self
            .sample
            .iter()
            .map(|&xi| {
                let u = (x - xi) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        INV_SQRT_2PI * sum / (self.sample.len() as f64 * h)
    }

    /// `ln pdf(x)` via log-sum-exp; finite even where `pdf` underflows.
    pub fn log_pdf(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let max_e = self
            .sample
            .iter()
            .map(|&xi| {
                let u = (x - xi) / h;
                -0.5 * u * u
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self
            .sample
            .iter()
            .map(|&xi| {
                let u = (x - xi) / h;
                (-0.5 * u * u - max_e).exp()
            })
            .sum();
        max_e + sum.ln() + INV_SQRT_2PI.ln() - (self.sample.len() as f64 * h).ln()
    }
}

/// Linear-interpolation quantile of an ascending slice.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9 · min(σ, IQR/1.34) · n^(-1/5)`.
///
/// When one of the two spread measures is zero (an IQR of zero is common for
/// scores piled up at 0 and 1) the other one is used; when both are zero the
/// bandwidth falls back to [`FALLBACK_BANDWIDTH`].
pub fn silverman_bandwidth(scores: &[f64]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: scores.len(),
        });
    }
    let n = scores.len() as f64;
    let sd = mean_var(scores).1.sqrt();
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => return Ok(FALLBACK_BANDWIDTH),
    };
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Fits a Gaussian KDE; Silverman's rule picks the bandwidth when none is given.
pub fn fit_kde(scores: &[f64], bandwidth: Option<f64>) -> Result<KdeModel> {
    let bandwidth = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => {
            return Err(Error::OutOfRange(format!(
                "bandwidth must be positive, got {h}"
            )))
        }
        None => silverman_bandwidth(scores)?,
    };
    if scores.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(KdeModel {
        sample: scores.to_vec(),
        bandwidth,
        kernel: Kernel::Gaussian,
    })
}

pub fn kde_pdf(model: &KdeModel, x: f64) -> f64 {
    model.pdf(x)
}

/// Equal-width histogram on `[0, 1]` with its 3-bin moving average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<usize>,
    pub smoothed: Vec<f64>,
}

impl Histogram {
    pub fn new(scores: &[f64], bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        for &s in scores {
            let b = ((s * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
            counts[b] += 1;
        }
        let smoothed = (0..bins)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(bins - 1);
                (lo..=hi).map(|j| counts[j] as f64).sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        Self { counts, smoothed }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn center(&self, bin: usize) -> f64 {
        (bin as f64 + 0.5) / self.bins() as f64
    }
}

/// Peaks whose prominence is below this share of the tallest smoothed bin are
/// treated as noise.
pub const MIN_PEAK_PROMINENCE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub histogram: Histogram,
    /// Bin indices of the two chosen peaks, ascending.
    pub peaks: (usize, usize),
    pub valley_bin: usize,
    pub threshold: f64,
}

/// Runs of equal smoothed values as `(value, first, last)`.
fn plateaus(values: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut runs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.0 == v => run.2 = i,
            _ => runs.push((v, i, i)),
        }
    }
    runs
}

fn prominent_peaks(values: &[f64]) -> Vec<(f64, usize, usize)> {
    let runs = plateaus(values);
    let top = values.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    for (r, &(v, first, last)) in runs.iter().enumerate() {
        let left_lower = r == 0 || runs[r - 1].0 < v;
        let right_lower = r + 1 == runs.len() || runs[r + 1].0 < v;
        if !(left_lower && right_lower) || v <= 0.0 {
            continue;
        }
        // Lowest point on each side before reaching higher ground.
        let mut left_min = v;
        for run in runs[..r].iter().rev() {
            if run.0 > v {
                break;
            }
            left_min = left_min.min(run.0);
        }
        let mut right_min = v;
        for run in &runs[r + 1..] {
            if run.0 > v {
                break;
            }
            right_min = right_min.min(run.0);
        }
        let base = if r == 0 {
            right_min
        } else if r + 1 == runs.len() {
            left_min
        } else {
            left_min.max(right_min)
        };
        if v - base >= MIN_PEAK_PROMINENCE * top {
            peaks.push((v, first, last));
        }
    }
    peaks
}

/// Full local-minimum analysis; see [`histogram_local_min_threshold`].
pub fn histogram_local_minimum(scores: &[f64], bins: usize) -> Result<LocalMinimum> {
    if bins < 3 {
        return Err(Error::OutOfRange(format!(
            "need at least 3 bins, got {bins}"
        )));
    }
    let histogram = Histogram::new(scores, bins);
    let mut peaks = prominent_peaks(&histogram.smoothed);
    if peaks.len() < 2 {
        return Err(Error::NoBimodalStructure);
    }
    // Two highest, ties toward lower bins.
    peaks.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let (mut p1, mut p2) = (peaks[0], peaks[1]);
    if p1.1 > p2.1 {
        std::mem::swap(&mut p1, &mut p2);
    }
    let (from, to) = (p1.2 + 1, p2.1);
    if from >= to {
        return Err(Error::NoBimodalStructure);
    }
    let valley = histogram.smoothed[from..to]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    // Middle of the tied minimal bins, so a flat empty gap is split evenly.
    let tied: Vec<usize> = (from..to)
        .filter(|&i| histogram.smoothed[i] == valley)
        .collect();
    let valley_bin = tied[(tied.len() - 1) / 2];
    Ok(LocalMinimum {
        threshold: histogram.center(valley_bin),
        peaks: (p1.1, p2.1),
        valley_bin,
        histogram,
    })
}

/// Center of the lowest smoothed bin between the two highest prominent peaks
/// of an equal-width histogram on `[0, 1]`.
pub fn histogram_local_min_threshold(scores: &[f64], bins: usize) -> Result<f64> {
    histogram_local_minimum(scores, bins).map(|m| m.threshold)
}

/// Class-conditional KDEs with a PASS prior, combined through Bayes' rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorModel {
    pub kde_pass: KdeModel,
    pub kde_fail: KdeModel,
    pub prior_pass: f64,
}

impl PosteriorModel {
    /// Per-label KDEs (automatic bandwidth) and empirical priors.
    pub fn fit(dataset: &ScoreDataset, bandwidth: Option<f64>) -> Result<Self> {
        dataset.require_both_labels()?;
        let pass = dataset.scores_with(Label::Pass);
        let fail = dataset.scores_with(Label::Fail);
        let prior_pass = pass.len() as f64 / dataset.len() as f64;
        Ok(Self {
            kde_pass: fit_kde(&pass, bandwidth)
                .or_else(|_| fit_kde(&pass, Some(FALLBACK_BANDWIDTH)))?,
            kde_fail: fit_kde(&fail, bandwidth)
                .or_else(|_| fit_kde(&fail, Some(FALLBACK_BANDWIDTH)))?,
            prior_pass,
        })
    }

    pub fn prior_fail(&self) -> f64 {
        1.0 - self.prior_pass
    }

    /// `(P(PASS | x), P(FAIL | x))`.
    pub fn posteriors(&self, x: f64) -> Result<(f64, f64)> {
        posterior_from_log_likelihoods(
            self.kde_pass.log_pdf(x),
            self.kde_fail.log_pdf(x),
            self.prior_pass,
        )
        .ok_or(Error::ZeroEvidence(x))
    }
}

/// Bayes' rule on log-likelihoods. `None` when the evidence is zero or
/// undefined.
pub fn posterior_from_log_likelihoods(
    log_lik_pass: f64,
    log_lik_fail: f64,
    prior_pass: f64,
) -> Option<(f64, f64)> {
    let a = log_lik_pass + prior_pass.ln();
    let b = log_lik_fail + (1.0 - prior_pass).ln();
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY || a.is_nan() || b.is_nan() {
        return None;
    }
    let m = a.max(b);
    let (ea, eb) = ((a - m).exp(), (b - m).exp());
    let z = ea + eb;
    Some((ea / z, eb / z))
}

/// `P(PASS | x)`.
pub fn bayes_posterior(model: &PosteriorModel, x: f64) -> Result<f64> {
    model.posteriors(x).map(|p| p.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub x: f64,
    pub pdf_fail: f64,
    pub pdf_pass: f64,
    pub posterior_pass: f64,
}

/// Densities and PASS posterior on the `[0, 1]` grid.
pub fn posterior_curve(model: &PosteriorModel, grid_step: f64) -> Result<Vec<DensityPoint>> {
    score_grid(grid_step)?
        .into_iter()
        .map(|x| {
            Ok(DensityPoint {
                x,
                pdf_fail: model.kde_fail.pdf(x),
                pdf_pass: model.kde_pass.pdf(x),
                posterior_pass: bayes_posterior(model, x)?,
            })
        })
        .collect()
}

/// Suffix rule on a posterior curve.
pub fn threshold_from_curve(curve: &[DensityPoint], confidence: f64) -> Result<f64> {
    let ok: Vec<bool> = curve
        .iter()
        .map(|p| p.posterior_pass >= confidence)
        .collect();
    suffix_start(&ok)
        .map(|i| curve[i].x)
        .ok_or(Error::UnreachableConfidence(confidence))
}

/// Smallest grid score `x*` such that `P(PASS | x) ≥ confidence` at every grid
/// point `x ≥ x*`.
pub fn kde_threshold(dataset: &ScoreDataset, confidence: f64, grid_step: f64) -> Result<f64> {
    let model = PosteriorModel::fit(dataset, None)?;
    let curve = posterior_curve(&model, grid_step)?;
    threshold_from_curve(&curve, confidence)
}
