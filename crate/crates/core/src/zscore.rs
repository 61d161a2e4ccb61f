//! Normal-theory intervals around the mean score.
//!
//! Two widths are supported. [`ZMode::Population`] returns `mean ± z·σ`, the
//! band expected to hold `confidence` of individual scores; this is the
//! default since a lower bound such as `0.44 - 1.96·0.40 ≈ -0.35` only arises
//! without the `1/√n` factor. [`ZMode::MeanCi`] returns the textbook
//! confidence interval for the mean, `mean ± z·σ/√n`.
//!
//! σ is the sample standard deviation (`n - 1` denominator). Bounds are not
//! clipped to `[0, 1]`; use [`ZInterval::clipped`] when a usable cutoff is
//! needed downstream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;
use crate::stats_tests::mean_var;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ZMode {
    #[default]
    Population,
    MeanCi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZInterval {
    pub mean: f64,
    pub std_dev: f64,
    pub n: usize,
    pub confidence: f64,
    pub lower: f64,
    pub upper: f64,
    pub mode: ZMode,
}

impl ZInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn clipped(&self) -> ZInterval {
        ZInterval {
            lower: self.lower.clamp(0.0, 1.0),
            upper: self.upper.clamp(0.0, 1.0),
            ..*self
        }
    }
}

/// Two-sided critical value: `z` with `Φ(z) = 1 - (1 - confidence)/2`.
pub fn z_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::OutOfRange(format!(
            "confidence must be in (0, 1), got {confidence}"
        )));
    }
    Ok(normal::inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

pub fn z_interval(scores: &[f64], confidence: f64, mode: ZMode) -> Result<ZInterval> {
    if scores.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: scores.len(),
        });
    }
    let (mean, var) = mean_var(scores);
    z_interval_from_summary(mean, var.sqrt(), scores.len(), confidence, mode)
}

/// Same interval computed from precomputed summary statistics.
pub fn z_interval_from_summary(
    mean: f64,
    std_dev: f64,
    n: usize,
    confidence: f64,
    mode: ZMode,
) -> Result<ZInterval> {
    let z = z_quantile(confidence)?;
    let half = match mode {
        ZMode::Population => z * std_dev,
        ZMode::MeanCi => z * std_dev / (n as f64).sqrt(),
    };
    Ok(ZInterval {
        mean,
        std_dev,
        n,
        confidence,
        lower: mean - half,
        upper: mean + half,
        mode,
    })
}
