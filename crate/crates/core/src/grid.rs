//! Evenly spaced score grids on `[0, 1]` and the suffix rule used to read a
//! single cutoff off a possibly non-monotone acceptance region.

use crate::error::{Error, Result};

pub const DEFAULT_GRID_STEP: f64 = 1e-3;

/// `0, step, 2·step, …, 1`; the last point is exactly `1`.
pub fn score_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::OutOfRange(format!(
            "grid step must be in (0, 1], got {step}"
        )));
    }
    let n = (1.0 / step).round().max(1.0) as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

/// Index of the first element of the longest all-`true` suffix, or `None`
/// when the last element is `false`.
pub fn suffix_start(accept: &[bool]) -> Option<usize> {
    if !*accept.last()? {
        return None;
    }
    let run = accept.iter().rev().take_while(|&&a| a).count();
    Some(accept.len() - run)
}
