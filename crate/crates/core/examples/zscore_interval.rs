//! Normal-theory intervals, from raw scores and from summary statistics.

use threshcal::synthetic::beta_mixture;
use threshcal::zscore::{z_interval, z_interval_from_summary, ZMode};

fn main() -> threshcal::Result<()> {
    let ds = beta_mixture(400, (8.0, 2.0), 400, (2.0, 8.0), 3);
    for mode in [ZMode::Population, ZMode::MeanCi] {
        let z = z_interval(&ds.scores(), 0.95, mode)?;
        println!(
            "{mode:?}: mean {:.3} sd {:.3} -> [{:.3}, {:.3}]",
            z.mean, z.std_dev, z.lower, z.upper
        );
    }
    // Bimodal scores make the population interval spill past [0, 1].
    let z = z_interval_from_summary(0.44, 0.40, 1000, 0.95, ZMode::Population)?;
    println!(
        "mean 0.44, sd 0.40: [{:.3}, {:.3}], clipped [{:.3}, {:.3}]",
        z.lower,
        z.upper,
        z.clipped().lower,
        z.clipped().upper
    );
    Ok(())
}
