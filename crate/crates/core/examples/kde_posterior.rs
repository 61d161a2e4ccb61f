//! Density-based cutoffs: histogram valley and KDE posterior floor.

use threshcal::density::{histogram_local_minimum, kde_threshold, posterior_curve, PosteriorModel};
use threshcal::synthetic::beta_mixture;

fn main() -> threshcal::Result<()> {
    let ds = beta_mixture(1500, (8.0, 2.0), 1500, (2.0, 8.0), 5);

    let valley = histogram_local_minimum(&ds.scores(), 20)?;
    println!(
        "histogram valley: peaks in bins {:?}, valley bin {}, threshold {:.3}",
        valley.peaks, valley.valley_bin, valley.threshold
    );

    let model = PosteriorModel::fit(&ds, None)?;
    println!(
        "bandwidths: PASS {:.4}, FAIL {:.4}",
        model.kde_pass.bandwidth, model.kde_fail.bandwidth
    );
    for p in posterior_curve(&model, 0.1)? {
        println!("  x = {:.1}  P(PASS|x) = {:.3}", p.x, p.posterior_pass);
    }
    for level in [0.8, 0.9, 0.95, 0.99] {
        println!(
            "posterior ≥ {level}: threshold {:.3}",
            kde_threshold(&ds, level, 1e-3)?
        );
    }
    Ok(())
}
