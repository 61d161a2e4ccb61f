//! Split conformal prediction: coverage, set width and the score from which
//! PASS is always in the prediction set.

use threshcal::classifiers::{ClassifierKind, ClassifierSettings};
use threshcal::conformal::{calibrate, conformal_quantile, evaluate, CoverageRow};
use threshcal::synthetic::exchangeable_beta;

fn main() -> threshcal::Result<()> {
    let fit = exchangeable_beta(2000, 0.5, (8.0, 2.0), (2.0, 8.0), 1);
    let calib = exchangeable_beta(2000, 0.5, (8.0, 2.0), (2.0, 8.0), 2);
    let test = exchangeable_beta(2000, 0.5, (8.0, 2.0), (2.0, 8.0), 3);

    let model = ClassifierSettings::default().fit(ClassifierKind::Gam, &fit)?;
    let cal = calibrate(model, &calib)?;
    println!(
        "{:>10} {:>10} {:>9} {:>7} {:>9}",
        "confidence", "Q", "coverage", "width", "threshold"
    );
    for alpha in [0.2, 0.1, 0.05, 0.025, 0.01] {
        let q = conformal_quantile(&cal, alpha);
        let row = CoverageRow::new("synthetic", &evaluate(&cal, q, &test, alpha)?);
        println!(
            "{:>10} {:>10.4} {:>9.4} {:>7.4} {:>9}",
            row.confidence,
            q,
            row.coverage,
            row.width,
            row.threshold.map_or("none".into(), |t| format!("{t:.3}"))
        );
    }
    Ok(())
}
