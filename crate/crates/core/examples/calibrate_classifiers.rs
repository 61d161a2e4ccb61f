//! Fit the three calibrators on a non-monotone truth and compare held-out
//! deviance; then map a probability target back to score space.

use threshcal::classifiers::{invert_probability_threshold, ClassifierKind, ClassifierSettings};
use threshcal::dataset::split_holdout;
use threshcal::synthetic::logistic_truth;

fn main() -> threshcal::Result<()> {
    let ds = logistic_truth(
        4000,
        |x| 8.0 * (x - 0.45) + 3.0 * (4.0 * std::f64::consts::PI * x).sin(),
        1,
    );
    let (train, test) = split_holdout(&ds, 0.5, 0, true)?;
    let settings = ClassifierSettings::default();
    for kind in ClassifierKind::ALL {
        let m = settings.fit(kind, &train)?;
        println!(
            "{kind:<10} λ = {:<8} held-out deviance / n = {:.4}",
            m.penalty_lambda,
            m.deviance_on(&test) / test.len() as f64
        );
        let set = invert_probability_threshold(&m, 0.7, 1e-3);
        match set {
            Ok(s) => println!(
                "           P(PASS) = 0.7 at {:.3?}, suffix threshold {:.3}",
                s.crossings, s.canonical_threshold
            ),
            Err(e) => println!("           P(PASS) = 0.7: {e}"),
        }
    }
    Ok(())
}
