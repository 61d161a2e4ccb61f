//! Largest cutoff that keeps a target share of PASS records.

use threshcal::recall_curve::{empirical_recall_curve, recall_threshold_on_curve};
use threshcal::synthetic::beta_mixture;

fn main() -> threshcal::Result<()> {
    let ds = beta_mixture(1000, (8.0, 2.0), 1000, (2.0, 6.0), 2);
    let curve = empirical_recall_curve(&ds)?;
    println!("{} candidate thresholds", curve.points.len());
    for target in [0.8, 0.9, 0.95, 0.975, 0.99] {
        let t = recall_threshold_on_curve(&curve, target)?;
        println!(
            "recall ≥ {target}: threshold {:.4} (recall {:.4})",
            t.threshold, t.recall
        );
    }
    Ok(())
}
