//! ROC and PR curves over raw scores: AUC, FPR budgets, Youden's J and a
//! recall target, plus CSV export of both curves.

use threshcal::roc::{
    pr_curve, roc_curve, threshold_at_fpr, threshold_at_recall, write_pr_csv, write_roc_csv,
    youden_threshold,
};
use threshcal::synthetic::beta_mixture;

fn main() -> threshcal::Result<()> {
    let ds = beta_mixture(800, (8.0, 2.0), 800, (2.0, 6.0), 4);
    let (v, l) = (ds.scores(), ds.labels());
    let roc = roc_curve(&v, &l)?;
    let pr = pr_curve(&v, &l)?;
    println!(
        "AUC {:.4}, average precision {:.4}",
        roc.auc, pr.average_precision
    );
    for fpr in [0.01, 0.05, 0.1] {
        println!("FPR ≤ {fpr}: threshold {:.4}", threshold_at_fpr(&roc, fpr)?);
    }
    println!("Youden: threshold {:.4}", youden_threshold(&roc));
    let s = threshold_at_recall(&v, &l, 0.95)?;
    println!(
        "recall ≥ 0.95: threshold {:.4}, precision {:.4}",
        s.threshold, s.precision
    );

    let dir = std::env::temp_dir();
    write_roc_csv(&roc, dir.join("threshcal_roc.csv"))?;
    write_pr_csv(&pr, dir.join("threshcal_pr.csv"))?;
    println!("curves written to {}", dir.display());
    Ok(())
}
