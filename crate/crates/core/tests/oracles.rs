//! Method outputs checked against independent reference computations.

mod common;

use threshcal::classifiers::{
    fit_logistic, invert_probability_threshold, CalibratedClassifier, ClassifierKind,
    ClassifierSettings, FeatureMap, GamLambda,
};
use threshcal::conformal::{
    calibrate, conformal_quantile, conformal_score_threshold, prediction_set,
};
use threshcal::density::{histogram_local_min_threshold, kde_threshold};
use threshcal::roc::{
    pr_curve, roc_curve, threshold_at_fpr, threshold_at_recall, youden_threshold,
};
use threshcal::stats_tests::{independent_t_test, mann_whitney_u};
use threshcal::synthetic::{beta_mixture, exchangeable_beta, logistic_truth};
use threshcal::zscore::{z_interval, z_quantile, ZMode};
use threshcal::{Error, Label};

use common::*;

#[test]
fn z_quantile_against_series_bisection() {
    for c in [0.8, 0.9, 0.95, 0.975, 0.99] {
        let z = z_quantile(c).unwrap();
        assert!((z - z_by_bisection(c)).abs() < 1e-9, "{c}: {z}");
    }
    assert!((z_quantile(0.95).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
}

#[test]
fn z_interval_matches_hand_computation() {
    let scores = [0.1, 0.4, 0.5, 0.9, 1.0];
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let z = z_by_bisection(0.9);
    let pop = z_interval(&scores, 0.9, ZMode::Population).unwrap();
    assert!((pop.lower - (mean - z * sd)).abs() < 1e-9);
    assert!((pop.upper - (mean + z * sd)).abs() < 1e-9);
    let ci = z_interval(&scores, 0.9, ZMode::MeanCi).unwrap();
    assert!((ci.width() - 2.0 * z * sd / n.sqrt()).abs() < 1e-9);
}

#[test]
fn welch_t_statistic_by_hand() {
    let a = [0.9, 0.8, 0.85, 0.95, 0.7, 0.88];
    let b = [0.2, 0.4, 0.35, 0.1, 0.5];
    let mv = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        (
            m,
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0),
            n,
        )
    };
    let ((ma, va, na), (mb, vb, nb)) = (mv(&a), mv(&b));
    let t = (ma - mb) / (va / na + vb / nb).sqrt();
    let r = independent_t_test(&a, &b, false).unwrap();
    assert!((r.statistic - t).abs() < 1e-12);
    let (qa, qb) = (va / na, vb / nb);
    let df = (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    let p = t_two_sided_by_quadrature(t, df);
    assert!((r.p_value - p).abs() < 1e-8, "{} vs {p}", r.p_value);
}

#[test]
fn null_tests_are_calibrated() {
    // Same distribution on both sides: p > 0.05 in most draws.
    let mut t_ok = 0;
    let mut u_ok = 0;
    for seed in 0..100 {
        let ds = exchangeable_beta(400, 0.5, (2.0, 2.0), (2.0, 2.0), seed);
        let (a, b) = (ds.scores_with(Label::Pass), ds.scores_with(Label::Fail));
        t_ok += (independent_t_test(&a, &b, false).unwrap().p_value > 0.05) as usize;
        u_ok += (mann_whitney_u(&a, &b).unwrap().p_value > 0.05) as usize;
    }
    assert!(t_ok >= 90, "{t_ok}");
    assert!(u_ok >= 90, "{u_ok}");
}

#[test]
fn pr_curve_against_brute_force() {
    let mut rng = rng(21);
    for _ in 0..50 {
        let (v, l) = random_labeled(&mut rng, 80);
        let c = pr_curve(&v, &l).unwrap();
        let thresholds: Vec<f64> = unique_sorted(&v).into_iter().rev().collect();
        assert_eq!(c.points.len(), thresholds.len());
        for (p, t) in c.points.iter().zip(&thresholds) {
            assert_eq!(p.threshold, *t);
            assert!((p.recall - recall(&v, &l, *t)).abs() < 1e-15);
            assert!((p.precision - precision(&v, &l, *t)).abs() < 1e-15);
        }
    }
}

#[test]
fn roc_points_against_brute_force() {
    let mut rng = rng(22);
    for _ in 0..50 {
        let (v, l) = random_labeled(&mut rng, 80);
        let c = roc_curve(&v, &l).unwrap();
        for p in &c.points[1..] {
            let (tpr, fpr) = tpr_fpr(&v, &l, p.threshold);
            assert!((p.tpr - tpr).abs() < 1e-15 && (p.fpr - fpr).abs() < 1e-15);
        }
    }
}

#[test]
fn youden_against_exhaustive_search() {
    let mut rng = rng(23);
    for _ in 0..50 {
        let (v, l) = random_labeled(&mut rng, 80);
        let c = roc_curve(&v, &l).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        // Descending, strict improvement: ties keep the larger threshold.
        for t in unique_sorted(&v).into_iter().rev() {
            let (tpr, fpr) = tpr_fpr(&v, &l, t);
            if tpr - fpr > best.0 {
                best = (tpr - fpr, t);
            }
        }
        assert_eq!(youden_threshold(&c), best.1);
    }
}

#[test]
fn fpr_budget_against_brute_force() {
    let mut rng = rng(24);
    for _ in 0..50 {
        let (v, l) = random_labeled(&mut rng, 80);
        let c = roc_curve(&v, &l).unwrap();
        for budget in [0.0, 0.05, 0.2, 0.5, 1.0] {
            let t = threshold_at_fpr(&c, budget).unwrap();
            let want = unique_sorted(&v)
                .into_iter()
                .find(|&u| tpr_fpr(&v, &l, u).1 <= budget);
            match want {
                Some(w) => assert_eq!(t, w),
                None => assert!(v.iter().all(|&x| x < t)),
            }
        }
    }
}

#[test]
fn fpr_budget_is_fail_percentile() {
    // Two well-sampled classes: the 5% FPR cutoff sits near the FAIL 95th
    // percentile.
    let ds = beta_mixture(5000, (6.0, 2.0), 5000, (2.0, 6.0), 3);
    let c = roc_curve(&ds.scores(), &ds.labels()).unwrap();
    let t = threshold_at_fpr(&c, 0.05).unwrap();
    let mut fail = ds.scores_with(Label::Fail);
    fail.sort_by(f64::total_cmp);
    let p95 = fail[(0.95 * fail.len() as f64) as usize];
    assert!((t - p95).abs() < 0.01, "{t} vs {p95}");
}

#[test]
fn recall_selection_is_maximal() {
    let mut rng = rng(25);
    for _ in 0..50 {
        let (v, l) = random_labeled(&mut rng, 80);
        for target in [0.5, 0.8, 0.95, 1.0] {
            let s = threshold_at_recall(&v, &l, target).unwrap();
            assert!(recall(&v, &l, s.threshold) >= target);
            if let Some(&next) = unique_sorted(&v).iter().find(|&&u| u > s.threshold) {
                assert!(recall(&v, &l, next) < target);
            }
        }
    }
}

#[test]
fn logistic_deviance_matches_gradient_descent() {
    for seed in 0..5 {
        let ds = logistic_truth(200, |x| -1.0 + 2.5 * x, seed);
        let m = fit_logistic(&ds, FeatureMap::identity(), 0.0).unwrap();
        let x = ds.scores();
        let y: Vec<f64> = ds
            .labels()
            .iter()
            .map(|l| l.is_pass() as u8 as f64)
            .collect();
        let oracle = gradient_descent_deviance(&x, &y);
        assert!((m.diagnostics.deviance - oracle).abs() / oracle < 1e-6);
        let direct = deviance(&x, &y, m.coefficients[0], m.coefficients[1]);
        assert!((direct - m.diagnostics.deviance).abs() < 1e-9);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    use nalgebra::DVector;
    use threshcal::classifiers::LogisticProblem;
    let ds = logistic_truth(300, |x| 2.0 * (5.0 * x).cos(), 4);
    let m = ClassifierSettings::default()
        .fit(ClassifierKind::Polynomial, &ds)
        .unwrap();
    let problem = LogisticProblem::from_dataset(&ds, &m.feature_map, 0.3);
    let beta = DVector::from_vec(vec![0.2, -0.4, 0.1, 0.7]);
    let g = problem.gradient(&beta);
    for j in 0..beta.len() {
        let h = 1e-5;
        let mut up = beta.clone();
        let mut down = beta.clone();
        up[j] += h;
        down[j] -= h;
        let fd = (problem.loss(&up) - problem.loss(&down)) / (2.0 * h);
        assert!(
            (fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0),
            "{j}: {fd} vs {}",
            g[j]
        );
    }
}

#[test]
fn separable_data_is_an_error() {
    let ds = threshcal::ScoreDataset::from_pairs(
        "m",
        &[0.1, 0.2, 0.3, 0.7, 0.8, 0.9],
        &[
            Label::Fail,
            Label::Fail,
            Label::Fail,
            Label::Pass,
            Label::Pass,
            Label::Pass,
        ],
    );
    assert!(matches!(
        fit_logistic(&ds, FeatureMap::identity(), 0.0),
        Err(Error::Separation(_))
    ));
    // A ridge penalty keeps the fit finite.
    assert!(fit_logistic(&ds, FeatureMap::identity(), 1e-2).is_ok());
}

#[test]
fn gam_crossings_match_grid_oracle() {
    // Non-monotone truth: P(PASS) is high at both ends.
    let ds = logistic_truth(6000, |x| 12.0 * (x - 0.5).powi(2) - 1.0, 8);
    let m = threshcal::classifiers::fit_gam(&ds, 10, GamLambda::Fixed(1.0)).unwrap();
    let target = 0.5;
    let set = invert_probability_threshold(&m, target, 1e-3).unwrap();
    assert!(set.crossings.len() >= 2, "{:?}", set.crossings);

    let oracle = suffix_crossing(|x| m.predict_prob(x), target, 1e-4).unwrap();
    assert!(
        (set.canonical_threshold - oracle).abs() < 2e-3,
        "{} vs {oracle}",
        set.canonical_threshold
    );
    assert_eq!(set.canonical_threshold, *set.crossings.last().unwrap());
    for c in &set.crossings {
        assert!((m.predict_prob(*c) - target).abs() < 1e-3);
    }
}

#[test]
fn monotone_inverse_matches_logit() {
    let m = CalibratedClassifier::from_coefficients(FeatureMap::identity(), vec![-3.0, 6.0]);
    for p in [0.2, 0.5, 0.9] {
        let set = invert_probability_threshold(&m, p, 1e-3).unwrap();
        let exact = ((p / (1.0 - p)).ln() + 3.0) / 6.0;
        assert!((set.canonical_threshold - exact).abs() < 2e-6);
        assert_eq!(set.crossings.len(), 1);
    }
}

#[test]
fn conformal_quantile_recomputed_by_sorting() {
    let fit = exchangeable_beta(400, 0.5, (8.0, 2.0), (2.0, 8.0), 1);
    let calib = exchangeable_beta(57, 0.5, (8.0, 2.0), (2.0, 8.0), 2);
    let model = fit_logistic(&fit, FeatureMap::identity(), 0.0).unwrap();
    let cal = calibrate(model.clone(), &calib).unwrap();
    let mut s: Vec<f64> = calib
        .records
        .iter()
        .map(|r| {
            let p = model.predict_prob(r.score);
            if r.label.is_pass() {
                1.0 - p
            } else {
                p
            }
        })
        .collect();
    s.sort_by(f64::total_cmp);
    for alpha in [0.3, 0.1, 0.05] {
        let rank = (58.0 * (1.0 - alpha) - 1e-9_f64).ceil() as usize;
        assert_eq!(conformal_quantile(&cal, alpha), s[rank - 1]);
    }
    assert_eq!(conformal_quantile(&cal, 0.01), f64::INFINITY);
}

#[test]
fn conformal_threshold_is_suffix_of_pass_inclusion() {
    let fit = exchangeable_beta(600, 0.5, (8.0, 2.0), (2.0, 8.0), 11);
    let calib = exchangeable_beta(600, 0.5, (8.0, 2.0), (2.0, 8.0), 12);
    let model = ClassifierSettings::default()
        .fit(ClassifierKind::Gam, &fit)
        .unwrap();
    let cal = calibrate(model, &calib).unwrap();
    let q = conformal_quantile(&cal, 0.1);
    let t = conformal_score_threshold(&cal, q, 1e-3).unwrap();
    let oracle = suffix_crossing(
        |x| prediction_set(&cal, q, x).contains_pass as u8 as f64,
        1.0,
        1e-3,
    )
    .unwrap();
    assert!((t - oracle).abs() < 1e-9);
    assert!(t > 0.0 && t < 1.0);
}

#[test]
fn histogram_minimum_between_modes() {
    let ds = beta_mixture(2500, (20.0, 2.0), 2500, (2.0, 20.0), 5);
    let t = histogram_local_min_threshold(&ds.scores(), 50).unwrap();
    assert!(t > 0.3 && t < 0.7, "{t}");
}

#[test]
fn kde_threshold_near_true_crossing() {
    let ds = beta_mixture(3000, (8.0, 2.0), 3000, (2.0, 8.0), 17);
    let truth = |x: f64| {
        let x = x.clamp(1e-9, 1.0 - 1e-9);
        let (p, f) = (beta_kernel(x, 8.0, 2.0), beta_kernel(x, 2.0, 8.0));
        p / (p + f)
    };
    for level in [0.8, 0.9] {
        let t = kde_threshold(&ds, level, 1e-3).unwrap();
        let want = suffix_crossing(truth, level, 1e-5).unwrap();
        assert!((t - want).abs() < 0.05, "{level}: {t} vs {want}");
    }
}

#[test]
fn beta_density_oracle_is_normalized() {
    let m = 100_000;
    let integral: f64 = (1..m)
        .map(|i| beta_pdf(i as f64 / m as f64, 8.0, 2.0))
        .sum::<f64>()
        / m as f64;
    assert!((integral - 1.0).abs() < 1e-6);
}
