//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threshcal::{Label, ScoreDataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random labelled values on a coarse grid (so ties are common), with both
/// labels present.
pub fn random_labeled(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<f64>, Vec<Label>) {
    let n = rng.random_range(2..=max_n);
    let levels = rng.random_range(2..=20) as f64;
    let mut values: Vec<f64> = (0..n)
        .map(|_| (rng.random::<f64>() * levels).floor() / levels)
        .collect();
    let mut labels: Vec<Label> = (0..n)
        .map(|_| {
            if rng.random::<bool>() {
                Label::Pass
            } else {
                Label::Fail
            }
        })
        .collect();
    labels[0] = Label::Pass;
    labels[1] = Label::Fail;
    // Occasionally make values informative.
    if rng.random::<bool>() {
        for (v, l) in values.iter_mut().zip(&labels) {
            if l.is_pass() {
                *v = (*v + 0.3).min(1.0);
            }
        }
    }
    (values, labels)
}

pub fn dataset(values: &[f64], labels: &[Label]) -> ScoreDataset {
    ScoreDataset::from_pairs("score", values, labels)
}

/// `P(pos > neg) + 0.5 P(pos = neg)` over all pairs.
pub fn pairwise_auc(values: &[f64], labels: &[Label]) -> f64 {
    let (u, p, n) = pair_count(values, labels);
    u / (p * n) as f64
}

/// Mann-Whitney U of the PASS group by exhaustive pair counting, with the
/// group sizes.
pub fn pair_count(values: &[f64], labels: &[Label]) -> (f64, usize, usize) {
    let pos: Vec<f64> = values
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_pass())
        .map(|(v, _)| *v)
        .collect();
    let neg: Vec<f64> = values
        .iter()
        .zip(labels)
        .filter(|(_, l)| !l.is_pass())
        .map(|(v, _)| *v)
        .collect();
    let mut u = 0.0;
    for a in &pos {
        for b in &neg {
            if a > b {
                u += 1.0;
            } else if a == b {
                u += 0.5;
            }
        }
    }
    (u, pos.len(), neg.len())
}

pub fn brute_u(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for x in a {
        for y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Recall of PASS at cutoff `t` with the inclusive rule.
pub fn recall(values: &[f64], labels: &[Label], t: f64) -> f64 {
    let pos: Vec<f64> = values
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_pass())
        .map(|(v, _)| *v)
        .collect();
    pos.iter().filter(|&&v| v >= t).count() as f64 / pos.len() as f64
}

pub fn precision(values: &[f64], labels: &[Label], t: f64) -> f64 {
    let sel: Vec<&Label> = values
        .iter()
        .zip(labels)
        .filter(|(v, _)| **v >= t)
        .map(|(_, l)| l)
        .collect();
    sel.iter().filter(|l| l.is_pass()).count() as f64 / sel.len() as f64
}

pub fn tpr_fpr(values: &[f64], labels: &[Label], t: f64) -> (f64, f64) {
    let (mut tp, mut fp, mut p, mut n) = (0.0, 0.0, 0.0, 0.0);
    for (v, l) in values.iter().zip(labels) {
        if l.is_pass() {
            p += 1.0;
            if *v >= t {
                tp += 1.0;
            }
        } else {
            n += 1.0;
            if *v >= t {
                fp += 1.0;
            }
        }
    }
    (tp / p, fp / n)
}

pub fn unique_sorted(values: &[f64]) -> Vec<f64> {
    let mut u = values.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Deviance of a one-feature logistic model at `(b0, b1)`.
pub fn deviance(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    2.0 * x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let eta = b0 + b1 * xi;
            log1pexp(eta) - yi * eta
        })
        .sum::<f64>()
}

/// Unpenalized logistic fit by plain gradient descent with a fixed step
/// from the Lipschitz bound of the gradient, run until the gradient
/// vanishes. Returns the minimal deviance.
pub fn gradient_descent_deviance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sxx) = (x.iter().sum::<f64>(), x.iter().map(|v| v * v).sum::<f64>());
    // Largest eigenvalue of XᵀX / 4 for the 2x2 Gram matrix.
    let tr = n + sxx;
    let det = n * sxx - sx * sx;
    let lmax = 0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt());
    let step = 4.0 / lmax;
    let (mut b0, mut b1) = (0.0f64, 0.0f64);
    for _ in 0..2_000_000 {
        let (mut g0, mut g1) = (0.0, 0.0);
        for (xi, yi) in x.iter().zip(y) {
            let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
            g0 += p - yi;
            g1 += (p - yi) * xi;
        }
        if g0.abs().max(g1.abs()) < 1e-11 {
            break;
        }
        b0 -= step * g0;
        b1 -= step * g1;
    }
    deviance(x, y, b0, b1)
}

/// `erf` by its Maclaurin series, adequate for |x| < 3.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    while term.abs() > 1e-18 {
        k += 1.0;
        term *= -x * x / k;
        sum += term / (2.0 * k + 1.0);
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

/// Two-sided critical value by bisection on the series `erf`.
pub fn z_by_bisection(confidence: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 6.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erf_series(mid / 2f64.sqrt()) < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unnormalized Beta density; the normalizer cancels in posterior ratios of
/// mirrored pairs such as Beta(8, 2) and Beta(2, 8).
pub fn beta_kernel(x: f64, a: f64, b: f64) -> f64 {
    x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0)
}

/// `ln B(a, b)` via Lanczos log-gamma.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)).exp()
}

/// Smallest `x` on a fine grid from which `f(x) ≥ target` holds up to 1.
pub fn suffix_crossing(f: impl Fn(f64) -> f64, target: f64, step: f64) -> Option<f64> {
    let n = (1.0 / step).round() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut start = None;
    for &x in xs.iter().rev() {
        if f(x) >= target {
            start = Some(x);
        } else {
            break;
        }
    }
    start
}

/// Two-sided Student t tail `P(|T| ≥ t)` by Simpson integration of the
/// density over `[0, t]`.
pub fn t_two_sided_by_quadrature(t: f64, df: f64) -> f64 {
    let c = (ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df)).exp()
        / (df * std::f64::consts::PI).sqrt();
    let pdf = |x: f64| c * (1.0 + x * x / df).powf(-0.5 * (df + 1.0));
    let m = 20_000;
    let h = t.abs() / m as f64;
    let mut s = pdf(0.0) + pdf(t.abs());
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(i as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}
