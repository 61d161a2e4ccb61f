//! Seeded synthetic score datasets for examples, tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::dataset::{Label, LabeledScoreRecord, ScoreDataset};

fn beta_sample(rng: &mut ChaCha8Rng, n: usize, (a, b): (f64, f64)) -> Vec<f64> {
    let dist = Beta::new(a, b).expect("beta parameters must be positive");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// `n_pass` PASS scores drawn from `Beta(pass.0, pass.1)` followed by
/// `n_fail` FAIL scores drawn from `Beta(fail.0, fail.1)`.
pub fn beta_mixture(
    n_pass: usize,
    pass: (f64, f64),
    n_fail: usize,
    fail: (f64, f64),
    seed: u64,
) -> ScoreDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_pass + n_fail);
    for s in beta_sample(&mut rng, n_pass, pass) {
        records.push(LabeledScoreRecord::new(
            records.len().to_string(),
            s,
            Label::Pass,
        ));
    }
    for s in beta_sample(&mut rng, n_fail, fail) {
        records.push(LabeledScoreRecord::new(
            records.len().to_string(),
            s,
            Label::Fail,
        ));
    }
    ScoreDataset::new("synthetic", records)
}

/// `n` exchangeable draws: labels are PASS with probability `prior_pass`,
/// scores follow the label's Beta distribution.
pub fn exchangeable_beta(
    n: usize,
    prior_pass: f64,
    pass: (f64, f64),
    fail: (f64, f64),
    seed: u64,
) -> ScoreDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pass_dist = Beta::new(pass.0, pass.1).expect("beta parameters must be positive");
    let fail_dist = Beta::new(fail.0, fail.1).expect("beta parameters must be positive");
    let records = (0..n)
        .map(|i| {
            let (label, score) = if rng.random::<f64>() < prior_pass {
                (Label::Pass, pass_dist.sample(&mut rng))
            } else {
                (Label::Fail, fail_dist.sample(&mut rng))
            };
            LabeledScoreRecord::new(i.to_string(), score, label)
        })
        .collect();
    ScoreDataset::new("synthetic", records)
}

/// Scores uniform on `[0, 1]`, labels Bernoulli with `logit P(PASS) = logit(x)`.
pub fn logistic_truth(n: usize, logit: impl Fn(f64) -> f64, seed: u64) -> ScoreDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (0..n)
        .map(|i| {
            let x: f64 = rng.random();
            let p = 1.0 / (1.0 + (-logit(x)).exp());
            let label = if rng.random::<f64>() < p {
                Label::Pass
            } else {
                Label::Fail
            };
            LabeledScoreRecord::new(i.to_string(), x, label)
        })
        .collect();
    ScoreDataset::new("synthetic", records)
}
