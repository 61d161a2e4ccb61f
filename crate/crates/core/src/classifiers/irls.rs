//! Penalized logistic regression by Newton-Raphson / IRLS.
//!
//! Objective (minimized):
//!
//! ```text
//! L(β) = Σ_i [ softplus(η_i) - y_i η_i ] + (λ/2) βᵀ P β,   η = Xβ
//! ```
//!
//! with `y_i = 1` for PASS. `P` never penalizes the intercept column.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const STEP_TOLERANCE: f64 = 1e-8;
pub const DIVERGENCE_NORM: f64 = 1e6;

pub(crate) fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Design matrix, response and penalty of one penalized logistic fit.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
    pub penalty: DMatrix<f64>,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsSolution {
    pub coefficients: DVector<f64>,
    pub iterations: usize,
    pub deviance: f64,
}

impl LogisticProblem {
    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn linear_predictor(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.design * beta
    }

    /// Unpenalized deviance `-2 log L`.
    pub fn deviance(&self, beta: &DVector<f64>) -> f64 {
        let eta = self.linear_predictor(beta);
        2.0 * eta
            .iter()
            .zip(self.response.iter())
            .map(|(&e, &y)| softplus(e) - y * e)
            .sum::<f64>()
    }

    pub fn loss(&self, beta: &DVector<f64>) -> f64 {
        0.5 * self.deviance(beta) + 0.5 * self.lambda * beta.dot(&(&self.penalty * beta))
    }

    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let eta = self.linear_predictor(beta);
        let resid = DVector::from_iterator(
            eta.len(),
            eta.iter()
                .zip(self.response.iter())
                .map(|(&e, &y)| sigmoid(e) - y),
        );
        self.design.tr_mul(&resid) + self.lambda * (&self.penalty * beta)
    }

    pub fn hessian(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let eta = self.linear_predictor(beta);
        let mut weighted = self.design.clone();
        for (i, &e) in eta.iter().enumerate() {
            let p = sigmoid(e);
            let w = (p * (1.0 - p)).sqrt();
            weighted.row_mut(i).scale_mut(w);
        }
        weighted.tr_mul(&weighted) + self.lambda * &self.penalty
    }

    fn initial(&self) -> DVector<f64> {
        let mut beta = DVector::zeros(self.dim());
        let n = self.response.len() as f64;
        let ybar = (self.response.sum() / n).clamp(1e-6, 1.0 - 1e-6);
        beta[0] = (ybar / (1.0 - ybar)).ln();
        beta
    }

    /// Newton iterations with step halving until `max |Δβ| < 1e-8`.
    // `!(a <= b)` keeps halving when the candidate loss is NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn solve(&self) -> Result<IrlsSolution> {
        let mut beta = self.initial();
        let mut loss = self.loss(&beta);
        for iter in 1..=MAX_ITERATIONS {
            let grad = self.gradient(&beta);
            // Already stationary; also covers rank-deficient designs whose
            // Hessian cannot be factored.
            if grad.amax() < 1e-12 {
                return self.finish(beta, iter - 1);
            }
            let hess = self.hessian(&beta);
            let step = match solve_spd(hess, &grad) {
                Ok(step) => step,
                Err(_) if self.deviance(&beta) < 1e-6 => {
                    return Err(Error::Separation(beta.norm()))
                }
                Err(e) => return Err(e),
            };

            let mut scale = 1.0;
            let mut candidate = &beta - &step;
            let mut cand_loss = self.loss(&candidate);
            let slack = 1e-12 * (1.0 + loss.abs());
            while !(cand_loss <= loss + slack) && scale > 1e-10 {
                scale *= 0.5;
                candidate = &beta - scale * &step;
                cand_loss = self.loss(&candidate);
            }
            let change = (scale * &step).amax();
            beta = candidate;
            loss = cand_loss;

            let norm = beta.norm();
            if !norm.is_finite() || norm > DIVERGENCE_NORM {
                return Err(Error::Separation(norm));
            }
            if change < STEP_TOLERANCE {
                return self.finish(beta, iter);
            }
        }
        // A vanishing deviance with no convergence means the classes are
        // separable and the coefficients are running off to infinity.
        if self.deviance(&beta) < 1e-6 {
            return Err(Error::Separation(beta.norm()));
        }
        Err(Error::NotConverged(MAX_ITERATIONS))
    }

    /// Without a penalty, a stationary point with zero deviance can only be
    /// reached numerically once the sigmoid saturates on separable data.
    fn finish(&self, beta: DVector<f64>, iterations: usize) -> Result<IrlsSolution> {
        let deviance = self.deviance(&beta);
        if self.lambda == 0.0 && deviance < 1e-6 {
            return Err(Error::Separation(beta.norm()));
        }
        Ok(IrlsSolution {
            coefficients: beta,
            iterations,
            deviance,
        })
    }
}

/// Solves `H x = g` for symmetric positive (semi)definite `H`.
pub(crate) fn solve_spd(hess: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = hess.clone().cholesky() {
        let x = chol.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    hess.lu()
        .solve(rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::Singular)
}
