//! Point estimators of the true count from a single noisy response.
//!
//! The naive estimator reports the response as is. The Bayes estimator
//! reports the posterior mean of the true count under a binomial prior and
//! the Laplace likelihood `(ε/2)·exp(-ε|y-k|)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanism::PrivacyLevel;
use crate::prior::BinomialPrior;

/// A perturbed count as released by the database owner. Finite, but may lie
/// anywhere on the real line.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct NoisyResponse(f64);

impl NoisyResponse {
    pub fn new(y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(invalid(format!("noisy response must be finite, got {y}")));
        }
        Ok(Self(y))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn naive_estimate(resp: NoisyResponse) -> f64 {
    resp.0
}

/// Posterior distribution of the true count, indexed by `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    probs: Vec<f64>,
}

impl Posterior {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        let n = (self.probs.len() - 1) as f64;
        let mean: f64 = self.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        mean.clamp(0.0, n)
    }

    pub fn pairs(&self) -> Vec<(u64, f64)> {
        self.probs.iter().enumerate().map(|(k, &p)| (k as u64, p)).collect()
    }
}

/// Naive and Bayes estimates for one response, with the full posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub naive: f64,
    pub bayes: f64,
    pub posterior: Vec<(u64, f64)>,
}

/// Bayes posterior-mean estimator with the prior log-masses cached, so one
/// estimator can be reused across many responses.
#[derive(Debug, Clone)]
pub struct BayesEstimator {
    prior: BinomialPrior,
    level: PrivacyLevel,
    log_prior: Vec<f64>,
}

impl BayesEstimator {
    pub fn new(prior: BinomialPrior, level: PrivacyLevel) -> Self {
        Self {
            log_prior: prior.log_mass_table(),
            prior,
            level,
        }
    }

    pub fn prior(&self) -> &BinomialPrior {
        &self.prior
    }

    pub fn level(&self) -> &PrivacyLevel {
        &self.level
    }

    /// Unnormalized weights `exp(log w_k - max)` and their sum.
    ///
    /// For `y < 0` every likelihood term carries the same factor `e^{εy}`
    /// relative to `y = 0` (and symmetrically above `n`), so `y` is moved
    /// to the nearest endpoint before weighting. This is exact and keeps the
    /// output flat outside `[0, n]` to the last bit.
    fn shifted_weights(&self, resp: NoisyResponse) -> Result<(Vec<f64>, f64)> {
        let n = self.prior.n() as f64;
        let y = resp.0.clamp(0.0, n);
        let eps = self.level.epsilon();

        let mut weights: Vec<f64> = self
            .log_prior
            .iter()
            .enumerate()
            .map(|(k, lp)| lp - eps * (y - k as f64).abs())
            .collect();
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Numerical(format!(
                "posterior has no finite log-weight at y = {}",
                resp.0
            )));
        }
        let mut total = 0.0;
        for w in &mut weights {
            *w = (*w - max).exp();
            total += *w;
        }
        if !(total.is_finite() && total >= 1.0) {
            return Err(Error::Numerical(format!(
                "posterior normalizer {total} at y = {}",
                resp.0
            )));
        }
        Ok((weights, total))
    }

    pub fn posterior(&self, resp: NoisyResponse) -> Result<Posterior> {
        let (mut weights, total) = self.shifted_weights(resp)?;
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Posterior { probs: weights })
    }

    /// Posterior mean; always within `[0, n]`.
    pub fn estimate(&self, resp: NoisyResponse) -> Result<f64> {
        let (weights, total) = self.shifted_weights(resp)?;
        let weighted: f64 = weights.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
        Ok((weighted / total).clamp(0.0, self.prior.n() as f64))
    }

    pub fn report(&self, resp: NoisyResponse) -> Result<EstimateReport> {
        let posterior = self.posterior(resp)?;
        Ok(EstimateReport {
            naive: naive_estimate(resp),
            bayes: posterior.mean(),
            posterior: posterior.pairs(),
        })
    }
}

pub fn posterior(prior: &BinomialPrior, level: &PrivacyLevel, resp: NoisyResponse) -> Result<Posterior> {
    BayesEstimator::new(*prior, *level).posterior(resp)
}

pub fn bayes_estimate(prior: &BinomialPrior, level: &PrivacyLevel, resp: NoisyResponse) -> Result<f64> {
    BayesEstimator::new(*prior, *level).estimate(resp)
}
