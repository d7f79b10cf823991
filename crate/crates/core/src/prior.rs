//! Binomial population model for the true count.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::mechanism::PrivacyLevel;
use crate::stream::UniformSource;

/// Each of `n` records satisfies the predicate independently with
/// probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialPrior {
    n: u64,
    p: f64,
}

impl BinomialPrior {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("database size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mean(&self) -> f64 {
        self.n as f64 * self.p
    }

    pub fn variance(&self) -> f64 {
        self.n as f64 * self.p * (1.0 - self.p)
    }

    /// `ln P[K = k]`, with the binomial coefficient taken through log-gamma.
    ///
    /// `p = 0` and `p = 1` are point masses at `0` and `n`; every other
    /// count then has log-mass `-inf`.
    pub fn log_mass(&self, k: u64) -> Result<f64> {
        if k > self.n {
            return Err(invalid(format!("count {k} outside [0, {}]", self.n)));
        }
        Ok(self.log_mass_unchecked(k))
    }

    pub fn mass(&self, k: u64) -> Result<f64> {
        self.log_mass(k).map(f64::exp)
    }

    fn log_mass_unchecked(&self, k: u64) -> f64 {
        let n = self.n;
        if self.p == 0.0 {
            return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        if self.p == 1.0 {
            return if k == n { 0.0 } else { f64::NEG_INFINITY };
        }
        let (nf, kf) = (n as f64, k as f64);
        let log_choose = ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
        log_choose + kf * self.p.ln() + (nf - kf) * (-self.p).ln_1p()
    }

    /// Log-masses for every count `0..=n`.
    pub fn log_mass_table(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.log_mass_unchecked(k)).collect()
    }

    /// Exact draw as the number of successes in `n` Bernoulli(p) trials.
    pub fn sample<S: UniformSource + ?Sized>(&self, stream: &mut S) -> u64 {
        (0..self.n).filter(|_| stream.next_uniform() < self.p).count() as u64
    }
}

pub fn log_mass(prior: &BinomialPrior, k: u64) -> Result<f64> {
    prior.log_mass(k)
}

pub fn sample_true_count<S: UniformSource + ?Sized>(prior: &BinomialPrior, stream: &mut S) -> u64 {
    prior.sample(stream)
}

/// Widths of the 1σ intervals of the population model and of the noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyWidths {
    /// `2·sqrt(n·p·(1-p))`
    pub binomial_width: f64,
    /// `2·sqrt(2)/ε`
    pub laplace_width: f64,
}

pub fn uncertainty_widths(prior: &BinomialPrior, level: &PrivacyLevel) -> UncertaintyWidths {
    UncertaintyWidths {
        binomial_width: 2.0 * prior.variance().sqrt(),
        laplace_width: 2.0 * level.noise_std(),
    }
}
