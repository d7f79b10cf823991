//! Laplace output perturbation for counting queries.
//!
//! A counting query has sensitivity 1, so ε-differential privacy is reached
//! with Laplace noise of scale `b = 1/ε`. This module also carries the closed
//! forms for the probability that a perturbed count lands outside `[0, n]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stream::UniformSource;

/// Sensitivity of a counting query.
pub const COUNT_SENSITIVITY: f64 = 1.0;

/// Privacy level ε together with the Laplace scale it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyLevel {
    epsilon: f64,
    scale_b: f64,
}

impl PrivacyLevel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(invalid(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        Ok(Self {
            epsilon,
            scale_b: COUNT_SENSITIVITY / epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Laplace scale `b = 1/ε`.
    pub fn scale_b(&self) -> f64 {
        self.scale_b
    }

    /// Standard deviation of the noise, `sqrt(2)·b`.
    pub fn noise_std(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.scale_b
    }

    pub fn noise_variance(&self) -> f64 {
        2.0 * self.scale_b * self.scale_b
    }
}

/// Calibrates Laplace noise for a counting query at privacy level `epsilon`.
pub fn calibrate(epsilon: f64) -> Result<PrivacyLevel> {
    PrivacyLevel::new(epsilon)
}

/// One additive Laplace perturbation, in count units. Never clamped.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LaplaceNoise(pub f64);

impl LaplaceNoise {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Laplace density `(ε/2)·exp(-ε|z|)`.
pub fn laplace_density(z: f64, level: &PrivacyLevel) -> f64 {
    laplace_log_density(z, level).exp()
}

pub fn laplace_log_density(z: f64, level: &PrivacyLevel) -> f64 {
    (0.5 * level.epsilon).ln() - level.epsilon * z.abs()
}

/// Inverse CDF of the zero-centred Laplace distribution at `u ∈ (0, 1)`.
///
/// `u > 0.5` maps to positive noise.
pub fn laplace_inverse_cdf(u: f64, level: &PrivacyLevel) -> f64 {
    let centred = u - 0.5;
    // ln(1 - 2|u - 0.5|), accurate near the median
    let tail = (-2.0 * centred.abs()).ln_1p();
    -level.scale_b * centred.signum() * tail
}

/// Draws one noise value by inverse-CDF transform of a single uniform.
///
/// A draw of exactly 0 (or 1) has an infinite image, so it is discarded and
/// the stream is read again.
pub fn sample_noise<S: UniformSource + ?Sized>(level: &PrivacyLevel, stream: &mut S) -> LaplaceNoise {
    loop {
        let u = stream.next_uniform();
        if u > 0.0 && u < 1.0 {
            return LaplaceNoise(laplace_inverse_cdf(u, level));
        }
    }
}

/// Out-of-range probability for a given true count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutOfRangeReport {
    pub probability: f64,
    pub true_count: u64,
    pub db_size: u64,
}

fn out_of_range_value(a: u64, n: u64, epsilon: f64) -> f64 {
    let a = a as f64;
    let n = n as f64;
    0.5 * ((-epsilon * a).exp() + (epsilon * (a - n)).exp())
}

/// P[y < 0 or y > n | true count a] = (e^{-εa} + e^{ε(a-n)}) / 2.
pub fn out_of_range_probability(a: u64, n: u64, level: &PrivacyLevel) -> Result<OutOfRangeReport> {
    if n == 0 {
        return Err(invalid("database size must be at least 1"));
    }
    if a > n {
        return Err(invalid(format!("true count {a} outside [0, {n}]")));
    }
    Ok(OutOfRangeReport {
        probability: out_of_range_value(a, n, level.epsilon),
        true_count: a,
        db_size: n,
    })
}

/// Extremes of the out-of-range probability over all true counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfRangeBounds {
    pub max_prob: f64,
    pub argmax: Vec<u64>,
    pub min_prob: f64,
    pub argmin: Vec<u64>,
}

/// Maximum and minimum of P*(a) over `a ∈ {0, …, n}`.
///
/// P* is symmetric under `a ↦ n - a`, and `P*(a+1) > P*(a)` exactly when
/// `a > (n-1)/2`. The maximum sits at both endpoints. The minimum sits at
/// `floor(n/2)` and `ceil(n/2)`: for odd `n` these are `(n-1)/2` and
/// `(n+1)/2`, which tie; for even `n` it is the single point `n/2`.
pub fn out_of_range_bounds(n: u64, level: &PrivacyLevel) -> Result<OutOfRangeBounds> {
    if n == 0 {
        return Err(invalid("database size must be at least 1"));
    }
    let eps = level.epsilon;
    let mut argmin = vec![n / 2];
    if n % 2 == 1 {
        argmin.push(n / 2 + 1);
    }
    Ok(OutOfRangeBounds {
        max_prob: 0.5 * (1.0 + (-eps * n as f64).exp()),
        argmax: vec![0, n],
        min_prob: out_of_range_value(n / 2, n, eps),
        argmin,
    })
}

/// Closed-form approximation of min P*, `(e^{-ε(n-1)/2} + e^{-ε(n+1)/2}) / 2`.
///
/// Exact for odd `n`; for even `n` it overshoots the true minimum slightly.
pub fn min_out_of_range_approx(n: u64, level: &PrivacyLevel) -> f64 {
    let half = 0.5 * level.epsilon;
    let n = n as f64;
    0.5 * ((-half * (n - 1.0)).exp() + (-half * (n + 1.0)).exp())
}

/// Pointwise ε-DP density-ratio check for neighbouring counts `a1`, `a2`.
///
/// Returns true when `f(y - a1) ≤ e^ε · f(y - a2)` on every grid point.
pub fn dp_ratio_check(level: &PrivacyLevel, a1: u64, a2: u64, grid: &[f64]) -> Result<bool> {
    dp_ratio_check_with(level, a1, a2, grid, |z| laplace_log_density(z, level))
}

/// [`dp_ratio_check`] against an arbitrary log-density.
///
/// The comparison is made in log space so that densities far in the tails do
/// not underflow. A relative slack of a few ulps absorbs rounding in the
/// boundary case where the ratio equals e^ε exactly.
pub fn dp_ratio_check_with<F>(level: &PrivacyLevel, a1: u64, a2: u64, grid: &[f64], log_density: F) -> Result<bool>
where
    F: Fn(f64) -> f64,
{
    if a1.abs_diff(a2) != 1 {
        return Err(invalid(format!("counts {a1} and {a2} are not neighbouring")));
    }
    let eps = level.epsilon;
    let (a1, a2) = (a1 as f64, a2 as f64);
    Ok(grid.iter().all(|&y| {
        let lhs = log_density(y - a1);
        let rhs = eps + log_density(y - a2);
        lhs <= rhs + 1e-12 * (1.0 + lhs.abs().max(rhs.abs()))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{FixedUniform, RunStream};

    fn level(eps: f64) -> PrivacyLevel {
        calibrate(eps).unwrap()
    }

    #[test]
    fn calibrate_examples() {
        let l = level(0.1);
        assert!((l.scale_b() - 10.0).abs() < 1e-12);
        assert!((l.noise_std() - 14.1421356).abs() < 1e-6);
        assert_eq!(level(1.0).scale_b(), 1.0);
        assert!((level(0.05).scale_b() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn calibrate_rejects_bad_epsilon() {
        for eps in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(calibrate(eps), Err(crate::Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn density_examples() {
        let l = level(0.1);
        assert!((laplace_density(0.0, &l) - 0.05).abs() < 1e-15);
        // 0.05 * e^{-1}
        assert!((laplace_density(10.0, &l) - 0.018_393_972_058_572_12).abs() < 1e-15);
        for z in [0.3, 7.0, 123.4] {
            assert_eq!(laplace_density(z, &l), laplace_density(-z, &l));
        }
    }

    #[test]
    fn inverse_cdf_examples() {
        let l = level(0.1);
        assert_eq!(laplace_inverse_cdf(0.5, &l), 0.0);
        // -10 ln(0.5)
        assert!((laplace_inverse_cdf(0.75, &l) - 6.931_471_805_599_453).abs() < 1e-12);
        assert!((laplace_inverse_cdf(0.25, &l) + 6.931_471_805_599_453).abs() < 1e-12);
        assert_eq!(sample_noise(&l, &mut FixedUniform(0.5)).value(), 0.0);
    }

    /// Yields 0.0 first, then 0.75.
    struct ZeroThen(bool);

    impl UniformSource for ZeroThen {
        fn next_uniform(&mut self) -> f64 {
            if std::mem::replace(&mut self.0, true) {
                0.75
            } else {
                0.0
            }
        }
    }

    #[test]
    fn sampler_redraws_on_zero() {
        let noise = sample_noise(&level(0.1), &mut ZeroThen(false));
        assert!((noise.value() - 6.931_471_805_599_453).abs() < 1e-12);
    }

    #[test]
    fn sampler_is_deterministic() {
        let l = level(0.5);
        let a: Vec<f64> = {
            let mut s = RunStream::new(11, 2);
            (0..50).map(|_| sample_noise(&l, &mut s).value()).collect()
        };
        let b: Vec<f64> = {
            let mut s = RunStream::new(11, 2);
            (0..50).map(|_| sample_noise(&l, &mut s).value()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_examples() {
        let l = level(0.1);
        let p0 = out_of_range_probability(0, 100, &l).unwrap().probability;
        assert!((p0 - 0.500_022_699_964_881).abs() < 1e-12);
        let p50 = out_of_range_probability(50, 100, &l).unwrap().probability;
        assert!((p50 - 0.006_737_946_999_085_467).abs() < 1e-15);
        let pn = out_of_range_probability(100, 100, &l).unwrap().probability;
        assert!((p0 - pn).abs() < 1e-15);
        assert!(out_of_range_probability(101, 100, &l).is_err());
        assert!(out_of_range_probability(0, 0, &l).is_err());
    }

    #[test]
    fn bounds_examples() {
        let l = level(0.1);
        let b = out_of_range_bounds(100, &l).unwrap();
        assert!((b.max_prob - 0.500_022_699_964_881).abs() < 1e-12);
        assert_eq!(b.argmax, vec![0, 100]);
        assert_eq!(b.argmin, vec![50]);

        let b = out_of_range_bounds(101, &l).unwrap();
        assert!(b.argmin.contains(&50));
        assert_eq!(b.argmin, vec![50, 51]);
        assert!((b.min_prob - min_out_of_range_approx(101, &l)).abs() < 1e-15);
    }

    #[test]
    fn bounds_single_record() {
        let b = out_of_range_bounds(1, &level(1.0)).unwrap();
        assert_eq!(b.argmax, vec![0, 1]);
        assert_eq!(b.argmin, vec![0, 1]);
        assert!((b.max_prob - b.min_prob).abs() < 1e-15);
    }

    #[test]
    fn dp_ratio_examples() {
        let l = level(0.1);
        let grid: Vec<f64> = (0..2001).map(|i| -100.0 + 0.1 * i as f64).collect();
        assert!(dp_ratio_check(&l, 30, 31, &grid).unwrap());
        assert!(dp_ratio_check(&l, 31, 30, &grid).unwrap());
        assert!(dp_ratio_check(&l, 30, 30, &grid).is_err());
        assert!(dp_ratio_check(&l, 30, 32, &grid).is_err());

        let doubled = |z: f64| {
            let base = laplace_log_density(z, &l);
            if z == -130.0 {
                base + std::f64::consts::LN_2
            } else {
                base
            }
        };
        assert!(!dp_ratio_check_with(&l, 30, 31, &grid, doubled).unwrap());
    }
}
