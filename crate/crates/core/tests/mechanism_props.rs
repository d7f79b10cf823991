use dpbayes::mechanism::{laplace_inverse_cdf, min_out_of_range_approx};
use dpbayes::{
    calibrate, dp_ratio_check, laplace_density, out_of_range_bounds, out_of_range_probability, sample_noise, RunStream,
};
use proptest::prelude::*;

const SWEEP_EPSILONS: [f64; 6] = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0];

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let x = a + h * i as f64;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

#[test]
fn density_integrates_to_one() {
    for eps in SWEEP_EPSILONS {
        let level = calibrate(eps).unwrap();
        let b = level.scale_b();
        // Split at the kink.
        let f = |z: f64| laplace_density(z, &level);
        let total = simpson(f, -50.0 * b, 0.0, 200_000) + simpson(f, 0.0, 50.0 * b, 200_000);
        assert!((total - 1.0).abs() < 1e-9, "eps={eps}: {total}");
    }
}

#[test]
fn sampler_moments() {
    let level = calibrate(0.1).unwrap();
    let draws = 1_000_000;
    let mut stream = RunStream::new(20240601, 0);
    let xs: Vec<f64> = (0..draws).map(|_| sample_noise(&level, &mut stream).value()).collect();
    let mean = xs.iter().sum::<f64>() / draws as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (draws - 1) as f64;
    let sigma = level.noise_std();
    assert!(mean.abs() < 5.0 * sigma / (draws as f64).sqrt(), "mean {mean}");
    assert!((var / 200.0 - 1.0).abs() < 0.02, "variance {var}");
    let mean_abs = xs.iter().map(|x| x.abs()).sum::<f64>() / draws as f64;
    assert!((mean_abs / 10.0 - 1.0).abs() < 0.01, "E|R| {mean_abs}");
}

#[test]
fn out_of_range_matches_monte_carlo() {
    let n = 100;
    let level = calibrate(0.1).unwrap();
    let draws = 100_000u64;
    for a in [0, 10, 25, 50, 73, 100] {
        let expected = out_of_range_probability(a, n, &level).unwrap().probability;
        let mut stream = RunStream::new(99, a);
        let exits = (0..draws)
            .filter(|_| {
                let y = a as f64 + sample_noise(&level, &mut stream).value();
                y < 0.0 || y > n as f64
            })
            .count();
        let freq = exits as f64 / draws as f64;
        let se = (expected * (1.0 - expected) / draws as f64).sqrt();
        assert!((freq - expected).abs() <= 3.0 * se, "a={a}: {freq} vs {expected}");
    }
}

#[test]
fn out_of_range_decreases_then_increases() {
    for eps in [0.05, 0.1, 0.5, 1.0] {
        let level = calibrate(eps).unwrap();
        for n in 1..=500u64 {
            let p = |a| out_of_range_probability(a, n, &level).unwrap().probability;
            let mid = (n as f64 - 1.0) / 2.0;
            for a in 0..n {
                let (here, next) = (p(a), p(a + 1));
                if (a as f64) < mid {
                    assert!(next < here, "eps={eps} n={n} a={a}");
                } else if (a as f64) > mid {
                    assert!(next > here, "eps={eps} n={n} a={a}");
                }
            }
        }
    }
}

/// Exhaustive argmax/argmin, with a relative slack for the exact ties that
/// the a ↦ n-a symmetry produces.
fn scan(n: u64, eps: f64) -> (Vec<u64>, Vec<u64>) {
    let level = calibrate(eps).unwrap();
    let values: Vec<f64> = (0..=n)
        .map(|a| out_of_range_probability(a, n, &level).unwrap().probability)
        .collect();
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    let pick = |target: f64| {
        (0..=n)
            .filter(|&a| (values[a as usize] - target).abs() <= 1e-12 * target)
            .collect()
    };
    (pick(max), pick(min))
}

#[test]
fn bounds_agree_with_exhaustive_scan() {
    for eps in [0.05, 0.1, 1.0] {
        let level = calibrate(eps).unwrap();
        for n in 1..=200u64 {
            let bounds = out_of_range_bounds(n, &level).unwrap();
            let (argmax, argmin) = scan(n, eps);
            let mut expected_max = bounds.argmax.clone();
            expected_max.dedup();
            assert_eq!(argmax, expected_max, "argmax n={n} eps={eps}");
            assert_eq!(argmin, bounds.argmin, "argmin n={n} eps={eps}");
            if n % 2 == 1 {
                assert!(bounds.argmin.contains(&((n - 1) / 2)));
                let approx = min_out_of_range_approx(n, &level);
                assert!((bounds.min_prob - approx).abs() <= 1e-12 * approx);
            } else {
                assert!(bounds.min_prob <= min_out_of_range_approx(n, &level));
            }
        }
    }
}

#[test]
fn dp_ratio_holds_on_dense_grid() {
    for eps in SWEEP_EPSILONS {
        let level = calibrate(eps).unwrap();
        let b = level.scale_b();
        for n in [100u64, 1000] {
            let (lo, hi) = (-10.0 * b, n as f64 + 10.0 * b);
            let grid: Vec<f64> = (0..10_000).map(|i| lo + (hi - lo) * i as f64 / 9_999.0).collect();
            for a in [0, 1, n / 3, n / 2, n - 1] {
                assert!(
                    dp_ratio_check(&level, a, a + 1, &grid).unwrap(),
                    "eps={eps} n={n} a={a}"
                );
                assert!(
                    dp_ratio_check(&level, a + 1, a, &grid).unwrap(),
                    "eps={eps} n={n} a={a}"
                );
            }
        }
    }
}

proptest! {
    #[test]
    fn density_is_symmetric(z in -1e4f64..1e4, eps in 0.01f64..10.0) {
        let level = calibrate(eps).unwrap();
        prop_assert_eq!(laplace_density(z, &level), laplace_density(-z, &level));
    }

    #[test]
    fn inverse_cdf_sign_and_order(u in 0.0001f64..0.9999, du in 0.0f64..0.0001, eps in 0.01f64..10.0) {
        let level = calibrate(eps).unwrap();
        let x = laplace_inverse_cdf(u, &level);
        prop_assert_eq!(x > 0.0, u > 0.5);
        prop_assert!(laplace_inverse_cdf(u + du, &level) >= x);
        // odd symmetry about the median
        prop_assert!((laplace_inverse_cdf(1.0 - u, &level) + x).abs() <= 1e-9 * (1.0 + x.abs()));
    }
}
