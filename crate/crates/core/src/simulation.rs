//! Monte Carlo comparison of the naive and Bayes estimators.
//!
//! Each run draws a true count from the prior, perturbs it with Laplace
//! noise and scores both estimators by absolute error. Run `i` of cell `c`
//! reads only from `RunStream::new(seed, c * runs + i)`, and per-run records
//! are reduced in run order, so results do not depend on the shard count or
//! on how rayon schedules the work.

use std::io::Write;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{naive_estimate, BayesEstimator, NoisyResponse};
use crate::mechanism::{sample_noise, PrivacyLevel};
use crate::prior::BinomialPrior;
use crate::stream::RunStream;

pub const DEFAULT_EPSILONS: [f64; 6] = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0];
pub const DEFAULT_N_VALUES: [u64; 2] = [100, 1000];
pub const DEFAULT_P_VALUES: [f64; 7] = [0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98];
pub const DEFAULT_RUNS: u64 = 100_000;
pub const DEFAULT_SHARDS: usize = 8;

pub const CSV_HEADER: &str = "n,p,epsilon,noise_std,avg_err_naive,avg_err_naive_analytic,\
avg_err_bayes,prob_bayes_better,se_naive,se_bayes,runs,seed";

/// Mean absolute error of the naive estimator, `E|R| = 1/ε`.
pub fn analytic_naive_error(level: &PrivacyLevel) -> f64 {
    level.scale_b()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<u64>,
    pub p_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub runs: u64,
    pub seed: u64,
    pub shards: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_values: DEFAULT_N_VALUES.to_vec(),
            p_values: DEFAULT_P_VALUES.to_vec(),
            epsilon_values: DEFAULT_EPSILONS.to_vec(),
            runs: DEFAULT_RUNS,
            seed: 0,
            shards: DEFAULT_SHARDS,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.p_values.is_empty() || self.epsilon_values.is_empty() {
            return Err(invalid("sweep grids must be non-empty"));
        }
        if self.runs == 0 {
            return Err(invalid("runs must be at least 1"));
        }
        if self.shards == 0 {
            return Err(invalid("shards must be at least 1"));
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    /// Grid cells in output order: n outermost, then p, then ε.
    pub fn cells(&self) -> Vec<CellParams> {
        let mut cells = Vec::with_capacity(self.n_values.len() * self.p_values.len() * self.epsilon_values.len());
        for &n in &self.n_values {
            for &p in &self.p_values {
                for &epsilon in &self.epsilon_values {
                    cells.push(CellParams { n, p, epsilon });
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    pub n: u64,
    pub p: f64,
    pub epsilon: f64,
}

impl CellParams {
    fn validate(&self) -> Result<(BinomialPrior, PrivacyLevel)> {
        Ok((BinomialPrior::new(self.n, self.p)?, PrivacyLevel::new(self.epsilon)?))
    }
}

/// Outcome of one simulated query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub true_count: u64,
    pub noisy_value: f64,
    pub naive_error: f64,
    pub bayes_error: f64,
}

/// Aggregated metrics for one `(n, p, ε)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub n: u64,
    pub p: f64,
    pub epsilon: f64,
    pub avg_err_naive: f64,
    pub avg_err_naive_analytic: f64,
    pub avg_err_bayes: f64,
    pub se_naive: f64,
    pub se_bayes: f64,
    pub bayes_better: u64,
    pub naive_better: u64,
    pub ties: u64,
    pub runs: u64,
    pub seed: u64,
}

impl CellResult {
    pub fn noise_std(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.epsilon
    }

    /// Fraction of runs where the Bayes error is strictly smaller.
    pub fn prob_bayes_better(&self) -> f64 {
        self.bayes_better as f64 / self.runs as f64
    }

    pub fn prob_naive_better(&self) -> f64 {
        self.naive_better as f64 / self.runs as f64
    }

    pub fn tie_fraction(&self) -> f64 {
        self.ties as f64 / self.runs as f64
    }

    /// Binomial standard error of [`Self::prob_bayes_better`].
    pub fn se_prob_bayes_better(&self) -> f64 {
        let q = self.prob_bayes_better();
        (q * (1.0 - q) / self.runs as f64).sqrt()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.p,
            self.epsilon,
            self.noise_std(),
            self.avg_err_naive,
            self.avg_err_naive_analytic,
            self.avg_err_bayes,
            self.prob_bayes_better(),
            self.se_naive,
            self.se_bayes,
            self.runs,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: CellParams,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for cell in &self.cells {
            writeln!(out, "{}", cell.csv_row())?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    pub fn find(&self, n: u64, p: f64, epsilon: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.n == n && c.p == p && c.epsilon == epsilon)
    }
}

fn shard_ranges(runs: u64, shards: usize) -> Vec<Range<u64>> {
    let shards = (shards as u64).clamp(1, runs);
    let base = runs / shards;
    let extra = runs % shards;
    let mut start = 0;
    (0..shards)
        .map(|s| {
            let len = base + u64::from(s < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

fn simulate_run(prior: &BinomialPrior, estimator: &BayesEstimator, seed: u64, index: u64) -> Result<RunRecord> {
    let mut stream = RunStream::new(seed, index);
    let true_count = prior.sample(&mut stream);
    let noise = sample_noise(estimator.level(), &mut stream);
    let resp = NoisyResponse::new(true_count as f64 + noise.value())?;
    let truth = true_count as f64;
    Ok(RunRecord {
        true_count,
        noisy_value: resp.value(),
        naive_error: (truth - naive_estimate(resp)).abs(),
        bayes_error: (truth - estimator.estimate(resp)?).abs(),
    })
}

/// Runs `first_index .. first_index + runs` split into `shards` contiguous
/// ranges. The returned records are in run order.
pub fn simulate_runs(
    cell: CellParams,
    runs: u64,
    seed: u64,
    first_index: u64,
    shards: usize,
) -> Result<Vec<RunRecord>> {
    let (prior, level) = cell.validate()?;
    if runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    let estimator = BayesEstimator::new(prior, level);
    let parts: Vec<Result<Vec<RunRecord>>> = shard_ranges(runs, shards)
        .into_par_iter()
        .map(|range| {
            range
                .map(|i| {
                    simulate_run(&prior, &estimator, seed, first_index + i).map_err(|e| Error::Run {
                        run: i,
                        source: Box::new(e),
                    })
                })
                .collect()
        })
        .collect();
    let mut records = Vec::with_capacity(runs as usize);
    for part in parts {
        records.extend(part?);
    }
    Ok(records)
}

struct MeanSe {
    mean: f64,
    se: f64,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, count: usize) -> MeanSe {
    let n = count as f64;
    let mean = values.clone().sum::<f64>() / n;
    let se = if count > 1 {
        let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se }
}

/// Sequential, run-ordered reduction of per-run records.
pub fn aggregate(cell: CellParams, seed: u64, records: &[RunRecord]) -> Result<CellResult> {
    let (_, level) = cell.validate()?;
    if records.is_empty() {
        return Err(invalid("cannot aggregate zero runs"));
    }
    let naive = mean_and_se(records.iter().map(|r| r.naive_error), records.len());
    let bayes = mean_and_se(records.iter().map(|r| r.bayes_error), records.len());
    let (mut bayes_better, mut naive_better, mut ties) = (0, 0, 0);
    for r in records {
        if r.bayes_error < r.naive_error {
            bayes_better += 1;
        } else if r.naive_error < r.bayes_error {
            naive_better += 1;
        } else {
            ties += 1;
        }
    }
    Ok(CellResult {
        n: cell.n,
        p: cell.p,
        epsilon: cell.epsilon,
        avg_err_naive: naive.mean,
        avg_err_naive_analytic: analytic_naive_error(&level),
        avg_err_bayes: bayes.mean,
        se_naive: naive.se,
        se_bayes: bayes.se,
        bayes_better,
        naive_better,
        ties,
        runs: records.len() as u64,
        seed,
    })
}

fn run_cell_at(cell: CellParams, runs: u64, seed: u64, first_index: u64, shards: usize) -> Result<CellResult> {
    let records = simulate_runs(cell, runs, seed, first_index, shards)?;
    aggregate(cell, seed, &records)
}

/// Simulates one cell on runs `0..runs` of `seed`.
pub fn run_cell(cell: CellParams, runs: u64, seed: u64) -> Result<CellResult> {
    run_cell_at(cell, runs, seed, 0, DEFAULT_SHARDS)
}

pub fn run_cell_sharded(cell: CellParams, runs: u64, seed: u64, shards: usize) -> Result<CellResult> {
    run_cell_at(cell, runs, seed, 0, shards)
}

/// Evaluates every grid cell. A failing cell is recorded in
/// [`SweepResult::failures`] and the remaining cells still run.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    if config.n_values.is_empty() || config.p_values.is_empty() || config.epsilon_values.is_empty() {
        return Err(invalid("sweep grids must be non-empty"));
    }
    if config.runs == 0 || config.shards == 0 {
        return Err(invalid("runs and shards must be at least 1"));
    }
    let outcomes: Vec<(CellParams, Result<CellResult>)> = config
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(c, cell)| {
            let first = c as u64 * config.runs;
            (cell, run_cell_at(cell, config.runs, config.seed, first, config.shards))
        })
        .collect();

    let mut result = SweepResult::default();
    for (cell, outcome) in outcomes {
        match outcome {
            Ok(r) => result.cells.push(r),
            Err(error) => result.failures.push(CellFailure { cell, error }),
        }
    }
    Ok(result)
}
