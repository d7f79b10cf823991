use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dpbayes::mechanism::min_out_of_range_approx;
use dpbayes::{
    calibrate, load_records, noisy_count_query, out_of_range_bounds, out_of_range_probability, run_sweep,
    uncertainty_widths, BayesEstimator, BinomialPrior, FixedUniform, NoisyResponse, Predicate, PrivacyLevel, RunStream,
    SweepConfig,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::args::{AnalyzeArgs, NoiseHook, QueryArgs, SweepArgs};

pub const SEED_ENV: &str = "DPBAYES_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or inputs; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// Failure while executing; exit status 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(err: impl ToString) -> CliError {
    CliError::Usage(err.to_string())
}

fn runtime(err: impl ToString) -> CliError {
    CliError::Runtime(err.to_string())
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}={raw:?} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Sweep settings as read from a TOML file; every key is optional.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub n_values: Option<Vec<u64>>,
    pub p_values: Option<Vec<f64>>,
    pub epsilon_values: Option<Vec<f64>>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub shards: Option<usize>,
}

pub fn resolve_sweep_config(args: &SweepArgs) -> Result<SweepConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            toml::from_str::<SweepFile>(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SweepFile::default(),
    };
    let defaults = SweepConfig::default();
    let pick = |flag: &Vec<f64>, file: Option<Vec<f64>>, default: Vec<f64>| {
        if !flag.is_empty() {
            flag.clone()
        } else {
            file.unwrap_or(default)
        }
    };
    let config = SweepConfig {
        n_values: if args.n.is_empty() {
            file.n_values.unwrap_or(defaults.n_values)
        } else {
            args.n.clone()
        },
        p_values: pick(&args.p, file.p_values, defaults.p_values),
        epsilon_values: pick(&args.eps, file.epsilon_values, defaults.epsilon_values),
        runs: args.runs.or(file.runs).unwrap_or(defaults.runs),
        seed: match args.seed.or(file.seed) {
            Some(seed) => seed,
            None => env_seed()?.unwrap_or(defaults.seed),
        },
        shards: args.shards.or(file.shards).unwrap_or(defaults.shards),
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

pub fn sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = resolve_sweep_config(args)?;
    let result = run_sweep(&config).map_err(runtime)?;

    match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            result.write_csv(&mut out).and_then(|_| out.flush()).map_err(runtime)?;
        }
        None => result.write_csv(&mut *stdout).map_err(runtime)?,
    }

    if !result.failures.is_empty() {
        for f in &result.failures {
            let _ = writeln!(
                stderr,
                "cell n={} p={} eps={} failed: {}",
                f.cell.n, f.cell.p, f.cell.epsilon, f.error
            );
        }
        return Err(runtime(format!(
            "{} of {} cells failed",
            result.failures.len(),
            config.cells().len()
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EstimateLine {
    bayes_estimate: f64,
    n: u64,
    p: f64,
}

fn read_data(path: &Path) -> Result<dpbayes::RecordSet, CliError> {
    let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    load_records(io::BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn query(args: &QueryArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let level = calibrate(args.eps).map_err(usage)?;
    let predicate: Predicate = args.predicate.parse().map_err(usage)?;
    let estimator_prior = if args.estimate {
        let p = args.p.ok_or_else(|| usage("--estimate needs --p"))?;
        if args.n.is_none() && !args.n_known {
            return Err(usage("--estimate needs --n <size> or --n-known"));
        }
        Some(p)
    } else {
        None
    };

    let db = read_data(&args.data)?;
    let result = match args.noise_hook {
        Some(NoiseHook::Median) => noisy_count_query(&db, &predicate, &level, &mut FixedUniform(0.5)),
        None => {
            let seed = match args.seed {
                Some(seed) => seed,
                None => env_seed()?.unwrap_or_else(rand::random),
            };
            noisy_count_query(&db, &predicate, &level, &mut RunStream::new(seed, 0))
        }
    };
    let answer = result.public_answer();
    writeln!(stdout, "{}", answer.to_json_line()).map_err(runtime)?;

    if let Some(p) = estimator_prior {
        let n = args.n.unwrap_or(db.len() as u64);
        let prior = BinomialPrior::new(n, p).map_err(usage)?;
        let bayes = BayesEstimator::new(prior, level)
            .estimate(NoisyResponse::new(answer.noisy_value).map_err(runtime)?)
            .map_err(runtime)?;
        let line = serde_json::to_string(&EstimateLine {
            bayes_estimate: bayes,
            n,
            p,
        })
        .map_err(runtime)?;
        writeln!(stdout, "{line}").map_err(runtime)?;
    }
    Ok(())
}

fn fmt_prob(p: f64) -> String {
    if p >= 1e-4 {
        format!("{p:.7}")
    } else {
        format!("{p:.6e}")
    }
}

fn fmt_set(values: &[u64]) -> String {
    let mut values = values.to_vec();
    values.dedup();
    let items: Vec<String> = values.iter().map(u64::to_string).collect();
    format!("{{{}}}", items.join(", "))
}

fn write_bounds(out: &mut dyn Write, n: u64, level: &PrivacyLevel) -> Result<(), CliError> {
    let b = out_of_range_bounds(n, level).map_err(usage)?;
    writeln!(out, "out-of-range bounds (n={n}, eps={})", level.epsilon())
        .and_then(|_| writeln!(out, "max_prob {} at a in {}", fmt_prob(b.max_prob), fmt_set(&b.argmax)))
        .and_then(|_| writeln!(out, "min_prob {} at a in {}", fmt_prob(b.min_prob), fmt_set(&b.argmin)))
        .and_then(|_| {
            writeln!(
                out,
                "min_prob_closed_form {}",
                fmt_prob(min_out_of_range_approx(n, level))
            )
        })
        .map_err(runtime)
}

pub fn analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let level = calibrate(args.eps).map_err(usage)?;
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if args.widths && args.p.is_none() {
        return Err(usage("--widths needs --p"));
    }
    let out = stdout;

    if let Some(a) = args.a {
        let report = out_of_range_probability(a, args.n, &level).map_err(usage)?;
        writeln!(
            out,
            "P*(a={a}, n={}, eps={}) = {}",
            args.n,
            args.eps,
            fmt_prob(report.probability)
        )
        .map_err(runtime)?;
    }
    if args.bounds {
        write_bounds(out, args.n, &level)?;
    }
    if args.widths {
        let prior = BinomialPrior::new(args.n, args.p.unwrap_or_default()).map_err(usage)?;
        let w = uncertainty_widths(&prior, &level);
        writeln!(out, "interval widths (n={}, p={}, eps={})", args.n, prior.p(), args.eps)
            .and_then(|_| writeln!(out, "binomial_width {:.2}", w.binomial_width))
            .and_then(|_| writeln!(out, "laplace_width {:.2}", w.laplace_width))
            .map_err(runtime)?;
    }
    if args.a.is_none() && !args.bounds && !args.widths {
        writeln!(out, "a,probability").map_err(runtime)?;
        for a in 0..=args.n {
            let p = out_of_range_probability(a, args.n, &level).map_err(usage)?.probability;
            writeln!(out, "{a},{p}").map_err(runtime)?;
        }
    }
    Ok(())
}
