//! Differentially private counting queries and Bayes correction of the
//! noisy answer.
//!
//! A counting query is answered with Laplace noise of scale `1/ε`. Given the
//! database size `n` and the probability `p` that a record satisfies the
//! predicate, the analyst can replace the raw answer by the posterior mean of
//! the true count under a `Binomial(n, p)` prior. The [`simulation`] module
//! compares the two estimators by Monte Carlo.

pub mod error;
pub mod estimators;
pub mod mechanism;
pub mod prior;
pub mod querydb;
pub mod simulation;
pub mod stream;

pub use error::{Error, Result};
pub use estimators::{
    bayes_estimate, naive_estimate, posterior, BayesEstimator, EstimateReport, NoisyResponse, Posterior,
};
pub use mechanism::{
    calibrate, dp_ratio_check, laplace_density, out_of_range_bounds, out_of_range_probability, sample_noise,
    LaplaceNoise, OutOfRangeBounds, OutOfRangeReport, PrivacyLevel,
};
pub use prior::{uncertainty_widths, BinomialPrior, UncertaintyWidths};
pub use querydb::{count_query, load_records, noisy_count_query, Predicate, PublicAnswer, QueryResult, RecordSet};
pub use simulation::{analytic_naive_error, run_cell, run_sweep, CellParams, CellResult, SweepConfig, SweepResult};
pub use stream::{FixedUniform, RunStream, UniformSource};
