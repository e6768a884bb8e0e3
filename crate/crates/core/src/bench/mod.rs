//! Problem files, experiment orchestration, rate fits and CSV output.

mod experiment;
mod problem;
mod rate;

use thiserror::Error;

pub use experiment::{
    run_experiment, run_problem, write_csv, DistanceCsvRow, ExperimentBundle, ExperimentConfig, LadderCsvRow, LemmaCsvRow, RateCsvRow,
    DISTANCE_NOISE_FLOOR,
};
pub use problem::{parse_problem, parse_problem_str, Problem, ProblemFile, ProblemMeta};
pub use rate::{fit_rate, fit_rate_above, RateFit};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("rate fit needs {needed} positive values, found {found}")]
    TooFewPoints { found: usize, needed: usize },
}
