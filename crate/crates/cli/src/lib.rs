//! Experiment runner for the `repnet` library: flat configs, CSV output and
//! text weight files.

pub mod config;
pub mod persist;
pub mod run;

pub use config::{Experiment, ExperimentConfig, Settings};
pub use run::{run, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("experiment failed: {0}")]
    Experiment(String),
    #[error(transparent)]
    Core(#[from] repnet::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
