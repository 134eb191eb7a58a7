//! Scripted runs against a fresh system, producing a [`RunReport`].

mod report;
mod runner;
mod script;

pub use report::{ClockMode, IntentReport, PoseRateReport, RunReport, StepError};
pub use runner::{run_scenario, run_scenario_file, RunOptions};
pub use script::{Action, ScenarioScript, Step};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("step {index}: {message}")]
    Step { index: usize, message: String },
    #[error("reading scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("system setup: {0}")]
    Setup(String),
}
