//! Scenario-file front end for `invfilter-core`: parses JSON scenarios,
//! runs them, and writes CSV trajectories and plain-text reports.

pub mod commands;
mod error;
pub mod scenario;

pub use error::CliError;
pub use scenario::ScenarioFile;

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Infeasible,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Infeasible => 3,
        }
    }
}
