//! Experiment runner around the solver core: line-oriented config files,
//! CSV and JSON artifacts, and the per-check drivers behind the CLI.

pub mod config;
pub mod csvio;
pub mod report;
pub mod runner;

/// Failure classification mapped onto process exit codes by the binary:
/// configuration and parse problems exit 2, criterion failures exit 1.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Criterion(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Criterion(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "config error: {msg}"),
            Failure::Criterion(msg) => write!(f, "criterion failure: {msg}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<pathlab_core::Error> for Failure {
    fn from(e: pathlab_core::Error) -> Self {
        Failure::Config(format!("{e:?}"))
    }
}

pub type Result<T> = std::result::Result<T, Failure>;
