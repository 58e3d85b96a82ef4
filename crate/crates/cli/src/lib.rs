//! Command implementations behind the `sample-design` binary.

pub mod args;
pub mod commands;
pub mod compare;

use thiserror::Error;

pub use args::Cli;

/// Process exit codes.
pub mod exit {
    pub const CONVERGED: i32 = 0;
    pub const ITERATION_CAPPED: i32 = 2;
    pub const INVALID_INPUT: i32 = 3;
    pub const INTERNAL: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => exit::INVALID_INPUT,
            CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

impl From<sample_design::Error> for CliError {
    fn from(e: sample_design::Error) -> Self {
        use sample_design::Error as E;
        match e {
            E::InvalidInstance(_)
            | E::InvalidConfig(_)
            | E::Schema { .. }
            | E::Parse(_)
            | E::OracleCap { .. }
            | E::AllSubsetsSingular { .. }
            | E::DimensionMismatch { .. }
            | E::InvalidConstraint(_)
            | E::Io(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

/// How a successful command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    IterationCapped,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Done => exit::CONVERGED,
            Outcome::IterationCapped => exit::ITERATION_CAPPED,
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    use args::Command;
    match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Compare(a) => commands::compare(&a),
    }
}
