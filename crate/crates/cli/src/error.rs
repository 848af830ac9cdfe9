//! CLI failures and their exit codes.

use padic_radial::expr::{EvalError, ParseError};
use padic_radial::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("cannot parse {field} expression: {source}")]
    Parse {
        field: &'static str,
        source: ParseError,
    },
    #[error("cannot evaluate {field} expression at shell {shell}: {source}")]
    Eval {
        field: &'static str,
        shell: i64,
        source: EvalError,
    },
    #[error("{0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// Stable machine-readable name and process exit code.
    pub fn code(&self) -> (&'static str, i32) {
        match self {
            CliError::Config(_) => ("config", 3),
            CliError::Parse { .. } => ("expression_parse", 4),
            CliError::Eval { .. } => ("expression_eval", 5),
            CliError::Output(_) => ("output", 6),
            CliError::Core(e) => match e {
                Error::InvalidGrid(_) => ("invalid_grid", 10),
                Error::InvalidParameter(_) => ("invalid_parameter", 11),
                Error::InvalidFunction(_) => ("invalid_function", 12),
                Error::DivergentTail { .. } => ("divergent_tail", 13),
                Error::UnmodeledTail { .. } => ("unmodeled_tail", 14),
                Error::DomainViolation(_) => ("domain_violation", 15),
                Error::NonZeroTails => ("nonzero_tails", 16),
                Error::ScalingViolation { .. } => ("scaling_violation", 17),
                Error::NoContraction { .. } => ("no_contraction", 18),
                Error::ToleranceNotReached { .. } => ("tolerance_not_reached", 19),
                Error::ContractionFailure { .. } => ("contraction_failure", 20),
                Error::FrontierTooLow { .. } => ("frontier_too_low", 21),
                Error::CutoffTooHigh { .. } => ("cutoff_too_high", 22),
                Error::MissingBeta => ("missing_beta", 23),
                Error::MarginTooSmall { .. } => ("margin_too_small", 24),
                Error::RhsEvaluation { .. } => ("rhs_evaluation", 25),
            },
        }
    }

    /// `error code=<name> exit=<n> message="<text>"` on one line.
    pub fn report_line(&self) -> String {
        let (name, exit) = self.code();
        let message: String = self
            .to_string()
            .chars()
            .flat_map(|c| match c {
                '"' => vec!['\\', '"'],
                '\\' => vec!['\\', '\\'],
                '\n' | '\r' => vec![' '],
                c => vec![c],
            })
            .collect();
        format!("error code={name} exit={exit} message=\"{message}\"")
    }
}
