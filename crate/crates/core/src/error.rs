use std::path::PathBuf;

use crate::uc::UcSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a unit-commitment model could not be solved.
#[derive(Debug, Clone, PartialEq)]
pub enum InfeasibilityCause {
    /// Installed capacity cannot cover the demand of one hour.
    CapacityShortfall { hour: usize, demand: f64, capacity: f64 },
    /// The model became infeasible once these transmission lines were enforced.
    LineSet { lines: Vec<usize> },
    /// Unit constraints (ramping, minimum up/down, minimum output) cannot be met.
    UnitConstraints,
    /// No commitment schedule admits a feasible dispatch.
    NoFeasibleCommitment,
}

impl std::fmt::Display for InfeasibilityCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::CapacityShortfall { hour, demand, capacity } => write!(
                f,
                "capacity shortfall in hour {hour}: demand {demand:.3} MW exceeds {capacity:.3} MW"
            ),
            Self::LineSet { lines } => write!(f, "infeasible with transmission lines {lines:?}"),
            Self::UnitConstraints => write!(f, "unit operating constraints cannot be satisfied"),
            Self::NoFeasibleCommitment => write!(f, "no commitment schedule is feasible"),
        }
    }
}

/// Incumbent returned when a solve stops on a time or round limit.
#[derive(Debug, Clone)]
pub struct PartialResult {
    pub reason: String,
    pub incumbent: Option<UcSolution>,
    pub gap: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid {field} at index {index}: {message}")]
    Validation {
        field: &'static str,
        index: usize,
        message: String,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("injections are unbalanced: sum = {sum:.3e} MW")]
    Unbalanced { sum: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("commitment logic violated by generator {generator} at hour {hour}: {rule}")]
    LogicViolation {
        generator: usize,
        hour: usize,
        rule: &'static str,
    },

    #[error("infeasible: {0}")]
    Infeasible(InfeasibilityCause),

    #[error("solve stopped early ({}) with gap {:.3e}", .0.reason, .0.gap)]
    Partial(Box<PartialResult>),

    #[error("enumeration bound exceeded: {cells} commitment cells > {limit}")]
    EnumerationBound { cells: usize, limit: usize },

    #[error("solver backend failure: {0}")]
    Backend(String),

    #[error("too many failed instances: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{}:{line}:{column}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported schema version {found:?} (expected {expected:?})")]
    SchemaVersion { found: String, expected: String },

    #[error("unsupported features in external file: {}", .sections.join(", "))]
    Unsupported { sections: Vec<String> },

    #[error("i/o error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    pub(crate) fn validation(field: &'static str, index: usize, message: impl Into<String>) -> Self {
        Self::Validation {
            field,
            index,
            message: message.into(),
        }
    }

    pub(crate) fn dims(expected: impl std::fmt::Display, actual: impl std::fmt::Display) -> Self {
        Self::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    /// True for failures of the optimization itself as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Self::Infeasible(_)
                | Self::Partial(_)
                | Self::Backend(_)
                | Self::Numerical(_)
                | Self::TooManyFailures { .. }
        )
    }
}
