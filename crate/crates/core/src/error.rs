//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The power branch never reaches the isolated-vehicle ratio of 1,
    /// so no finite critical gap exists for the model.
    #[error("no breakpoint: the ratio curve never reaches 1 within ({lo}, {hi}) m")]
    NoBreakpoint { lo: f64, hi: f64 },

    /// The fit problem is malformed (bad bounds, wrong series kind, ...).
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// The solver exhausted its damping schedule without finding a
    /// downhill step.
    #[error("non-convergence after {iterations} iterations (rss {rss:.3e}, gradient {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        rss: f64,
        gradient_norm: f64,
    },

    /// The quadratic fuel map has no root at or above zero power, i.e. the
    /// fuel value lies below the idle rate.
    #[error("no non-negative power root: fuel {fuel:.6e} is below idle {idle:.6e}")]
    NoPositiveRoot { fuel: f64, idle: f64 },

    /// A pointwise failure inside a series operation, tagged with the
    /// zero-based point index.
    #[error("point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Malformed input file. `line` is 1-based and counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidProblem(msg.into())
    }

    pub fn parse(line: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub fn at_point(index: usize, source: Error) -> Self {
        Error::AtPoint {
            index,
            source: Box::new(source),
        }
    }

    /// Stable machine-readable category, used by the CLI for exit codes
    /// and structured error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::Io(_) => "parse",
            Error::Domain(_)
            | Error::NoBreakpoint { .. }
            | Error::InvalidProblem(_)
            | Error::NoPositiveRoot { .. } => "invalid-problem",
            Error::NonConvergence { .. } => "non-convergence",
            Error::AtPoint { source, .. } => source.category(),
        }
    }
}
