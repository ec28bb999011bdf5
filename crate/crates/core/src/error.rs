use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Input data violates a series or file-format invariant.
    Data,
    /// A parameter or model precondition was violated.
    Model,
    /// Manifest or configuration problem.
    Config,
    /// Filesystem failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("series '{entity}' is empty")]
    EmptySeries { entity: String },

    #[error("series '{entity}' has an empty unit string")]
    EmptyUnit { entity: String },

    #[error("series '{entity}': year {year} does not follow {previous} (years must be strictly increasing)")]
    YearsNotIncreasing {
        entity: String,
        previous: i32,
        year: i32,
    },

    #[error("series '{entity}': non-finite value at year {year}")]
    NonFinite { entity: String, year: i32 },

    #[error("series '{entity}' ({kind}): negative value {value} at year {year}")]
    Negative {
        entity: String,
        kind: String,
        year: i32,
        value: f64,
    },

    #[error("series '{entity}': value {value} at year {year} must be strictly positive")]
    NonPositive {
        entity: String,
        year: i32,
        value: f64,
    },

    #[error("series '{entity}': missing interior years {missing:?}")]
    MissingYears { entity: String, missing: Vec<i32> },

    #[error("series '{entity}' needs at least {needed} points, found {found}")]
    TooFewPoints {
        entity: String,
        needed: usize,
        found: usize,
    },

    #[error("series '{entity}': expected unit '{expected}', found '{found}'")]
    UnitMismatch {
        entity: String,
        expected: String,
        found: String,
    },

    #[error("series '{entity}' has kind {found}, expected {expected}")]
    WrongKind {
        entity: String,
        expected: &'static str,
        found: String,
    },

    #[error("cannot align '{x}' with '{y}': only {common} common years (need at least 2)")]
    Alignment { x: String, y: String, common: usize },

    #[error("singular fit: {0}")]
    SingularFit(String),

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("potential difference is zero; interface growth is undefined (reservoir depleted)")]
    ZeroPotential,

    #[error("time {t} is outside the trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("window {start}..={end} is not covered by series '{entity}'")]
    Window {
        entity: String,
        start: i32,
        end: i32,
    },

    #[error("{}:{line}: {message}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },

    #[error("{kind} series required for {purpose}")]
    MissingSeries {
        kind: &'static str,
        purpose: &'static str,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    pub fn category(&self) -> Category {
        use Error::*;
        match self {
            EmptySeries { .. }
            | EmptyUnit { .. }
            | YearsNotIncreasing { .. }
            | NonFinite { .. }
            | Negative { .. }
            | NonPositive { .. }
            | MissingYears { .. }
            | TooFewPoints { .. }
            | UnitMismatch { .. }
            | WrongKind { .. }
            | Alignment { .. }
            | Csv { .. } => Category::Data,
            SingularFit(_) | InvalidParameter { .. } | ZeroPotential | OutOfSpan { .. } | Window { .. } => {
                Category::Model
            }
            Manifest { .. } | MissingSeries { .. } => Category::Config,
            Io { .. } | Serialize(_) => Category::Io,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_param(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value, reason })
    }
}
