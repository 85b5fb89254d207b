use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("summary has no tokens")]
    EmptySummary,

    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("duplicate record for system `{system}`, example `{id}`")]
    DuplicateAnnotation { system: String, id: String },

    #[error("input is empty")]
    EmptyInput,

    #[error("percentile must lie in (0, 100), got {0}")]
    InvalidPercentile(f64),

    #[error("example has no judgments")]
    NoJudgments,

    #[error("annotations mix systems `{0}` and `{1}`")]
    MixedSystems(String, String),

    #[error("no coverage for example `{0}`")]
    MissingCoverage(String),

    #[error("a trade-off curve needs at least 2 control points, got {0}")]
    TooFewPoints(usize),

    #[error("control points share coverage {0}")]
    DuplicateCoverage(f64),

    #[error("value {value} for `{field}` is outside {range}")]
    OutOfRange {
        field: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("correlation undefined: {0}")]
    DegenerateVariance(&'static str),

    #[error("candidate `{system}` for example `{id}` has no human label")]
    MissingLabel { id: String, system: String },

    #[error("candidate `{system}` for example `{id}` has no faithfulness score")]
    MissingScore { id: String, system: String },

    #[error("labels contain a single class; ROC is undefined")]
    SingleClass,

    #[error("labels contain no positive example; F-beta is undefined")]
    NoPositives,

    #[error("{examples} examples cannot fill {folds} folds")]
    TooFewExamples { examples: usize, folds: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unit mismatch: file declares {declared}, run uses {requested}")]
    UnitMismatch {
        declared: &'static str,
        requested: &'static str,
    },

    #[error("example `{id}` has no candidate from system `{system}`")]
    MissingCandidate { id: String, system: String },

    #[error("duplicate candidate for system `{system}`, example `{id}`")]
    DuplicateCandidate { system: String, id: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
