use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: expected 3 tab-separated fields")]
    MalformedLine { source_name: String, line: usize },
    #[error("train and inference graphs share entities: {0:?}")]
    EntityOverlap(Vec<String>),
    #[error("relation `{0}` does not occur in the training graph")]
    UnknownRelation(String),
    #[error("test entity `{0}` does not occur in the inference graph")]
    DanglingTestEntity(String),
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
    #[error("reachability needs at least 2 entities, got {0}")]
    TooFewEntities(usize),
    #[error("{source_name}:{line}: expected `head<TAB>relation<TAB>tail<TAB>score`")]
    MalformedRecord { source_name: String, line: usize },
    #[error("{source_name}:{line}: score {value} outside [0, 1]")]
    ScoreOutOfRange {
        source_name: String,
        line: usize,
        value: f64,
    },
    #[error("membership {value} for entity {entity} outside [0, 1]")]
    MembershipOutOfRange { entity: u32, value: f64 },
    #[error("fuzzy score set must not be empty")]
    EmptyScoreSet,
    #[error("answer entity {0} is not in the score set")]
    AnswerNotInSet(u32),
    #[error("cutoff or bound check requires an answer entity")]
    AnswerMissing,
    #[error("score sets answer different queries")]
    QueryMismatch,
    #[error("need {needed} negative candidates but only {available} entities are eligible")]
    NotEnoughEntities { needed: usize, available: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Stable machine-readable code for error records.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::EntityOverlap(_) => "EntityOverlap",
            Error::UnknownRelation(_) => "UnknownRelation",
            Error::DanglingTestEntity(_) => "DanglingTestEntity",
            Error::UnknownEntity(_) => "UnknownEntity",
            Error::TooFewEntities(_) => "TooFewEntities",
            Error::MalformedRecord { .. } => "MalformedRecord",
            Error::ScoreOutOfRange { .. } => "ScoreOutOfRange",
            Error::MembershipOutOfRange { .. } => "MembershipOutOfRange",
            Error::EmptyScoreSet => "EmptyScoreSet",
            Error::AnswerNotInSet(_) => "AnswerNotInSet",
            Error::AnswerMissing => "AnswerMissing",
            Error::QueryMismatch => "QueryMismatch",
            Error::NotEnoughEntities { .. } => "NotEnoughEntities",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
