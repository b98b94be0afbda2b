use thiserror::Error;

use crate::aggregation::AggregationError;
use crate::config::ConfigError;
use crate::domain::{DistributionError, TextError};
use crate::store::StoreError;

/// Every failure a platform operation can report. [`Error::code`] is the
/// stable machine code surfaced by the HTTP API.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Store(StoreError),
    #[error("version conflict")]
    VersionConflict,
    #[error("i/o error: {0}")]
    Io(String),

    #[error("unknown user")]
    UnknownUser,
    #[error("unknown level")]
    UnknownLevel,
    #[error("unknown session")]
    UnknownSession,
    #[error("unknown argument")]
    UnknownArgument,
    #[error("unknown topic")]
    UnknownTopic,
    #[error("unknown match")]
    UnknownMatch,
    #[error("unknown report")]
    UnknownReport,
    #[error("unknown aggregation batch")]
    UnknownBatch,
    #[error("language {0} is not supported")]
    UnsupportedLanguage(String),

    #[error("world is locked")]
    WorldLocked,
    #[error("session already completed")]
    SessionCompleted,
    #[error("session has unfinished rounds")]
    SessionIncomplete,
    #[error("no content available for this round")]
    ContentExhausted,
    #[error("no argument available for judging")]
    PoolEmpty,
    #[error("response does not match the current round")]
    WrongRound,
    #[error("guess is not one of the offered labels")]
    InvalidGuess,
    #[error("argument already judged by this rater")]
    DuplicateJudgment,

    #[error("player-vs-player world is locked")]
    PvpLocked,
    #[error("cannot challenge yourself")]
    SelfMatch,
    #[error("not your turn")]
    NotYourTurn,
    #[error("bot does not own the turn")]
    BotNotOwner,
    #[error("match is finished")]
    MatchFinished,
    #[error("not a participant of this match")]
    NotParticipant,

    #[error("cannot report your own argument")]
    SelfReport,
    #[error("forbidden")]
    Forbidden,
    #[error("report already resolved")]
    AlreadyResolved,
    #[error("handle already taken")]
    HandleTaken,
}

impl From<StoreError> for Error {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::VersionConflict { .. } => Error::VersionConflict,
            other => Error::Store(other),
        }
    }
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Text(e) => e.code(),
            Error::Distribution(_) => "malformed_distribution",
            Error::Config(e) => e.code(),
            Error::Aggregation(AggregationError::EmptyMatrix) => "empty_matrix",
            Error::Aggregation(AggregationError::InvalidSpec(_)) => "invalid_spec",
            Error::Aggregation(_) => "aggregation_error",
            Error::Store(StoreError::CorruptJournal(_)) => "corrupt_journal",
            Error::Store(_) => "io_error",
            Error::VersionConflict => "version_conflict",
            Error::Io(_) => "io_error",
            Error::UnknownUser => "unknown_user",
            Error::UnknownLevel => "unknown_level",
            Error::UnknownSession => "unknown_session",
            Error::UnknownArgument => "unknown_argument",
            Error::UnknownTopic => "unknown_topic",
            Error::UnknownMatch => "unknown_match",
            Error::UnknownReport => "unknown_report",
            Error::UnknownBatch => "unknown_batch",
            Error::UnsupportedLanguage(_) => "unsupported_language",
            Error::WorldLocked => "world_locked",
            Error::SessionCompleted => "session_completed",
            Error::SessionIncomplete => "session_incomplete",
            Error::ContentExhausted => "content_exhausted",
            Error::PoolEmpty => "pool_empty",
            Error::WrongRound => "wrong_round",
            Error::InvalidGuess => "invalid_guess",
            Error::DuplicateJudgment => "duplicate_judgment",
            Error::PvpLocked => "pvp_locked",
            Error::SelfMatch => "self_match",
            Error::NotYourTurn => "not_your_turn",
            Error::BotNotOwner => "bot_not_owner",
            Error::MatchFinished => "match_finished",
            Error::NotParticipant => "not_participant",
            Error::SelfReport => "self_report",
            Error::Forbidden => "forbidden",
            Error::AlreadyResolved => "already_resolved",
            Error::HandleTaken => "handle_taken",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
