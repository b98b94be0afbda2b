//! Shared vocabulary: labels, identifiers, arguments, judgments, accounts and
//! score events.
//!
//! Everything here is a plain value. Mutation happens through the services in
//! [`crate::engine`], [`crate::pvp`] and [`crate::moderation`], which persist
//! new versions of these values through [`crate::store`].

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of classes in the label space.
pub const LABEL_COUNT: usize = 6;

/// Tolerance used when checking that a probability vector sums to one.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// The six classes of the game's inventory. The declaration order is the
/// tie-break order everywhere a maximum is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallacyLabel {
    AdHominem,
    AppealToEmotion,
    RedHerring,
    HastyGeneralization,
    IrrelevantAuthority,
    NoFallacy,
}

impl FallacyLabel {
    pub const ALL: [FallacyLabel; LABEL_COUNT] = [
        FallacyLabel::AdHominem,
        FallacyLabel::AppealToEmotion,
        FallacyLabel::RedHerring,
        FallacyLabel::HastyGeneralization,
        FallacyLabel::IrrelevantAuthority,
        FallacyLabel::NoFallacy,
    ];

    /// The five labels that name an actual fallacy.
    pub const FALLACIES: [FallacyLabel; 5] = [
        FallacyLabel::AdHominem,
        FallacyLabel::AppealToEmotion,
        FallacyLabel::RedHerring,
        FallacyLabel::HastyGeneralization,
        FallacyLabel::IrrelevantAuthority,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<FallacyLabel> {
        Self::ALL.get(index).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            FallacyLabel::AdHominem => "ad_hominem",
            FallacyLabel::AppealToEmotion => "appeal_to_emotion",
            FallacyLabel::RedHerring => "red_herring",
            FallacyLabel::HastyGeneralization => "hasty_generalization",
            FallacyLabel::IrrelevantAuthority => "irrelevant_authority",
            FallacyLabel::NoFallacy => "no_fallacy",
        }
    }

    pub fn from_code(code: &str) -> Option<FallacyLabel> {
        Self::ALL.into_iter().find(|l| l.code() == code)
    }

    pub fn is_fallacy(self) -> bool {
        self != FallacyLabel::NoFallacy
    }

    /// Locale key of the educational explanation shown in feedback screens.
    pub fn explanation_key(self) -> String {
        format!("fallacy.{}.explanation", self.code())
    }

    /// Locale key of the display name.
    pub fn name_key(self) -> String {
        format!("fallacy.{}.name", self.code())
    }
}

impl fmt::Display for FallacyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

id_type!(
    /// A human account, the built-in bot, or the pseudo-author of seed content.
    UserId
);
id_type!(ArgumentId);
id_type!(TopicId);
id_type!(WorldId);
id_type!(LevelId);
id_type!(RoundId);
id_type!(SessionId);
id_type!(MatchId);
id_type!(ReportId);
id_type!(BatchId);
id_type!(NotificationId);

impl UserId {
    /// The heuristic PvP opponent.
    pub fn bot() -> UserId {
        UserId::new("bot")
    }

    /// Pseudo-author of content-pack seed arguments.
    pub fn seed() -> UserId {
        UserId::new("seed")
    }

    pub fn is_bot(&self) -> bool {
        self.0 == "bot"
    }

    pub fn is_seed(&self) -> bool {
        self.0 == "seed"
    }

    /// Whether judgments by this rater may enter aggregation.
    pub fn is_human(&self) -> bool {
        !self.is_bot() && !self.is_seed()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topic {
    pub id: TopicId,
    pub language: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgumentStatus {
    Active,
    Flagged,
    Removed,
}

/// Result of one aggregation run for one argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldAssignment {
    pub label: FallacyLabel,
    pub posterior: [f64; LABEL_COUNT],
    pub entropy_nats: f64,
    pub batch_id: BatchId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    pub id: ArgumentId,
    pub author_id: UserId,
    pub topic_id: TopicId,
    pub language: String,
    pub text: String,
    pub assigned_type: FallacyLabel,
    pub created_at: DateTime<Utc>,
    pub status: ArgumentStatus,
    pub gold: Option<GoldAssignment>,
}

impl Argument {
    /// Visible to players in judging pools and PvP lookups.
    pub fn is_playable(&self) -> bool {
        self.status == ArgumentStatus::Active
    }

    pub fn is_seed(&self) -> bool {
        self.author_id.is_seed()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgmentSource {
    Authored,
    RecognitionRound,
    PvpGuess,
}

/// One vote on one argument. The store key is `(item_id, rater_id)`, which
/// makes the pair unique.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub item_id: ArgumentId,
    pub rater_id: UserId,
    pub label: FallacyLabel,
    pub source: JudgmentSource,
    pub created_at: DateTime<Utc>,
}

impl Judgment {
    pub fn key(&self) -> String {
        judgment_key(&self.item_id, &self.rater_id)
    }
}

pub fn judgment_key(item: &ArgumentId, rater: &UserId) -> String {
    format!("{}|{}", item, rater)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Player,
    Admin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAccount {
    pub id: UserId,
    pub handle: String,
    pub avatar_id: u32,
    pub password_digest: String,
    pub roles: Vec<Role>,
    pub total_points: u64,
    pub created_at: DateTime<Utc>,
}

impl UserAccount {
    pub fn is_admin(&self) -> bool {
        self.roles.contains(&Role::Admin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreReason {
    SoftFeedback,
    HardCorrect,
    WriteSubmit,
    DeferredAuthorBonus,
    PvpGuessCorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreEvent {
    pub id: String,
    pub user_id: UserId,
    pub points: u64,
    pub reason: ScoreReason,
    pub occurred_at: DateTime<Utc>,
    /// Session, match or argument the points were earned on.
    pub reference: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextLimits {
    pub min_chars: usize,
    pub max_chars: usize,
}

impl Default for TextLimits {
    fn default() -> Self {
        TextLimits {
            min_chars: 10,
            max_chars: 600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("argument text is empty")]
    Empty,
    #[error("argument text is shorter than {min} characters")]
    TooShort { min: usize },
    #[error("argument text is longer than {max} characters")]
    TooLong { max: usize },
}

impl TextError {
    pub fn code(&self) -> &'static str {
        match self {
            TextError::Empty => "empty",
            TextError::TooShort { .. } => "too_short",
            TextError::TooLong { .. } => "too_long",
        }
    }
}

/// Checks the trimmed length of `text` in characters.
pub fn validate_argument_text(text: &str, limits: TextLimits) -> Result<(), TextError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(TextError::Empty);
    }
    let len = trimmed.chars().count();
    if len < limits.min_chars {
        Err(TextError::TooShort {
            min: limits.min_chars,
        })
    } else if len > limits.max_chars {
        Err(TextError::TooLong {
            max: limits.max_chars,
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("malformed distribution: {0}")]
pub struct DistributionError(pub String);

/// Validates a probability vector over the label space.
pub fn check_distribution(p: &[f64]) -> Result<(), DistributionError> {
    if p.len() != LABEL_COUNT {
        return Err(DistributionError(format!(
            "expected {LABEL_COUNT} entries, got {}",
            p.len()
        )));
    }
    if let Some(bad) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(DistributionError(format!("invalid probability {bad}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(DistributionError(format!("sums to {sum}")));
    }
    Ok(())
}

/// Index of the first maximal entry.
pub(crate) fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Label of maximal probability; exact ties go to the earliest label.
pub fn argmax_label(posterior: &[f64]) -> Result<FallacyLabel, DistributionError> {
    check_distribution(posterior)?;
    Ok(FallacyLabel::ALL[first_argmax(posterior)])
}
