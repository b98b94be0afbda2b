//! Worlds, levels and rounds: serving round data, scoring responses,
//! progression and leaderboards.

mod leaderboard;
mod progress;
mod selection;

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{LevelConfig, RoundConfig, RoundKind, WorldConfig};
use crate::domain::{
    judgment_key, validate_argument_text, Argument, ArgumentId, ArgumentStatus, FallacyLabel,
    Judgment, JudgmentSource, LevelId, RoundId, ScoreEvent, ScoreReason, SessionId, TextLimits,
    Topic, TopicId, UserAccount, UserId,
};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::store::{Keyed, Tx};

pub use leaderboard::{build_leaderboard, iso_week_bounds, Leaderboard, LeaderboardEntry, Period};
pub use progress::{
    fog_fraction, world_complete, world_unlocked, LevelView, ProgressDelta, ProgressRecord,
    ProgressionView, WorldView,
};
pub use selection::{judgeable, select_argument_for_judging, tier, JudgmentIndex, Tier};

/// Locale key shown with soft feedback on recognition rounds.
pub const SOFT_FEEDBACK_KEY: &str = "feedback.soft";
/// Locale key shown after a write round.
pub const WRITE_FEEDBACK_KEY: &str = "feedback.write";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Soft,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub kind: FeedbackKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<FallacyLabel>,
    pub explanation_key: String,
}

impl Feedback {
    pub fn soft(explanation_key: &str) -> Feedback {
        Feedback {
            kind: FeedbackKind::Soft,
            correct: None,
            gold_label: None,
            explanation_key: explanation_key.to_owned(),
        }
    }

    pub fn hard(correct: bool, gold: FallacyLabel) -> Feedback {
        Feedback {
            kind: FeedbackKind::Hard,
            correct: Some(correct),
            gold_label: Some(gold),
            explanation_key: gold.explanation_key(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoundResponse {
    Write {
        argument_id: ArgumentId,
    },
    Guess {
        argument_id: ArgumentId,
        label: FallacyLabel,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round_id: RoundId,
    pub response: RoundResponse,
    pub reward: u64,
    pub feedback_kind: FeedbackKind,
}

/// Round data drawn when the cursor reaches a round, so that reading the
/// current round never changes state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PendingRound {
    Write {
        round_id: RoundId,
        topic_id: TopicId,
        assigned_type: FallacyLabel,
    },
    Recognize {
        round_id: RoundId,
        argument_id: ArgumentId,
        candidates: Vec<FallacyLabel>,
    },
    /// Nothing was left to judge when the round was drawn.
    Unavailable { round_id: RoundId },
}

impl PendingRound {
    pub fn round_id(&self) -> &RoundId {
        match self {
            PendingRound::Write { round_id, .. }
            | PendingRound::Recognize { round_id, .. }
            | PendingRound::Unavailable { round_id } => round_id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    InProgress,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSession {
    pub id: SessionId,
    pub user_id: UserId,
    pub level_id: LevelId,
    pub language: String,
    pub round_cursor: usize,
    pub rounds_total: usize,
    pub round_results: Vec<RoundResult>,
    pub state: SessionState,
    pub pending: Option<PendingRound>,
    pub created_at: DateTime<Utc>,
}

impl Keyed for LevelSession {
    fn key(&self) -> String {
        self.id.0.clone()
    }
}

impl LevelSession {
    pub fn is_completed(&self) -> bool {
        self.state == SessionState::Completed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoundPayload {
    WriteFallacy {
        topic: Topic,
        assigned_type: FallacyLabel,
        name_key: String,
        explanation_key: String,
        description: Option<String>,
        text_limits: TextLimits,
    },
    RecognizeFallacy {
        argument_id: ArgumentId,
        text: String,
        topic: Topic,
        candidates: Vec<FallacyLabel>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundView {
    pub session_id: SessionId,
    pub round_id: RoundId,
    pub round_index: usize,
    pub rounds_total: usize,
    pub payload: RoundPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundOutcome {
    pub feedback: Feedback,
    pub reward: u64,
    pub session: LevelSession,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub progress: Option<ProgressDelta>,
}

/// Credits `points` to `user`, keeping `total_points` equal to the sum of the
/// user's score events. Zero awards leave no trace.
pub(crate) fn award(
    tx: &mut Tx<'_>,
    user: &UserId,
    points: u64,
    reason: ScoreReason,
    reference: &str,
    at: DateTime<Utc>,
) -> Result<Option<ScoreEvent>> {
    if points == 0 || !user.is_human() {
        return Ok(None);
    }
    let mut account = tx
        .get::<UserAccount>(user.as_str())
        .ok_or(Error::UnknownUser)?;
    account.total_points += points;
    tx.put(account);
    let event = ScoreEvent {
        id: tx.next_id("score"),
        user_id: user.clone(),
        points,
        reason,
        occurred_at: at,
        reference: reference.to_owned(),
    };
    tx.put(event.clone());
    Ok(Some(event))
}

pub(crate) fn put_judgment(
    tx: &mut Tx<'_>,
    item: &ArgumentId,
    rater: &UserId,
    label: FallacyLabel,
    source: JudgmentSource,
    at: DateTime<Utc>,
) -> Result<()> {
    if tx.get::<Judgment>(&judgment_key(item, rater)).is_some() {
        return Err(Error::DuplicateJudgment);
    }
    tx.put(Judgment {
        item_id: item.clone(),
        rater_id: rater.clone(),
        label,
        source,
        created_at: at,
    });
    Ok(())
}

fn write_subset(level: &LevelConfig) -> Vec<FallacyLabel> {
    level
        .fallacy_subset
        .iter()
        .copied()
        .filter(|l| l.is_fallacy())
        .collect()
}

impl Platform {
    fn lookup_level(&self, level_id: &LevelId) -> Result<(&WorldConfig, &LevelConfig)> {
        self.config().level(level_id).ok_or(Error::UnknownLevel)
    }

    fn round_config(&self, id: &RoundId) -> &RoundConfig {
        self.config()
            .round(id)
            .expect("validated config resolves every round id")
    }

    pub fn start_level(
        &self,
        user: &UserId,
        level_id: &LevelId,
        language: &str,
    ) -> Result<LevelSession> {
        let (world, level) = self.lookup_level(level_id)?;
        if self.catalog.pack(language).is_none() {
            return Err(Error::UnsupportedLanguage(language.to_owned()));
        }
        let now = self.clock.now();
        self.store.transact(|tx| {
            tx.get::<UserAccount>(user.as_str())
                .ok_or(Error::UnknownUser)?;
            let progress = tx
                .get::<ProgressRecord>(user.as_str())
                .unwrap_or_else(|| ProgressRecord::new(user.clone()));
            if !world_unlocked(self.config(), &progress, world) {
                return Err(Error::WorldLocked);
            }
            let mut session = LevelSession {
                id: SessionId::new(tx.next_id("ses")),
                user_id: user.clone(),
                level_id: level_id.clone(),
                language: language.to_owned(),
                round_cursor: 0,
                rounds_total: level.rounds.len(),
                round_results: Vec::new(),
                state: SessionState::InProgress,
                pending: None,
                created_at: now,
            };
            session.pending = Some(self.prepare_round(tx, &session, level)?);
            tx.put(session.clone());
            Ok(session)
        })
    }

    /// Draws the data for the round under the session cursor.
    fn prepare_round(
        &self,
        tx: &Tx<'_>,
        session: &LevelSession,
        level: &LevelConfig,
    ) -> Result<PendingRound> {
        let round = self.round_config(&level.rounds[session.round_cursor]);
        let round_id = round.id.clone();
        match round.kind {
            RoundKind::WriteFallacy => {
                let subset = write_subset(level);
                let pack = self
                    .catalog
                    .pack(&session.language)
                    .ok_or_else(|| Error::UnsupportedLanguage(session.language.clone()))?;
                let pinned = round.topic_id.as_ref().and_then(|t| pack.topic(t));
                let mut topics: Vec<&Topic> = pack.topics.iter().collect();
                topics.sort_by(|a, b| a.id.cmp(&b.id));
                if pinned.is_none() && topics.is_empty() {
                    return Ok(PendingRound::Unavailable { round_id });
                }
                let (assigned_type, topic_id) = self.with_rng(|rng| {
                    let label = subset[rng.random_range(0..subset.len())];
                    let topic = match pinned {
                        Some(t) => t.id.clone(),
                        None => topics[rng.random_range(0..topics.len())].id.clone(),
                    };
                    (label, topic)
                });
                Ok(PendingRound::Write {
                    round_id,
                    topic_id,
                    assigned_type,
                })
            }
            RoundKind::RecognizeFallacy => {
                let candidates = round
                    .candidates
                    .clone()
                    .unwrap_or_else(|| FallacyLabel::ALL.to_vec());
                let pool = tx.scan::<Argument>(|a| a.language == session.language);
                let index = JudgmentIndex::build(&tx.scan::<Judgment>(|_| true));
                let min_votes = self.config().aggregation.min_votes as usize;
                let picked = self.with_rng(|rng| {
                    match select_argument_for_judging(
                        &pool,
                        &index,
                        &session.user_id,
                        &session.language,
                        &level.fallacy_subset,
                        min_votes,
                        rng,
                    ) {
                        Ok(a) => Some(a.id.clone()),
                        Err(_) => seed_fallback(&pool, &index, session, &level.fallacy_subset, rng),
                    }
                });
                Ok(match picked {
                    Some(argument_id) => PendingRound::Recognize {
                        round_id,
                        argument_id,
                        candidates,
                    },
                    None => PendingRound::Unavailable { round_id },
                })
            }
        }
    }

    fn session_for(&self, session_id: &SessionId, user: &UserId) -> Result<LevelSession> {
        let session = self
            .store
            .get::<LevelSession>(session_id.as_str())
            .ok_or(Error::UnknownSession)?;
        if &session.user_id != user {
            return Err(Error::UnknownSession);
        }
        Ok(session)
    }

    pub fn session(&self, session_id: &SessionId, user: &UserId) -> Result<LevelSession> {
        self.session_for(session_id, user)
    }

    /// The current round of a session. Pure read.
    pub fn serve_round(&self, session_id: &SessionId, user: &UserId) -> Result<RoundView> {
        let session = self.session_for(session_id, user)?;
        if session.is_completed() {
            return Err(Error::SessionCompleted);
        }
        let pending = session.pending.as_ref().ok_or(Error::ContentExhausted)?;
        let payload = match pending {
            PendingRound::Write {
                topic_id,
                assigned_type,
                ..
            } => RoundPayload::WriteFallacy {
                topic: self
                    .catalog
                    .topic(topic_id)
                    .ok_or(Error::UnknownTopic)?
                    .clone(),
                assigned_type: *assigned_type,
                name_key: assigned_type.name_key(),
                explanation_key: assigned_type.explanation_key(),
                description: self
                    .catalog
                    .description(&session.language, *assigned_type)
                    .map(str::to_owned),
                text_limits: self.config().text_limits,
            },
            PendingRound::Recognize {
                argument_id,
                candidates,
                ..
            } => {
                let argument = self
                    .argument(argument_id)
                    .filter(Argument::is_playable)
                    .ok_or(Error::ContentExhausted)?;
                RoundPayload::RecognizeFallacy {
                    argument_id: argument.id,
                    text: argument.text,
                    topic: self
                        .catalog
                        .topic(&argument.topic_id)
                        .ok_or(Error::UnknownTopic)?
                        .clone(),
                    candidates: candidates.clone(),
                }
            }
            PendingRound::Unavailable { .. } => return Err(Error::ContentExhausted),
        };
        Ok(RoundView {
            session_id: session.id.clone(),
            round_id: pending.round_id().clone(),
            round_index: session.round_cursor,
            rounds_total: session.rounds_total,
            payload,
        })
    }

    /// Redraws the current round if it could not be served, e.g. because
    /// nothing was left to judge or the drawn argument was removed since.
    pub fn refresh_round(&self, session_id: &SessionId, user: &UserId) -> Result<LevelSession> {
        self.session_for(session_id, user)?;
        self.store.transact(|tx| {
            let mut session = tx
                .get::<LevelSession>(session_id.as_str())
                .ok_or(Error::UnknownSession)?;
            if session.is_completed() {
                return Err(Error::SessionCompleted);
            }
            let stale = match &session.pending {
                None | Some(PendingRound::Unavailable { .. }) => true,
                Some(PendingRound::Recognize { argument_id, .. }) => !tx
                    .get::<Argument>(argument_id.as_str())
                    .is_some_and(|a| a.is_playable()),
                Some(PendingRound::Write { .. }) => false,
            };
            if stale {
                let (_, level) = self.lookup_level(&session.level_id)?;
                session.pending = Some(self.prepare_round(tx, &session, level)?);
                tx.put(session.clone());
            }
            Ok(session)
        })
    }

    pub fn submit_write_round(
        &self,
        session_id: &SessionId,
        user: &UserId,
        round_id: &RoundId,
        text: &str,
    ) -> Result<RoundOutcome> {
        self.session_for(session_id, user)?;
        let now = self.clock.now();
        self.store.transact(|tx| {
            let mut session = self.open_session(tx, session_id, round_id)?;
            let Some(PendingRound::Write {
                topic_id,
                assigned_type,
                ..
            }) = session.pending.clone()
            else {
                return Err(Error::WrongRound);
            };
            validate_argument_text(text, self.config().text_limits)?;
            let argument = Argument {
                id: ArgumentId::new(tx.next_id("arg")),
                author_id: user.clone(),
                topic_id,
                language: session.language.clone(),
                text: text.trim().to_owned(),
                assigned_type,
                created_at: now,
                status: ArgumentStatus::Active,
                gold: None,
            };
            put_judgment(
                tx,
                &argument.id,
                user,
                assigned_type,
                JudgmentSource::Authored,
                now,
            )?;
            let reward = self.config().scoring.write_submit_points;
            award(
                tx,
                user,
                reward,
                ScoreReason::WriteSubmit,
                argument.id.as_str(),
                now,
            )?;
            let feedback = Feedback::soft(WRITE_FEEDBACK_KEY);
            session.round_results.push(RoundResult {
                round_id: round_id.clone(),
                response: RoundResponse::Write {
                    argument_id: argument.id.clone(),
                },
                reward,
                feedback_kind: feedback.kind,
            });
            tx.put(argument);
            self.advance(tx, session, feedback, reward, now)
        })
    }

    pub fn submit_recognition_round(
        &self,
        session_id: &SessionId,
        user: &UserId,
        round_id: &RoundId,
        guess: FallacyLabel,
    ) -> Result<RoundOutcome> {
        self.session_for(session_id, user)?;
        let now = self.clock.now();
        self.store.transact(|tx| {
            let mut session = self.open_session(tx, session_id, round_id)?;
            let (argument_id, candidates) = match session.pending.clone() {
                Some(PendingRound::Recognize {
                    argument_id,
                    candidates,
                    ..
                }) => (argument_id, candidates),
                Some(PendingRound::Unavailable { .. }) => return Err(Error::ContentExhausted),
                _ => return Err(Error::WrongRound),
            };
            if !candidates.contains(&guess) {
                return Err(Error::InvalidGuess);
            }
            let argument = tx
                .get::<Argument>(argument_id.as_str())
                .filter(Argument::is_playable)
                .ok_or(Error::ContentExhausted)?;
            put_judgment(
                tx,
                &argument_id,
                user,
                guess,
                JudgmentSource::RecognitionRound,
                now,
            )?;
            let scoring = self.config().scoring;
            let (feedback, reward, reason) = match &argument.gold {
                Some(gold) if gold.label == guess => (
                    Feedback::hard(true, gold.label),
                    scoring.hard_correct_points,
                    ScoreReason::HardCorrect,
                ),
                Some(gold) => (
                    Feedback::hard(false, gold.label),
                    scoring.hard_wrong_points,
                    ScoreReason::HardCorrect,
                ),
                None => (
                    Feedback::soft(SOFT_FEEDBACK_KEY),
                    scoring.soft_feedback_points,
                    ScoreReason::SoftFeedback,
                ),
            };
            award(tx, user, reward, reason, argument_id.as_str(), now)?;
            session.round_results.push(RoundResult {
                round_id: round_id.clone(),
                response: RoundResponse::Guess {
                    argument_id,
                    label: guess,
                },
                reward,
                feedback_kind: feedback.kind,
            });
            self.advance(tx, session, feedback, reward, now)
        })
    }

    fn open_session(
        &self,
        tx: &Tx<'_>,
        session_id: &SessionId,
        round_id: &RoundId,
    ) -> Result<LevelSession> {
        let session = tx
            .get::<LevelSession>(session_id.as_str())
            .ok_or(Error::UnknownSession)?;
        if session.is_completed() {
            return Err(Error::SessionCompleted);
        }
        match &session.pending {
            Some(p) if p.round_id() == round_id => Ok(session),
            _ => Err(Error::WrongRound),
        }
    }

    /// Moves the cursor past the answered round, drawing the next one or
    /// completing the level.
    fn advance(
        &self,
        tx: &mut Tx<'_>,
        mut session: LevelSession,
        feedback: Feedback,
        reward: u64,
        now: DateTime<Utc>,
    ) -> Result<RoundOutcome> {
        let (_, level) = self.lookup_level(&session.level_id)?;
        session.round_cursor += 1;
        let mut progress = None;
        if session.round_cursor == session.rounds_total {
            session.state = SessionState::Completed;
            session.pending = None;
            tx.put(session.clone());
            progress = Some(self.record_completion(tx, &session, now)?);
        } else {
            session.pending = Some(self.prepare_round(tx, &session, level)?);
            tx.put(session.clone());
        }
        Ok(RoundOutcome {
            feedback,
            reward,
            session,
            progress,
        })
    }

    fn record_completion(
        &self,
        tx: &mut Tx<'_>,
        session: &LevelSession,
        _now: DateTime<Utc>,
    ) -> Result<ProgressDelta> {
        let config = self.config();
        let (world, _) = self.lookup_level(&session.level_id)?;
        let mut record = tx
            .get::<ProgressRecord>(session.user_id.as_str())
            .unwrap_or_else(|| ProgressRecord::new(session.user_id.clone()));
        let locked_before: Vec<_> = config
            .worlds
            .iter()
            .filter(|w| !world_unlocked(config, &record, w))
            .map(|w| w.id.clone())
            .collect();
        let newly_completed = record.completed_levels.insert(session.level_id.clone());
        if newly_completed {
            tx.put(record.clone());
        }
        let unlocked_worlds = locked_before
            .into_iter()
            .filter(|id| {
                config
                    .world(id)
                    .is_some_and(|w| world_unlocked(config, &record, w))
            })
            .collect();
        Ok(ProgressDelta {
            level_id: session.level_id.clone(),
            world_id: world.id.clone(),
            newly_completed,
            fog_fraction: fog_fraction(world, &record),
            unlocked_worlds,
        })
    }

    /// Marks the session's level as completed. Submitting the last round
    /// already does this; calling it again is harmless.
    pub fn finish_level(&self, session_id: &SessionId, user: &UserId) -> Result<ProgressDelta> {
        let session = self.session_for(session_id, user)?;
        if session.round_cursor < session.rounds_total {
            return Err(Error::SessionIncomplete);
        }
        let now = self.clock.now();
        self.store
            .transact(|tx| self.record_completion(tx, &session, now))
    }

    pub fn progress(&self, user: &UserId) -> ProgressRecord {
        self.store
            .get::<ProgressRecord>(user.as_str())
            .unwrap_or_else(|| ProgressRecord::new(user.clone()))
    }

    pub fn progression_view(&self, user: &UserId) -> ProgressionView {
        ProgressionView::build(self.config(), &self.progress(user))
    }
}

/// Unjudged seed arguments, used when no player-written argument is left;
/// seeds matching the level's subset are preferred.
fn seed_fallback<R: Rng>(
    pool: &[Argument],
    index: &JudgmentIndex,
    session: &LevelSession,
    subset: &[FallacyLabel],
    rng: &mut R,
) -> Option<ArgumentId> {
    let seeds: Vec<&Argument> = pool
        .iter()
        .filter(|a| {
            a.is_seed()
                && a.is_playable()
                && a.language == session.language
                && !index.has_judged(&a.id, &session.user_id)
        })
        .collect();
    let preferred: Vec<&&Argument> = seeds
        .iter()
        .filter(|a| subset.contains(&a.assigned_type))
        .collect();
    if !preferred.is_empty() {
        return Some(preferred[rng.random_range(0..preferred.len())].id.clone());
    }
    if seeds.is_empty() {
        None
    } else {
        Some(seeds[rng.random_range(0..seeds.len())].id.clone())
    }
}
