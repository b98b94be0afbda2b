//! Asynchronous player-vs-player matches.
//!
//! Protocol for players A (challenger) and B: A writes, B guesses, B writes,
//! A guesses, A writes, and so on until both have written
//! `exchanges_per_player` arguments. The guesser always writes next, so no
//! player writes twice in a row. Every accepted mutation bumps the match
//! version; callers pass the version they last saw.

mod bot;

use chrono::{DateTime, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    validate_argument_text, Argument, ArgumentId, ArgumentStatus, FallacyLabel, JudgmentSource,
    MatchId, NotificationId, ScoreReason, Topic, TopicId, UserId,
};
use crate::engine::{award, put_judgment, world_complete, world_unlocked, Feedback};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::store::{Keyed, Tx};

pub use bot::{bot_guess, bot_pick, lexicon_scores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchState {
    AwaitingWrite,
    AwaitingGuess,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub writer: UserId,
    pub assigned_type: FallacyLabel,
    pub argument_id: ArgumentId,
    pub guess: Option<FallacyLabel>,
    pub guess_correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub id: MatchId,
    pub topic_id: TopicId,
    pub language: String,
    /// Challenger first.
    pub players: [UserId; 2],
    pub exchanges: Vec<Exchange>,
    pub turn_owner: UserId,
    pub state: MatchState,
    pub version: u64,
    pub exchanges_per_player: u32,
    /// Type the turn owner must write next; only set while awaiting a write.
    pub next_assigned_type: Option<FallacyLabel>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl Keyed for Match {
    fn key(&self) -> String {
        self.id.0.clone()
    }

    fn version(&self) -> u64 {
        self.version
    }
}

impl Match {
    pub fn rounds_total(&self) -> usize {
        2 * self.exchanges_per_player as usize
    }

    pub fn opponent_of(&self, player: &UserId) -> &UserId {
        if &self.players[0] == player {
            &self.players[1]
        } else {
            &self.players[0]
        }
    }

    pub fn is_participant(&self, user: &UserId) -> bool {
        self.players.contains(user)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotificationKind {
    YourTurn,
    MatchFinished,
    ChallengeReceived,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Notification {
    pub id: NotificationId,
    pub user_id: UserId,
    pub kind: NotificationKind,
    pub match_id: MatchId,
    pub created_at: DateTime<Utc>,
    pub read: bool,
}

impl Keyed for Notification {
    fn key(&self) -> String {
        self.id.0.clone()
    }
}

/// An exchange as seen by one participant: the assigned type stays hidden
/// from the guesser until the guess is in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExchangeView {
    pub writer: UserId,
    pub argument_id: ArgumentId,
    /// Absent once the argument has been removed by moderation.
    pub text: Option<String>,
    pub assigned_type: Option<FallacyLabel>,
    pub guess: Option<FallacyLabel>,
    pub guess_correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchView {
    pub id: MatchId,
    pub topic: Option<Topic>,
    pub language: String,
    pub players: [UserId; 2],
    pub state: MatchState,
    pub turn_owner: UserId,
    pub your_turn: bool,
    pub version: u64,
    pub rounds_total: usize,
    pub exchanges: Vec<ExchangeView>,
    /// The type you must write, when it is your turn to write.
    pub your_assigned_type: Option<FallacyLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuessOutcome {
    pub feedback: Feedback,
    pub reward: u64,
    #[serde(rename = "match")]
    pub match_view: MatchView,
}

fn notify(
    tx: &mut Tx<'_>,
    user: &UserId,
    kind: NotificationKind,
    match_id: &MatchId,
    at: DateTime<Utc>,
) {
    if !user.is_human() {
        return;
    }
    let id = NotificationId::new(tx.next_id("note"));
    tx.put(Notification {
        id,
        user_id: user.clone(),
        kind,
        match_id: match_id.clone(),
        created_at: at,
        read: false,
    });
}

fn random_label<R: Rng>(rng: &mut R) -> FallacyLabel {
    FallacyLabel::ALL[rng.random_range(0..FallacyLabel::ALL.len())]
}

impl Platform {
    /// Whether `user` may enter the player-vs-player world.
    pub fn pvp_unlocked(&self, user: &UserId) -> bool {
        let progress = self.progress(user);
        let config = self.config();
        match config.pvp_world() {
            Some(world) => world_unlocked(config, &progress, world),
            None => world_complete(config.first_world(), &progress),
        }
    }

    /// Starts a match. Pass [`UserId::bot`] as opponent to play the bot.
    /// Without a topic, one is drawn from the language's content pack.
    pub fn create_match(
        &self,
        challenger: &UserId,
        opponent: &UserId,
        topic: Option<&TopicId>,
        language: &str,
    ) -> Result<Match> {
        if challenger == opponent {
            return Err(Error::SelfMatch);
        }
        if self.user(challenger).is_none() {
            return Err(Error::UnknownUser);
        }
        if !opponent.is_bot() && self.user(opponent).is_none() {
            return Err(Error::UnknownUser);
        }
        if !self.pvp_unlocked(challenger) {
            return Err(Error::PvpLocked);
        }
        let topic = match topic {
            Some(id) => self.catalog.topic(id).ok_or(Error::UnknownTopic)?.clone(),
            None => {
                let pack = self
                    .catalog
                    .pack(language)
                    .ok_or_else(|| Error::UnsupportedLanguage(language.to_owned()))?;
                let mut topics: Vec<&Topic> = pack.topics.iter().collect();
                topics.sort_by(|a, b| a.id.cmp(&b.id));
                if topics.is_empty() {
                    return Err(Error::ContentExhausted);
                }
                let i = self.with_rng(|rng| rng.random_range(0..topics.len()));
                topics[i].clone()
            }
        };
        let now = self.clock.now();
        self.store.transact(|tx| {
            let secret = self.with_rng(random_label);
            let id = MatchId::new(tx.next_id("match"));
            let m = Match {
                id: id.clone(),
                topic_id: topic.id.clone(),
                language: topic.language.clone(),
                players: [challenger.clone(), opponent.clone()],
                exchanges: Vec::new(),
                turn_owner: challenger.clone(),
                state: MatchState::AwaitingWrite,
                version: 1,
                exchanges_per_player: self.config().pvp.exchanges_per_player,
                next_assigned_type: Some(secret),
                created_at: now,
                updated_at: now,
            };
            tx.compare_and_put(m.clone(), 0)?;
            notify(tx, opponent, NotificationKind::ChallengeReceived, &id, now);
            Ok(m)
        })
    }

    fn load_match(&self, id: &MatchId, player: &UserId) -> Result<Match> {
        let m = self
            .store
            .get::<Match>(id.as_str())
            .ok_or(Error::UnknownMatch)?;
        if !m.is_participant(player) {
            return Err(Error::NotParticipant);
        }
        Ok(m)
    }

    fn check_turn(
        m: &Match,
        player: &UserId,
        expected_version: u64,
        state: MatchState,
    ) -> Result<()> {
        if !m.is_participant(player) {
            return Err(Error::NotParticipant);
        }
        if m.state == MatchState::Finished {
            return Err(Error::MatchFinished);
        }
        if &m.turn_owner != player || m.state != state {
            return Err(Error::NotYourTurn);
        }
        if m.version != expected_version {
            return Err(Error::VersionConflict);
        }
        Ok(())
    }

    /// Writes the turn owner's argument. The new argument carries the secret
    /// assigned type and its author's vote.
    pub fn submit_turn(
        &self,
        match_id: &MatchId,
        player: &UserId,
        expected_version: u64,
        text: &str,
    ) -> Result<Match> {
        let m = self.write_turn(match_id, player, expected_version, text)?;
        self.run_bot(match_id);
        Ok(self.store.get::<Match>(match_id.as_str()).unwrap_or(m))
    }

    fn write_turn(
        &self,
        match_id: &MatchId,
        player: &UserId,
        expected_version: u64,
        text: &str,
    ) -> Result<Match> {
        let now = self.clock.now();
        self.store.transact(|tx| {
            let mut m = tx
                .get::<Match>(match_id.as_str())
                .ok_or(Error::UnknownMatch)?;
            Self::check_turn(&m, player, expected_version, MatchState::AwaitingWrite)?;
            validate_argument_text(text, self.config().text_limits)?;
            let assigned_type = m
                .next_assigned_type
                .expect("a match awaiting a write has an assigned type");
            let argument = Argument {
                id: ArgumentId::new(tx.next_id("arg")),
                author_id: player.clone(),
                topic_id: m.topic_id.clone(),
                language: m.language.clone(),
                text: text.trim().to_owned(),
                assigned_type,
                created_at: now,
                status: ArgumentStatus::Active,
                gold: None,
            };
            put_judgment(
                tx,
                &argument.id,
                player,
                assigned_type,
                JudgmentSource::Authored,
                now,
            )?;
            m.exchanges.push(Exchange {
                writer: player.clone(),
                assigned_type,
                argument_id: argument.id.clone(),
                guess: None,
                guess_correct: None,
            });
            tx.put(argument);
            m.turn_owner = m.opponent_of(player).clone();
            m.state = MatchState::AwaitingGuess;
            m.next_assigned_type = None;
            m.version += 1;
            m.updated_at = now;
            tx.compare_and_put(m.clone(), expected_version)?;
            notify(tx, &m.turn_owner, NotificationKind::YourTurn, &m.id, now);
            Ok(m)
        })
    }

    /// Guesses the type of the last argument. The answer is revealed right
    /// away and a correct guess scores.
    pub fn submit_guess(
        &self,
        match_id: &MatchId,
        player: &UserId,
        expected_version: u64,
        guess: FallacyLabel,
    ) -> Result<GuessOutcome> {
        let (feedback, reward) = self.guess_turn(match_id, player, expected_version, guess)?;
        self.run_bot(match_id);
        Ok(GuessOutcome {
            feedback,
            reward,
            match_view: self.match_view(match_id, player)?,
        })
    }

    fn guess_turn(
        &self,
        match_id: &MatchId,
        player: &UserId,
        expected_version: u64,
        guess: FallacyLabel,
    ) -> Result<(Feedback, u64)> {
        let now = self.clock.now();
        self.store.transact(|tx| {
            let mut m = tx
                .get::<Match>(match_id.as_str())
                .ok_or(Error::UnknownMatch)?;
            Self::check_turn(&m, player, expected_version, MatchState::AwaitingGuess)?;
            let exchange = m
                .exchanges
                .last_mut()
                .expect("a match awaiting a guess has an exchange");
            put_judgment(
                tx,
                &exchange.argument_id,
                player,
                guess,
                JudgmentSource::PvpGuess,
                now,
            )?;
            let correct = guess == exchange.assigned_type;
            exchange.guess = Some(guess);
            exchange.guess_correct = Some(correct);
            let feedback = Feedback::hard(correct, exchange.assigned_type);
            let reward = if correct && player.is_human() {
                self.config().scoring.pvp_guess_points
            } else {
                0
            };
            award(
                tx,
                player,
                reward,
                ScoreReason::PvpGuessCorrect,
                m.id.as_str(),
                now,
            )?;
            if m.exchanges.len() < m.rounds_total() {
                m.state = MatchState::AwaitingWrite;
                m.next_assigned_type = Some(self.with_rng(random_label));
            } else {
                m.state = MatchState::Finished;
                for p in m.players.clone() {
                    notify(tx, &p, NotificationKind::MatchFinished, &m.id, now);
                }
            }
            m.version += 1;
            m.updated_at = now;
            tx.compare_and_put(m, expected_version)?;
            Ok((feedback, reward))
        })
    }

    /// Plays one bot turn through the same versioned path as players.
    pub fn bot_take_turn(&self, match_id: &MatchId) -> Result<Match> {
        let m = self
            .store
            .get::<Match>(match_id.as_str())
            .ok_or(Error::UnknownMatch)?;
        let bot = UserId::bot();
        if m.turn_owner != bot || m.state == MatchState::Finished {
            return Err(Error::BotNotOwner);
        }
        match m.state {
            MatchState::AwaitingWrite => {
                let secret = m
                    .next_assigned_type
                    .expect("a match awaiting a write has an assigned type");
                let pool = self.store.scan::<Argument>(|a| a.topic_id == m.topic_id);
                let text = self
                    .with_rng(|rng| {
                        bot_pick(&pool, &m.topic_id, secret, rng).map(|a| a.text.clone())
                    })
                    .ok_or(Error::ContentExhausted)?;
                self.write_turn(match_id, &bot, m.version, &text)
            }
            MatchState::AwaitingGuess => {
                let last = m.exchanges.last().expect("awaiting a guess");
                let text = self
                    .argument(&last.argument_id)
                    .map(|a| a.text)
                    .unwrap_or_default();
                let empty = Default::default();
                let lexicon = self
                    .catalog
                    .pack(&m.language)
                    .map_or(&empty, |p| &p.bot_lexicon);
                self.guess_turn(match_id, &bot, m.version, bot_guess(&text, lexicon))?;
                self.store
                    .get::<Match>(match_id.as_str())
                    .ok_or(Error::UnknownMatch)
            }
            MatchState::Finished => unreachable!(),
        }
    }

    /// Lets the bot play until a human owns the turn. A bot turn that
    /// fails (no content for the topic) leaves the match waiting on the bot;
    /// it can be retried with [`Platform::bot_take_turn`].
    fn run_bot(&self, match_id: &MatchId) {
        while self
            .store
            .get::<Match>(match_id.as_str())
            .is_some_and(|m| m.turn_owner.is_bot() && m.state != MatchState::Finished)
        {
            if self.bot_take_turn(match_id).is_err() {
                return;
            }
        }
    }

    pub fn match_view(&self, match_id: &MatchId, viewer: &UserId) -> Result<MatchView> {
        let m = self.load_match(match_id, viewer)?;
        let exchanges = m
            .exchanges
            .iter()
            .map(|e| {
                let revealed = e.guess.is_some() || &e.writer == viewer;
                ExchangeView {
                    writer: e.writer.clone(),
                    argument_id: e.argument_id.clone(),
                    text: self
                        .argument(&e.argument_id)
                        .filter(|a| a.status != ArgumentStatus::Removed)
                        .map(|a| a.text),
                    assigned_type: revealed.then_some(e.assigned_type),
                    guess: e.guess,
                    guess_correct: e.guess_correct,
                }
            })
            .collect();
        let your_turn = &m.turn_owner == viewer && m.state != MatchState::Finished;
        Ok(MatchView {
            topic: self.catalog.topic(&m.topic_id).cloned(),
            your_assigned_type: if your_turn && m.state == MatchState::AwaitingWrite {
                m.next_assigned_type
            } else {
                None
            },
            id: m.id,
            language: m.language,
            players: m.players,
            state: m.state,
            turn_owner: m.turn_owner,
            your_turn,
            version: m.version,
            rounds_total: 2 * m.exchanges_per_player as usize,
            exchanges,
        })
    }

    pub fn matches_for(&self, user: &UserId) -> Vec<Match> {
        self.store.scan::<Match>(|m| m.is_participant(user))
    }

    /// Unread notifications, or with `since` every notification created
    /// after it; oldest first. Reading does not mark anything.
    pub fn pull_notifications(
        &self,
        user: &UserId,
        since: Option<DateTime<Utc>>,
    ) -> Vec<Notification> {
        let mut out = self.store.scan::<Notification>(|n| {
            &n.user_id == user
                && match since {
                    Some(t) => n.created_at > t,
                    None => !n.read,
                }
        });
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)));
        out
    }

    /// Marks the user's notifications as read. Unknown ids, other users'
    /// notifications and already read ones are ignored.
    pub fn mark_notifications_read(&self, user: &UserId, ids: &[NotificationId]) -> Result<usize> {
        self.store.transact(|tx| {
            let mut marked = 0;
            for id in ids {
                if let Some(mut n) = tx.get::<Notification>(id.as_str()) {
                    if &n.user_id == user && !n.read {
                        n.read = true;
                        tx.put(n);
                        marked += 1;
                    }
                }
            }
            Ok(marked)
        })
    }
}
