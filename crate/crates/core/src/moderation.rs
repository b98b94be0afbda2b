//! Spam reports, aggregation runs and operational statistics.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::aggregation::{estimate_gold, GoldBatch};
use crate::domain::{
    Argument, ArgumentId, ArgumentStatus, BatchId, Judgment, ReportId, ScoreEvent, ScoreReason,
    UserAccount, UserId,
};
use crate::engine::award;
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::pvp::Match;
use crate::store::{Keyed, Tx};

/// Who performs an administrative action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Actor {
    /// Someone with direct access to the journal, e.g. the admin CLI.
    Operator,
    User(UserId),
}

impl Actor {
    fn id(&self) -> UserId {
        match self {
            Actor::Operator => UserId::new("operator"),
            Actor::User(id) => id.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportState {
    Open,
    Dismissed,
    Upheld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportAction {
    Dismiss,
    Uphold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpamReport {
    pub id: ReportId,
    pub argument_id: ArgumentId,
    pub reporter_id: UserId,
    pub reason_text: Option<String>,
    pub state: ReportState,
    pub resolved_by: Option<UserId>,
    pub created_at: DateTime<Utc>,
}

impl Keyed for SpamReport {
    fn key(&self) -> String {
        self.id.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationSummary {
    pub batch_id: BatchId,
    pub items_considered: usize,
    pub gold_count: usize,
    pub newly_gold: usize,
    /// Gold items over items considered; 0 for an empty batch.
    pub coverage: f64,
    pub mean_entropy_nats: f64,
    pub bonus_events: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub users: usize,
    pub arguments: BTreeMap<String, usize>,
    pub judgments: BTreeMap<String, usize>,
    pub gold_arguments: usize,
    pub open_reports: usize,
    pub matches: BTreeMap<String, usize>,
    pub batches: usize,
    pub last_batch: Option<BatchId>,
    pub journal_sequence: u64,
}

fn code<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// Gives each gold argument whose label matches its assigned type the
/// author bonus, at most once per argument over all batches.
pub(crate) fn deferred_bonus_in_tx(
    tx: &mut Tx<'_>,
    batch: &GoldBatch,
    points: u64,
    now: DateTime<Utc>,
) -> Result<Vec<ScoreEvent>> {
    let mut events = Vec::new();
    for item in &batch.items {
        let Some(gold) = item.gold else { continue };
        let Some(argument) = tx.get::<Argument>(item.argument_id.as_str()) else {
            continue;
        };
        if gold != argument.assigned_type || !argument.author_id.is_human() {
            continue;
        }
        let reference = argument.id.as_str();
        let paid = !tx
            .scan::<ScoreEvent>(|e| {
                e.reason == ScoreReason::DeferredAuthorBonus && e.reference == reference
            })
            .is_empty();
        if paid {
            continue;
        }
        if let Some(event) = award(
            tx,
            &argument.author_id,
            points,
            ScoreReason::DeferredAuthorBonus,
            reference,
            now,
        )? {
            events.push(event);
        }
    }
    Ok(events)
}

impl Platform {
    fn require_admin(&self, actor: &Actor) -> Result<()> {
        match actor {
            Actor::Operator => Ok(()),
            Actor::User(id) => match self.user(id) {
                Some(u) if u.is_admin() => Ok(()),
                _ => Err(Error::Forbidden),
            },
        }
    }

    /// Files a report and hides the argument from play until an admin looks
    /// at it. Reporting the same argument again returns the first report.
    pub fn report_spam(
        &self,
        user: &UserId,
        argument_id: &ArgumentId,
        reason: Option<&str>,
    ) -> Result<SpamReport> {
        let now = self.clock.now();
        self.store.transact(|tx| {
            let mut argument = tx
                .get::<Argument>(argument_id.as_str())
                .filter(|a| a.status != ArgumentStatus::Removed)
                .ok_or(Error::UnknownArgument)?;
            if &argument.author_id == user {
                return Err(Error::SelfReport);
            }
            if let Some(existing) = tx
                .scan::<SpamReport>(|r| &r.argument_id == argument_id && &r.reporter_id == user)
                .into_iter()
                .next()
            {
                return Ok(existing);
            }
            let report = SpamReport {
                id: ReportId::new(tx.next_id("report")),
                argument_id: argument_id.clone(),
                reporter_id: user.clone(),
                reason_text: reason
                    .map(str::trim)
                    .filter(|r| !r.is_empty())
                    .map(str::to_owned),
                state: ReportState::Open,
                resolved_by: None,
                created_at: now,
            };
            if argument.status == ArgumentStatus::Active {
                argument.status = ArgumentStatus::Flagged;
                tx.put(argument);
            }
            tx.put(report.clone());
            Ok(report)
        })
    }

    pub fn list_reports(
        &self,
        actor: &Actor,
        state: Option<ReportState>,
    ) -> Result<Vec<SpamReport>> {
        self.require_admin(actor)?;
        Ok(self
            .store
            .scan::<SpamReport>(|r| state.is_none_or(|s| r.state == s)))
    }

    /// Dismissing puts the argument back into play once no other report on
    /// it is open; upholding removes it for good and closes its other
    /// reports. Points already awarded stand either way.
    pub fn resolve_report(
        &self,
        actor: &Actor,
        report_id: &ReportId,
        action: ReportAction,
    ) -> Result<SpamReport> {
        self.require_admin(actor)?;
        let resolver = actor.id();
        self.store.transact(|tx| {
            let mut report = tx
                .get::<SpamReport>(report_id.as_str())
                .ok_or(Error::UnknownReport)?;
            if report.state != ReportState::Open {
                return Err(Error::AlreadyResolved);
            }
            let mut argument = tx
                .get::<Argument>(report.argument_id.as_str())
                .ok_or(Error::UnknownArgument)?;
            let others = tx.scan::<SpamReport>(|r| {
                r.argument_id == report.argument_id
                    && r.id != report.id
                    && r.state == ReportState::Open
            });
            match action {
                ReportAction::Dismiss => {
                    report.state = ReportState::Dismissed;
                    if others.is_empty() && argument.status == ArgumentStatus::Flagged {
                        argument.status = ArgumentStatus::Active;
                        tx.put(argument);
                    }
                }
                ReportAction::Uphold => {
                    report.state = ReportState::Upheld;
                    argument.status = ArgumentStatus::Removed;
                    tx.put(argument);
                    for mut other in others {
                        other.state = ReportState::Upheld;
                        other.resolved_by = Some(resolver.clone());
                        tx.put(other);
                    }
                }
            }
            report.resolved_by = Some(resolver.clone());
            tx.put(report.clone());
            Ok(report)
        })
    }

    /// Estimates gold labels on a snapshot of the pool, then applies the new
    /// labels and author bonuses in one transaction. `seed` overrides the
    /// configured EM seed.
    pub fn trigger_aggregation(
        &self,
        actor: &Actor,
        seed: Option<u64>,
    ) -> Result<AggregationSummary> {
        self.require_admin(actor)?;
        let mut config = self.config().aggregation;
        if let Some(seed) = seed {
            config.em.rng_seed = seed;
        }
        let snapshot = self.store.snapshot();
        let now = self.clock.now();
        let mut batch = estimate_gold(
            snapshot.iter::<Argument>(),
            snapshot.iter::<Judgment>(),
            &config,
            BatchId::new("pending"),
            now,
        )?;
        drop(snapshot);
        let bonus = self.config().scoring.deferred_author_bonus;
        self.store.transact(|tx| {
            batch.id = BatchId::new(tx.next_id("batch"));
            let mut newly_gold = 0;
            for item in &batch.items {
                let Some(mut argument) = tx.get::<Argument>(item.argument_id.as_str()) else {
                    continue;
                };
                if argument.status == ArgumentStatus::Removed {
                    continue;
                }
                let assignment = batch.assignment(item);
                if argument.gold.is_none() && assignment.is_some() {
                    newly_gold += 1;
                }
                argument.gold = assignment;
                tx.put(argument);
            }
            let events = deferred_bonus_in_tx(tx, &batch, bonus, now)?;
            tx.put(batch.clone());
            let considered = batch.items.len();
            let gold_count = batch.gold_count();
            Ok(AggregationSummary {
                batch_id: batch.id.clone(),
                items_considered: considered,
                gold_count,
                newly_gold,
                coverage: if considered == 0 {
                    0.0
                } else {
                    gold_count as f64 / considered as f64
                },
                mean_entropy_nats: batch.mean_entropy(),
                bonus_events: events.len(),
            })
        })
    }

    /// Pays author bonuses for a stored batch. Already paid arguments are
    /// skipped, so re-running is harmless.
    pub fn apply_deferred_author_bonus(&self, batch_id: &BatchId) -> Result<Vec<ScoreEvent>> {
        let batch = self
            .store
            .get::<GoldBatch>(batch_id.as_str())
            .ok_or(Error::UnknownBatch)?;
        let points = self.config().scoring.deferred_author_bonus;
        let now = self.clock.now();
        self.store
            .transact(|tx| deferred_bonus_in_tx(tx, &batch, points, now))
    }

    pub fn batch(&self, id: &BatchId) -> Option<GoldBatch> {
        self.store.get::<GoldBatch>(id.as_str())
    }

    pub fn latest_batch(&self) -> Option<GoldBatch> {
        let snapshot = self.store.snapshot();
        snapshot
            .iter::<GoldBatch>()
            .max_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)))
            .cloned()
    }

    pub fn stats(&self) -> Stats {
        let snapshot = self.store.snapshot();
        let mut arguments = BTreeMap::new();
        let mut gold_arguments = 0;
        for a in snapshot.iter::<Argument>() {
            *arguments.entry(code(&a.status)).or_default() += 1;
            if a.gold.is_some() {
                gold_arguments += 1;
            }
        }
        let mut judgments = BTreeMap::new();
        for j in snapshot.iter::<Judgment>() {
            *judgments.entry(code(&j.source)).or_default() += 1;
        }
        let mut matches = BTreeMap::new();
        for m in snapshot.iter::<Match>() {
            *matches.entry(code(&m.state)).or_default() += 1;
        }
        Stats {
            users: snapshot.iter::<UserAccount>().count(),
            arguments,
            judgments,
            gold_arguments,
            open_reports: snapshot
                .iter::<SpamReport>()
                .filter(|r| r.state == ReportState::Open)
                .count(),
            matches,
            batches: snapshot.iter::<GoldBatch>().count(),
            last_batch: snapshot
                .iter::<GoldBatch>()
                .max_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)))
                .map(|b| b.id.clone()),
            journal_sequence: snapshot.sequence,
        }
    }
}
