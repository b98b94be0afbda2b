use std::collections::{HashMap, HashSet};

use rand::Rng;

use crate::domain::{Argument, ArgumentId, FallacyLabel, Judgment, UserId};
use crate::error::{Error, Result};

/// Judgment lookups needed for pool filtering.
#[derive(Debug, Default)]
pub struct JudgmentIndex {
    human_votes: HashMap<ArgumentId, usize>,
    judged: HashSet<(ArgumentId, UserId)>,
}

impl JudgmentIndex {
    pub fn build<'a>(judgments: impl IntoIterator<Item = &'a Judgment>) -> Self {
        let mut index = JudgmentIndex::default();
        for j in judgments {
            if j.rater_id.is_human() {
                *index.human_votes.entry(j.item_id.clone()).or_default() += 1;
            }
            index.judged.insert((j.item_id.clone(), j.rater_id.clone()));
        }
        index
    }

    pub fn votes(&self, item: &ArgumentId) -> usize {
        self.human_votes.get(item).copied().unwrap_or(0)
    }

    pub fn has_judged(&self, item: &ArgumentId, rater: &UserId) -> bool {
        self.judged.contains(&(item.clone(), rater.clone()))
    }
}

/// Priority tier of a judgeable argument, lower is served first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    /// Has some votes but not enough to enter aggregation.
    NeedsVotes,
    /// Has a gold label, so judging it gives hard feedback.
    Gold,
    Other,
}

pub fn tier(argument: &Argument, votes: usize, min_votes: usize) -> Tier {
    if (1..min_votes).contains(&votes) {
        Tier::NeedsVotes
    } else if argument.gold.is_some() {
        Tier::Gold
    } else {
        Tier::Other
    }
}

/// Whether `user` may be served `argument` in a recognition round.
pub fn judgeable(
    argument: &Argument,
    index: &JudgmentIndex,
    user: &UserId,
    language: &str,
    subset: &[FallacyLabel],
) -> bool {
    argument.is_playable()
        && argument.language == language
        && &argument.author_id != user
        && subset.contains(&argument.assigned_type)
        && !index.has_judged(&argument.id, user)
}

/// Picks a player-written argument for `user` to judge: arguments still
/// collecting votes first, then gold-labelled ones, then the rest; uniform
/// within the best non-empty tier. Seed content and bot copies are never
/// picked. `pool` must be in a stable order (the store yields key order).
pub fn select_argument_for_judging<'a, R: Rng>(
    pool: &'a [Argument],
    index: &JudgmentIndex,
    user: &UserId,
    language: &str,
    subset: &[FallacyLabel],
    min_votes: usize,
    rng: &mut R,
) -> Result<&'a Argument> {
    let eligible: Vec<(&Argument, Tier)> = pool
        .iter()
        .filter(|a| a.author_id.is_human() && judgeable(a, index, user, language, subset))
        .map(|a| (a, tier(a, index.votes(&a.id), min_votes)))
        .collect();
    let best = eligible
        .iter()
        .map(|(_, t)| *t)
        .min()
        .ok_or(Error::PoolEmpty)?;
    let candidates: Vec<&Argument> = eligible
        .into_iter()
        .filter(|(_, t)| *t == best)
        .map(|(a, _)| a)
        .collect();
    Ok(candidates[rng.random_range(0..candidates.len())])
}
