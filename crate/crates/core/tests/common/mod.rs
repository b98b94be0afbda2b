#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use chrono::{TimeZone, Utc};
use fallax_core::clock::ManualClock;
use fallax_core::domain::{LevelId, UserId};
use fallax_core::store::Store;
use fallax_core::{Catalog, Platform};

pub fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

pub fn catalog() -> Catalog {
    let dir = assets();
    Catalog::load(
        &dir.join("game.json"),
        &dir.join("content"),
        &dir.join("locales"),
    )
    .expect("shipped assets load")
}

pub fn clock() -> Arc<ManualClock> {
    // a Monday
    Arc::new(ManualClock::new(
        Utc.with_ymd_and_hms(2024, 3, 4, 9, 0, 0).unwrap(),
    ))
}

pub fn platform(seed: u64) -> (Platform, Arc<ManualClock>) {
    let clock = clock();
    let store = Arc::new(Store::in_memory_with_clock(clock.clone()));
    (
        Platform::new(catalog(), store, clock.clone(), seed).unwrap(),
        clock,
    )
}

pub fn player(p: &Platform, handle: &str) -> UserId {
    p.create_account(handle, "digest").unwrap().id
}

pub fn level(id: &str) -> LevelId {
    LevelId::new(id)
}

use fallax_core::domain::{FallacyLabel, SessionId};
use fallax_core::engine::{RoundOutcome, RoundPayload, RoundView};

pub const TEXT: &str = "You cannot trust him on this, he is a known liar and a fool.";

/// Answers the current round: writes `TEXT` or guesses `pick(view)`.
pub fn answer(
    p: &Platform,
    user: &UserId,
    session: &SessionId,
    pick: impl Fn(&RoundView) -> FallacyLabel,
) -> RoundOutcome {
    let view = p.serve_round(session, user).expect("round is servable");
    match &view.payload {
        RoundPayload::WriteFallacy { .. } => p
            .submit_write_round(session, user, &view.round_id, TEXT)
            .unwrap(),
        RoundPayload::RecognizeFallacy { .. } => p
            .submit_recognition_round(session, user, &view.round_id, pick(&view))
            .unwrap(),
    }
}

/// Plays a whole level and returns every outcome.
pub fn play_level(
    p: &Platform,
    user: &UserId,
    level_id: &str,
    pick: impl Fn(&RoundView) -> FallacyLabel,
) -> Vec<RoundOutcome> {
    let session = p.start_level(user, &level(level_id), "en").unwrap();
    let mut outcomes = Vec::new();
    loop {
        let outcome = answer(p, user, &session.id, &pick);
        let done = outcome.session.is_completed();
        outcomes.push(outcome);
        if done {
            return outcomes;
        }
    }
}

/// Guesses a label that differs from the argument's assigned type.
pub fn wrong_guess(p: &Platform) -> impl Fn(&RoundView) -> FallacyLabel + '_ {
    move |view| match &view.payload {
        RoundPayload::RecognizeFallacy {
            argument_id,
            candidates,
            ..
        } => {
            let truth = p.argument(argument_id).unwrap();
            let wrong = truth.gold.map(|g| g.label).unwrap_or(truth.assigned_type);
            *candidates.iter().find(|c| **c != wrong).unwrap()
        }
        _ => unreachable!(),
    }
}

pub fn complete_world(p: &Platform, user: &UserId, world: &str) {
    let levels: Vec<String> = p
        .config()
        .world(&fallax_core::domain::WorldId::new(world))
        .unwrap()
        .levels
        .iter()
        .map(|l| l.id.to_string())
        .collect();
    for l in levels {
        play_level(p, user, &l, wrong_guess(p));
    }
}

/// Guesses the author's assigned type when offered, like an honest expert.
pub fn right_guess(p: &Platform) -> impl Fn(&RoundView) -> FallacyLabel + '_ {
    move |view| match &view.payload {
        RoundPayload::RecognizeFallacy {
            argument_id,
            candidates,
            ..
        } => {
            let truth = p.argument(argument_id).unwrap().assigned_type;
            if candidates.contains(&truth) {
                truth
            } else {
                candidates[0]
            }
        }
        _ => unreachable!(),
    }
}

/// A small crowd that writes and judges forest arguments until some items
/// have enough votes for aggregation.
pub fn crowd(p: &Platform, size: usize, plays: usize) -> Vec<UserId> {
    let users: Vec<UserId> = (0..size).map(|i| player(p, &format!("crowd{i}"))).collect();
    for round in 0..plays {
        for u in &users {
            let level = ["forest-1", "forest-4", "forest-2", "forest-3"][round % 4];
            play_level(p, u, level, right_guess(p));
        }
    }
    users
}

pub fn journal_platform(path: &std::path::Path, seed: u64) -> (Platform, Arc<ManualClock>) {
    let clock = clock();
    let store = Store::open(path, Default::default(), clock.clone()).unwrap();
    (
        Platform::new(catalog(), Arc::new(store), clock.clone(), seed).unwrap(),
        clock,
    )
}

/// Records a human vote directly, bypassing round serving.
pub fn vote(
    p: &Platform,
    argument: &fallax_core::domain::ArgumentId,
    rater: &str,
    label: FallacyLabel,
) {
    p.store
        .put(fallax_core::domain::Judgment {
            item_id: argument.clone(),
            rater_id: UserId::new(rater),
            label,
            source: fallax_core::domain::JudgmentSource::RecognitionRound,
            created_at: p.clock.now(),
        })
        .unwrap();
}

/// Two written arguments, each with four extra unanimous votes, so the next
/// aggregation turns both gold in a single journal record.
pub fn gold_ready(p: &Platform) -> UserId {
    let author = player(p, "author");
    play_level(p, &author, "forest-1", wrong_guess(p));
    play_level(p, &author, "forest-2", wrong_guess(p));
    for a in p
        .store
        .scan::<fallax_core::domain::Argument>(|a| a.author_id == author)
    {
        for r in ["v1", "v2", "v3", "v4"] {
            vote(p, &a.id, r, a.assigned_type);
        }
    }
    author
}
