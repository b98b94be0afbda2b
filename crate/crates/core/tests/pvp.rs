mod common;

use common::*;
use fallax_core::domain::{Argument, FallacyLabel, ScoreEvent, ScoreReason, TopicId, UserId};
use fallax_core::pvp::{MatchState, NotificationKind};
use fallax_core::Error;

fn unlocked(p: &fallax_core::Platform, handle: &str) -> UserId {
    let u = player(p, handle);
    complete_world(p, &u, "forest");
    assert!(p.pvp_unlocked(&u));
    u
}

#[test]
fn human_match_runs_to_the_end() {
    let (p, _) = platform(21);
    let a = unlocked(&p, "alice");
    let b = unlocked(&p, "bob");
    let m = p
        .create_match(&a, &b, Some(&TopicId::new("en-uniforms")), "en")
        .unwrap();
    assert_eq!(m.version, 1);
    assert_eq!(m.turn_owner, a);
    let rounds = m.rounds_total();
    let points = p.config().scoring.pvp_guess_points;
    let notes = p.pull_notifications(&b, None);
    assert_eq!(notes.len(), 1);
    assert_eq!(notes[0].kind, NotificationKind::ChallengeReceived);

    let mut version = m.version;
    let mut writer = a.clone();
    for i in 0..rounds {
        let guesser = if writer == a { b.clone() } else { a.clone() };
        // the guesser cannot act out of turn
        assert_eq!(
            p.submit_guess(&m.id, &guesser, version, FallacyLabel::NoFallacy)
                .unwrap_err(),
            Error::NotYourTurn
        );
        let view = p.match_view(&m.id, &writer).unwrap();
        let secret = view.your_assigned_type.unwrap();
        let after = p.submit_turn(&m.id, &writer, version, TEXT).unwrap();
        assert_eq!(after.state, MatchState::AwaitingGuess);
        // the stale version no longer works
        assert_eq!(
            p.submit_guess(&m.id, &guesser, version, secret)
                .unwrap_err(),
            Error::VersionConflict
        );
        version = after.version;
        let hidden = p.match_view(&m.id, &guesser).unwrap();
        assert_eq!(hidden.exchanges.last().unwrap().assigned_type, None);
        let guess = if i % 2 == 0 {
            secret
        } else {
            FallacyLabel::ALL
                .into_iter()
                .find(|l| *l != secret)
                .unwrap()
        };
        let out = p.submit_guess(&m.id, &guesser, version, guess).unwrap();
        assert_eq!(out.feedback.correct, Some(i % 2 == 0));
        assert_eq!(out.feedback.gold_label, Some(secret));
        assert_eq!(out.reward, if i % 2 == 0 { points } else { 0 });
        assert_eq!(
            out.match_view.exchanges.last().unwrap().assigned_type,
            Some(secret)
        );
        version = out.match_view.version;
        writer = guesser;
    }
    let done = p.match_view(&m.id, &a).unwrap();
    assert_eq!(done.state, MatchState::Finished);
    assert_eq!(
        p.submit_turn(&m.id, &a, version, TEXT).unwrap_err(),
        Error::MatchFinished
    );
    for u in [&a, &b] {
        let finished: Vec<_> = p
            .pull_notifications(u, None)
            .into_iter()
            .filter(|n| n.kind == NotificationKind::MatchFinished)
            .collect();
        assert_eq!(finished.len(), 1);
    }
    let pvp_points: u64 = p
        .store
        .scan::<ScoreEvent>(|e| e.reason == ScoreReason::PvpGuessCorrect)
        .iter()
        .map(|e| e.points)
        .sum();
    assert_eq!(pvp_points, points * rounds.div_ceil(2) as u64);
}

#[test]
fn bot_plays_its_turns_inline() {
    let (p, _) = platform(22);
    let a = unlocked(&p, "alice");
    let m = p.create_match(&a, &UserId::bot(), None, "en").unwrap();
    let mut version = m.version;
    loop {
        let view = p.match_view(&m.id, &a).unwrap();
        if view.state == MatchState::Finished {
            break;
        }
        assert!(view.your_turn, "the bot never keeps the turn");
        version = match view.state {
            MatchState::AwaitingWrite => p.submit_turn(&m.id, &a, version, TEXT).unwrap().version,
            MatchState::AwaitingGuess => {
                p.submit_guess(&m.id, &a, version, FallacyLabel::AdHominem)
                    .unwrap()
                    .match_view
                    .version
            }
            MatchState::Finished => unreachable!(),
        };
    }
    let finished = p
        .store
        .get::<fallax_core::pvp::Match>(m.id.as_str())
        .unwrap();
    assert_eq!(finished.exchanges.len(), finished.rounds_total());
    // the bot's arguments are copies of stored texts on the same topic
    for e in finished.exchanges.iter().filter(|e| e.writer.is_bot()) {
        let copy = p.argument(&e.argument_id).unwrap();
        assert!(p
            .store
            .scan::<Argument>(|a| !a.author_id.is_bot() && a.text == copy.text)
            .iter()
            .any(|a| a.topic_id == finished.topic_id));
    }
    assert_eq!(
        p.user(&UserId::bot()).map(|u| u.total_points).unwrap_or(0),
        0
    );
    assert_eq!(p.bot_take_turn(&m.id).unwrap_err(), Error::BotNotOwner);
}

#[test]
fn invalid_challenges_are_refused() {
    let (p, _) = platform(23);
    let a = unlocked(&p, "alice");
    let locked = player(&p, "newbie");
    assert_eq!(
        p.create_match(&a, &a, None, "en").unwrap_err(),
        Error::SelfMatch
    );
    assert_eq!(
        p.create_match(&a, &UserId::new("user-999999"), None, "en")
            .unwrap_err(),
        Error::UnknownUser
    );
    assert_eq!(
        p.create_match(&locked, &a, None, "en").unwrap_err(),
        Error::PvpLocked
    );
    let m = p.create_match(&a, &locked, None, "en").unwrap();
    assert_eq!(
        p.match_view(&m.id, &player(&p, "outsider")).unwrap_err(),
        Error::NotParticipant
    );
}

#[test]
fn notifications_are_delivered_once() {
    let (p, clock) = platform(24);
    let a = unlocked(&p, "alice");
    let b = unlocked(&p, "bob");
    let t0 = p.clock.now();
    let m = p.create_match(&a, &b, None, "en").unwrap();
    clock.advance(chrono::Duration::seconds(5));
    p.submit_turn(&m.id, &a, m.version, TEXT).unwrap();
    let unread = p.pull_notifications(&b, None);
    assert_eq!(unread.len(), 2);
    assert_eq!(unread[1].kind, NotificationKind::YourTurn);
    let ids: Vec<_> = unread.iter().map(|n| n.id.clone()).collect();
    assert_eq!(p.mark_notifications_read(&b, &ids).unwrap(), 2);
    assert_eq!(p.mark_notifications_read(&b, &ids).unwrap(), 0);
    assert!(p.pull_notifications(&b, None).is_empty());
    // history stays reachable by time
    assert_eq!(p.pull_notifications(&b, Some(t0)).len(), 1);
    assert_eq!(p.mark_notifications_read(&a, &ids).unwrap(), 0);
}
