mod common;

use common::*;
use fallax_core::domain::{
    Argument, ArgumentStatus, BatchId, FallacyLabel, GoldAssignment, Judgment, JudgmentSource,
    ScoreEvent, UserAccount,
};
use fallax_core::engine::{FeedbackKind, Period, RoundPayload};
use fallax_core::Error;

#[test]
fn shipped_assets_are_consistent() {
    let c = catalog();
    assert_eq!(c.packs.len(), 2);
    assert!(c.locales.has_language("de"));
    assert_eq!(
        c.config.pvp_world().unwrap().unlock_requires,
        Some(c.config.first_world().id.clone())
    );
}

#[test]
fn write_round_stores_argument_vote_and_point() {
    let (p, _) = platform(1);
    let u = player(&p, "writer");
    let session = p.start_level(&u, &level("forest-1"), "en").unwrap();
    assert_eq!(session.round_cursor, 0);
    let view = p.serve_round(&session.id, &u).unwrap();
    let RoundPayload::WriteFallacy {
        assigned_type,
        description,
        ..
    } = &view.payload
    else {
        panic!("forest-1 opens with a write round");
    };
    // the only real fallacy in the subset
    assert_eq!(*assigned_type, FallacyLabel::AdHominem);
    assert!(description.is_some());

    let err = p
        .submit_write_round(&session.id, &u, &view.round_id, "   ")
        .unwrap_err();
    assert_eq!(err.code(), "empty");
    assert_eq!(p.session(&session.id, &u).unwrap().round_cursor, 0);

    let out = p
        .submit_write_round(&session.id, &u, &view.round_id, TEXT)
        .unwrap();
    assert_eq!(out.reward, 1);
    assert_eq!(out.feedback.kind, FeedbackKind::Soft);
    assert_eq!(out.session.round_cursor, 1);
    let args = p.store.scan::<Argument>(|a| a.author_id == u);
    assert_eq!(args.len(), 1);
    assert_eq!(args[0].assigned_type, FallacyLabel::AdHominem);
    let votes = p.store.scan::<Judgment>(|j| j.item_id == args[0].id);
    assert_eq!(votes.len(), 1);
    assert_eq!(votes[0].source, JudgmentSource::Authored);
    assert_eq!(votes[0].rater_id, u);
    assert_eq!(p.user(&u).unwrap().total_points, 1);
}

#[test]
fn reading_a_round_changes_nothing() {
    let (p, _) = platform(2);
    let u = player(&p, "reader");
    let session = p.start_level(&u, &level("forest-2"), "en").unwrap();
    answer(&p, &u, &session.id, wrong_guess(&p));
    let before = p.store.snapshot();
    let a = p.serve_round(&session.id, &u).unwrap();
    let b = p.serve_round(&session.id, &u).unwrap();
    assert_eq!(a, b);
    assert_eq!(*p.store.snapshot(), *before);
}

#[test]
fn wrong_round_and_wrong_user_are_rejected() {
    let (p, _) = platform(3);
    let u = player(&p, "a");
    let other = player(&p, "b");
    let session = p.start_level(&u, &level("forest-1"), "en").unwrap();
    let view = p.serve_round(&session.id, &u).unwrap();
    assert_eq!(
        p.submit_recognition_round(&session.id, &u, &view.round_id, FallacyLabel::AdHominem)
            .unwrap_err(),
        Error::WrongRound
    );
    assert_eq!(
        p.serve_round(&session.id, &other).unwrap_err(),
        Error::UnknownSession
    );
}

#[test]
fn soft_feedback_hides_correctness() {
    let (p, _) = platform(4);
    let a = player(&p, "a");
    let b = player(&p, "b");
    let mut responses = Vec::new();
    for (u, right) in [(&a, true), (&b, false)] {
        let session = p.start_level(u, &level("forest-1"), "en").unwrap();
        answer(&p, u, &session.id, wrong_guess(&p));
        let view = p.serve_round(&session.id, u).unwrap();
        let RoundPayload::RecognizeFallacy { argument_id, .. } = &view.payload else {
            panic!("second round recognizes");
        };
        let truth = p.argument(argument_id).unwrap();
        assert!(truth.gold.is_none());
        let guess = if right {
            truth.assigned_type
        } else {
            wrong_guess(&p)(&view)
        };
        let out = p
            .submit_recognition_round(&session.id, u, &view.round_id, guess)
            .unwrap();
        assert_eq!(out.reward, 1);
        responses.push(serde_json::to_string(&(&out.feedback, out.reward)).unwrap());
    }
    assert_eq!(responses[0], responses[1]);
    assert!(!responses[0].contains("correct"));
}

fn set_gold(p: &fallax_core::Platform, label: FallacyLabel) {
    // give every seed argument a gold label so recognition rounds are hard
    for mut a in p.store.scan::<Argument>(|a| a.is_seed()) {
        let mut posterior = [0.0; 6];
        posterior[label.index()] = 1.0;
        a.gold = Some(GoldAssignment {
            label,
            posterior,
            entropy_nats: 0.0,
            batch_id: BatchId::new("manual"),
        });
        p.store.put(a).unwrap();
    }
}

#[test]
fn hard_feedback_rewards_and_reveals() {
    let (p, _) = platform(5);
    set_gold(&p, FallacyLabel::RedHerring);
    let u = player(&p, "judge");
    let session = p.start_level(&u, &level("forest-1"), "en").unwrap();
    answer(&p, &u, &session.id, wrong_guess(&p));
    let view = p.serve_round(&session.id, &u).unwrap();
    let out = p
        .submit_recognition_round(&session.id, &u, &view.round_id, FallacyLabel::AdHominem)
        .unwrap();
    assert_eq!(out.reward, 0);
    assert_eq!(out.feedback.kind, FeedbackKind::Hard);
    assert_eq!(out.feedback.correct, Some(false));
    assert_eq!(out.feedback.gold_label, Some(FallacyLabel::RedHerring));
    assert_eq!(
        out.feedback.explanation_key,
        "fallacy.red_herring.explanation"
    );

    let session = p.start_level(&u, &level("forest-2"), "en").unwrap();
    answer(&p, &u, &session.id, wrong_guess(&p));
    let view = p.serve_round(&session.id, &u).unwrap();
    let out = p
        .submit_recognition_round(&session.id, &u, &view.round_id, FallacyLabel::RedHerring)
        .unwrap();
    assert_eq!(out.reward, 3);
    assert_eq!(out.feedback.correct, Some(true));
}

#[test]
fn wrong_answers_still_complete_levels_and_unlock_worlds() {
    let (p, _) = platform(6);
    let u = player(&p, "stubborn");
    assert_eq!(
        p.start_level(&u, &level("harbour-1"), "en").unwrap_err(),
        Error::WorldLocked
    );
    assert_eq!(
        p.create_match(&u, &fallax_core::domain::UserId::bot(), None, "en")
            .unwrap_err(),
        Error::PvpLocked
    );
    let mut fog = 1.0;
    for l in ["forest-1", "forest-2", "forest-3", "forest-4"] {
        let outcomes = play_level(&p, &u, l, wrong_guess(&p));
        let progress = outcomes.last().unwrap().progress.clone().unwrap();
        assert!(progress.newly_completed);
        assert!(progress.fog_fraction < fog);
        fog = progress.fog_fraction;
    }
    assert_eq!(fog, 0.0);
    let view = p.progression_view(&u);
    assert!(view.worlds.iter().all(|w| w.unlocked));
    assert!(p.pvp_unlocked(&u));
    p.start_level(&u, &level("harbour-1"), "en").unwrap();
}

#[test]
fn replaying_a_level_earns_points_again() {
    let (p, _) = platform(7);
    let u = player(&p, "replayer");
    play_level(&p, &u, "forest-1", wrong_guess(&p));
    let after_first = p.user(&u).unwrap().total_points;
    let outcomes = play_level(&p, &u, "forest-1", wrong_guess(&p));
    assert!(
        !outcomes
            .last()
            .unwrap()
            .progress
            .as_ref()
            .unwrap()
            .newly_completed
    );
    assert!(p.user(&u).unwrap().total_points > after_first);
    let session = outcomes.last().unwrap().session.id.clone();
    // idempotent
    let delta = p.finish_level(&session, &u).unwrap();
    assert!(!delta.newly_completed);
}

#[test]
fn players_never_judge_own_or_twice() {
    let (p, _) = platform(8);
    let users: Vec<_> = (0..4).map(|i| player(&p, &format!("p{i}"))).collect();
    for _ in 0..3 {
        for u in &users {
            play_level(&p, u, "forest-4", wrong_guess(&p));
        }
    }
    let arguments = p.store.scan::<Argument>(|_| true);
    for j in p.store.scan::<Judgment>(|_| true) {
        let a = arguments.iter().find(|a| a.id == j.item_id).unwrap();
        if j.source == JudgmentSource::RecognitionRound {
            assert_ne!(a.author_id, j.rater_id);
        }
    }
    // (item, rater) keys are unique by construction of the table; check
    // totals against events as well
    for u in p.store.scan::<UserAccount>(|_| true) {
        let sum: u64 = p
            .store
            .scan::<ScoreEvent>(|e| e.user_id == u.id)
            .iter()
            .map(|e| e.points)
            .sum();
        assert_eq!(sum, u.total_points);
    }
}

#[test]
fn exhausted_pool_falls_back_to_seeds_then_reports_exhaustion() {
    let (p, _) = platform(9);
    let u = player(&p, "greedy");
    // judge every seed once through repeated play
    let seeds = p
        .store
        .scan::<Argument>(|a| a.is_seed() && a.language == "en")
        .len();
    let mut judged = 0;
    'outer: loop {
        let session = p.start_level(&u, &level("forest-4"), "en").unwrap();
        loop {
            match p.serve_round(&session.id, &u) {
                Ok(_) => {
                    let out = answer(&p, &u, &session.id, wrong_guess(&p));
                    if out.session.round_results.last().unwrap().feedback_kind == FeedbackKind::Soft
                        && matches!(
                            out.session.round_results.last().unwrap().response,
                            fallax_core::engine::RoundResponse::Guess { .. }
                        )
                    {
                        judged += 1;
                    }
                    if out.session.is_completed() {
                        break;
                    }
                }
                Err(e) => {
                    assert_eq!(e, Error::ContentExhausted);
                    break 'outer;
                }
            }
        }
    }
    // the player's own arguments are never served, so only seeds were judged
    assert_eq!(judged, seeds);
}

#[test]
fn leaderboard_matches_totals() {
    let (p, clock) = platform(10);
    let a = player(&p, "a");
    let b = player(&p, "b");
    play_level(&p, &a, "forest-1", wrong_guess(&p));
    clock.advance(chrono::Duration::days(7));
    play_level(&p, &b, "forest-2", wrong_guess(&p));
    let now = p.clock.now();
    let weekly = p.leaderboard(Period::Weekly, now);
    assert_eq!(weekly.entries[0].user_id, b);
    assert_eq!(weekly.player_of_the_week, Some(a.clone()));
    let all = p.leaderboard(Period::AllTime, now);
    for e in &all.entries {
        assert_eq!(e.points, p.user(&e.user_id).unwrap().total_points);
    }
}

#[test]
fn flagged_and_removed_arguments_leave_the_pool() {
    let (p, _) = platform(11);
    let author = player(&p, "author");
    let judge = player(&p, "judge");
    play_level(&p, &author, "forest-1", wrong_guess(&p));
    let arg = p.store.scan::<Argument>(|a| a.author_id == author)[0].clone();
    p.report_spam(&judge, &arg.id, Some("nonsense")).unwrap();
    assert_eq!(p.argument(&arg.id).unwrap().status, ArgumentStatus::Flagged);
    for _ in 0..3 {
        let session = p.start_level(&judge, &level("forest-1"), "en").unwrap();
        answer(&p, &judge, &session.id, wrong_guess(&p));
        let view = p.serve_round(&session.id, &judge).unwrap();
        if let RoundPayload::RecognizeFallacy { argument_id, .. } = &view.payload {
            assert_ne!(argument_id, &arg.id);
        }
        answer(&p, &judge, &session.id, wrong_guess(&p));
    }
}
