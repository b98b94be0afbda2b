//! A PvP match against the built-in bot. The bot plays its turns as soon
//! as the human has moved, so one account is enough.
//!
//! ```text
//! cargo run -p fallax-core --example bot_match -- [seed]
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use fallax_core::clock::SystemClock;
use fallax_core::domain::{FallacyLabel, UserId};
use fallax_core::pvp::MatchState;
use fallax_core::store::Store;
use fallax_core::{Catalog, Platform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    let catalog = Catalog::load(
        &assets.join("game.json"),
        &assets.join("content"),
        &assets.join("locales"),
    )?;
    let platform = Platform::new(
        catalog,
        Arc::new(Store::in_memory()),
        Arc::new(SystemClock),
        seed,
    )?;
    let me = platform.create_account("duelist", "not-a-real-digest")?.id;

    // PvP opens once the first world is done; the answers do not matter
    let world = platform.config().first_world().clone();
    for level in &world.levels {
        let session = platform.start_level(&me, &level.id, "en")?;
        while !platform.session(&session.id, &me)?.is_completed() {
            let view = platform.serve_round(&session.id, &me)?;
            match view.payload {
                fallax_core::engine::RoundPayload::WriteFallacy { .. } => {
                    platform.submit_write_round(
                        &session.id,
                        &me,
                        &view.round_id,
                        "Everyone I know agrees, so it must be true.",
                    )?;
                }
                fallax_core::engine::RoundPayload::RecognizeFallacy { candidates, .. } => {
                    platform.submit_recognition_round(
                        &session.id,
                        &me,
                        &view.round_id,
                        candidates[0],
                    )?;
                }
            }
        }
    }

    let mut m = platform.create_match(&me, &UserId::bot(), None, "en")?;
    println!("match {} on topic {}", m.id, m.topic_id);
    while m.state != MatchState::Finished {
        m = if m.state == MatchState::AwaitingWrite {
            let label = m.next_assigned_type.expect("writer has an assigned type");
            println!("  I write: {}", label.code());
            platform.submit_turn(
                &m.id,
                &me,
                m.version,
                "My rival's plan is wrong because he cannot even cook.",
            )?
        } else {
            let out = platform.submit_guess(&m.id, &me, m.version, FallacyLabel::AdHominem)?;
            println!(
                "  I guess ad_hominem: correct {:?}, +{}",
                out.feedback.correct, out.reward
            );
            platform
                .store
                .get(out.match_view.id.as_str())
                .expect("match exists")
        };
    }
    for e in &m.exchanges {
        println!(
            "  {} wrote {} / guessed {:?}",
            e.writer,
            e.assigned_type.code(),
            e.guess.map(|g| g.code())
        );
    }
    for n in platform.pull_notifications(&me, None) {
        println!("  notification {:?}", n.kind);
    }
    Ok(())
}
