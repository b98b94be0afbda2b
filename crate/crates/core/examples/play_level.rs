//! Plays the first world with a single account, printing every round,
//! the feedback it earned and how the fog clears.
//!
//! ```text
//! cargo run -p fallax-core --example play_level
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use fallax_core::clock::SystemClock;
use fallax_core::engine::RoundPayload;
use fallax_core::store::Store;
use fallax_core::{Catalog, Platform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    let catalog = Catalog::load(
        &assets.join("game.json"),
        &assets.join("content"),
        &assets.join("locales"),
    )?;
    let clock = Arc::new(SystemClock);
    let platform = Platform::new(catalog, Arc::new(Store::in_memory()), clock, 7)?;
    let me = platform.create_account("newcomer", "not-a-real-digest")?.id;

    let world = platform.config().first_world().clone();
    for level in &world.levels {
        let session = platform.start_level(&me, &level.id, "en")?;
        println!("== {}", level.id);
        loop {
            let view = platform.serve_round(&session.id, &me)?;
            let outcome = match &view.payload {
                RoundPayload::WriteFallacy {
                    topic,
                    assigned_type,
                    ..
                } => {
                    println!("  write a {} about: {}", assigned_type.code(), topic.title);
                    platform.submit_write_round(
                        &session.id,
                        &me,
                        &view.round_id,
                        "Only a fool would disagree, and my opponent is exactly that.",
                    )?
                }
                RoundPayload::RecognizeFallacy {
                    text, candidates, ..
                } => {
                    println!("  recognize: {text}");
                    platform.submit_recognition_round(
                        &session.id,
                        &me,
                        &view.round_id,
                        candidates[0],
                    )?
                }
            };
            println!(
                "    {:?} feedback, +{} points",
                outcome.feedback.kind, outcome.reward
            );
            if let Some(delta) = outcome.progress {
                println!("  level done, fog now {:.2}", delta.fog_fraction);
                break;
            }
        }
    }
    let user = platform.user(&me).expect("account exists");
    println!(
        "total {} points, PvP unlocked: {}",
        user.total_points,
        platform.pvp_unlocked(&me)
    );
    Ok(())
}
