//! All-time and weekly leaderboards over a few simulated weeks of play.
//!
//! ```text
//! cargo run -p fallax-core --example leaderboard
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use fallax_core::clock::ManualClock;
use fallax_core::engine::{Period, RoundPayload};
use fallax_core::store::Store;
use fallax_core::{Catalog, Platform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    let catalog = Catalog::load(
        &assets.join("game.json"),
        &assets.join("content"),
        &assets.join("locales"),
    )?;
    let clock = Arc::new(ManualClock::new(
        Utc.with_ymd_and_hms(2024, 3, 4, 9, 0, 0).unwrap(),
    ));
    let store = Arc::new(Store::in_memory_with_clock(clock.clone()));
    let platform = Platform::new(catalog, store, clock.clone(), 5)?;
    let players = ["early_bird", "steady", "latecomer"].map(|h| {
        platform
            .create_account(h, "not-a-real-digest")
            .map(|u| u.id)
    });

    let levels = ["forest-1", "forest-2", "forest-3", "forest-4"];
    for (week, active) in [
        [true, true, false],
        [true, false, false],
        [false, true, true],
    ]
    .iter()
    .enumerate()
    {
        for (i, user) in players.iter().enumerate() {
            let user = user.as_ref().map_err(|e| e.clone())?;
            if !active[i] {
                continue;
            }
            let session = platform.start_level(user, &levels[week].into(), "en")?;
            while !platform.session(&session.id, user)?.is_completed() {
                let view = platform.serve_round(&session.id, user)?;
                match view.payload {
                    RoundPayload::WriteFallacy { .. } => {
                        platform.submit_write_round(
                            &session.id,
                            user,
                            &view.round_id,
                            "Scientists were wrong once, so they are wrong now.",
                        )?;
                    }
                    RoundPayload::RecognizeFallacy { candidates, .. } => {
                        platform.submit_recognition_round(
                            &session.id,
                            user,
                            &view.round_id,
                            candidates[0],
                        )?;
                    }
                }
            }
        }
        clock.advance(Duration::days(7));
    }
    clock.advance(Duration::days(-7));

    for period in [Period::AllTime, Period::Weekly] {
        let board = platform.leaderboard(period, platform.clock.now());
        println!("{period:?}");
        for e in board.entries {
            let star = if e.player_of_the_week { " *" } else { "" };
            println!("  {:>2}. {:<12} {:>4}{star}", e.rank, e.handle, e.points);
        }
    }
    Ok(())
}
