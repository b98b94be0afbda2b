//! Simulates a small crowd, aggregates gold labels and writes the corpus
//! as JSON lines to stdout, manifest to stderr.
//!
//! ```text
//! cargo run -p fallax-core --example export_corpus -- [--gold-only] > corpus.jsonl
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use fallax_core::clock::SystemClock;
use fallax_core::domain::UserId;
use fallax_core::engine::RoundPayload;
use fallax_core::export::ExportFilter;
use fallax_core::moderation::Actor;
use fallax_core::store::Store;
use fallax_core::{Catalog, Platform};

fn play(platform: &Platform, user: &UserId, level: &str) -> Result<(), fallax_core::Error> {
    let session = platform.start_level(user, &level.into(), "en")?;
    while !platform.session(&session.id, user)?.is_completed() {
        let view = platform.serve_round(&session.id, user)?;
        match view.payload {
            RoundPayload::WriteFallacy { .. } => {
                platform.submit_write_round(
                    &session.id,
                    user,
                    &view.round_id,
                    "Nobody sensible listens to a man who dresses like that.",
                )?;
            }
            RoundPayload::RecognizeFallacy {
                argument_id,
                candidates,
                ..
            } => {
                // an honest crowd mostly agrees with the author
                let author = platform.argument(&argument_id).map(|a| a.assigned_type);
                let guess = author
                    .filter(|t| candidates.contains(t))
                    .unwrap_or(candidates[0]);
                platform.submit_recognition_round(&session.id, user, &view.round_id, guess)?;
            }
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gold_only = std::env::args().any(|a| a == "--gold-only");
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
        11,
    )?;
    let users = (0..8)
        .map(|i| {
            platform
                .create_account(&format!("player{i}"), "not-a-real-digest")
                .map(|u| u.id)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for round in 0..4 {
        for u in &users {
            play(
                &platform,
                u,
                ["forest-1", "forest-4", "forest-2", "forest-3"][round],
            )?;
        }
    }
    let summary = platform.trigger_aggregation(&Actor::Operator, None)?;
    eprintln!("aggregation: {}", serde_json::to_string(&summary)?);

    let filter = ExportFilter {
        language: Some("en".into()),
        gold_only,
    };
    let manifest = platform.export_corpus(&filter, &mut std::io::stdout().lock())?;
    eprintln!("{}", serde_json::to_string_pretty(&manifest)?);
    Ok(())
}
