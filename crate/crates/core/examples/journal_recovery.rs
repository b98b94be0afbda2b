//! Writes some play into a journal file, tears the last record in half,
//! and reopens the store to show it comes back at the previous record.
//!
//! ```text
//! cargo run -p fallax-core --example journal_recovery
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use fallax_core::clock::SystemClock;
use fallax_core::store::{decode_frames, Store, StoreOptions};
use fallax_core::{Catalog, Platform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets");
    let catalog = Catalog::load(
        &assets.join("game.json"),
        &assets.join("content"),
        &assets.join("locales"),
    )?;
    let dir = std::env::temp_dir().join(format!("fallax-journal-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("journal.log");

    {
        let store = Store::open(&path, StoreOptions { fsync: true }, Arc::new(SystemClock))?;
        let platform = Platform::new(catalog, Arc::new(store), Arc::new(SystemClock), 3)?;
        for handle in ["ada", "brook", "cyd"] {
            platform.create_account(handle, "not-a-real-digest")?;
        }
        println!("wrote {} accounts", platform.stats().users);
    }

    let bytes = std::fs::read(&path)?;
    let frames = decode_frames(&bytes)?;
    println!(
        "journal: {} bytes, {} records",
        bytes.len(),
        frames.payloads.len()
    );
    let last = frames.payloads.last().map_or(0, |p| p.len() + 8);
    std::fs::write(&path, &bytes[..bytes.len() - last / 2])?;
    println!("cut {} bytes from the final record", last / 2);

    let store = Store::open(&path, StoreOptions::default(), Arc::new(SystemClock))?;
    let users = store.scan::<fallax_core::domain::UserAccount>(|_| true);
    println!(
        "recovered {} accounts: {:?}",
        users.len(),
        users.iter().map(|u| u.handle.as_str()).collect::<Vec<_>>()
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
