//! Core of a game for writing and recognizing fallacious arguments: content
//! and workflow configuration, the round engine, player-vs-player matches,
//! crowd label aggregation, moderation, corpus export and a journal-backed
//! store.
//!
//! Everything is reached through [`platform::Platform`], which ties a
//! validated [`platform::Catalog`] to a [`store::Store`].

pub mod accounts;
pub mod aggregation;
pub mod clock;
pub mod config;
pub mod domain;
pub mod engine;
pub mod error;
pub mod export;
pub mod moderation;
pub mod platform;
pub mod pvp;
pub mod store;

pub use error::{Error, Result};
pub use platform::{Catalog, Platform};
