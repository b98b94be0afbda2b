//! HTTP/JSON service and admin CLI for the fallax platform.
//!
//! [`app`] builds the router around a shared [`Platform`]; the `fallax`
//! binary wraps it with [`cli`].

pub mod api;
pub mod auth;
pub mod cli;
pub mod error;

use std::sync::Arc;

use axum::Router;
use fallax_core::Platform;

pub use auth::HashCost;
pub use error::{ApiError, ErrorBody, ERROR_CODES};

#[derive(Debug, Clone, Copy)]
pub struct ServerOptions {
    pub hash_cost: HashCost,
    /// Requests per token per minute.
    pub rate_limit: u32,
}

impl Default for ServerOptions {
    fn default() -> Self {
        ServerOptions {
            hash_cost: HashCost::default(),
            rate_limit: 600,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub platform: Arc<Platform>,
    pub limiter: Arc<auth::RateLimiter>,
    pub hash_cost: HashCost,
    /// Verified against on logins with an unknown handle, so both failure
    /// paths cost the same.
    pub dummy_digest: Arc<String>,
}

pub fn app(platform: Arc<Platform>, options: ServerOptions) -> Router {
    let state = AppState {
        platform,
        limiter: Arc::new(auth::RateLimiter::new(options.rate_limit)),
        hash_cost: options.hash_cost,
        dummy_digest: Arc::new(options.hash_cost.hash("not a real password")),
    };
    api::router(state)
}
