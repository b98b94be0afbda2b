//! Drives the HTTP API in-process: register, look at the world map, play
//! one round, read the leaderboard. Each request and response is printed.
//!
//! ```text
//! cargo run -p fallax-server --example http_walkthrough
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use fallax_core::clock::SystemClock;
use fallax_core::store::Store;
use fallax_core::{Catalog, Platform};
use fallax_server::{app, ServerOptions};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(
    router: &Router,
    method: Method,
    path: &str,
    token: Option<&str>,
    body: Option<Value>,
) -> Value {
    let mut req = Request::builder().method(method.clone()).uri(path);
    if let Some(t) = token {
        req = req.header("authorization", format!("Bearer {t}"));
    }
    let req = match &body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{method} {path} -> {status}");
    value
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
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
        9,
    )?;
    let router = app(Arc::new(platform), ServerOptions::default());

    let session = call(
        &router,
        Method::POST,
        "/api/register",
        None,
        Some(json!({"handle": "walker", "password": "long enough secret"})),
    )
    .await;
    let token = session["token"].as_str().expect("token issued").to_owned();
    let t = Some(token.as_str());

    let worlds = call(&router, Method::GET, "/api/worlds", t, None).await;
    for w in worlds["worlds"].as_array().into_iter().flatten() {
        println!(
            "  {} unlocked={} fog={}",
            w["id"], w["unlocked"], w["fog_fraction"]
        );
    }

    let started = call(
        &router,
        Method::POST,
        "/api/levels/forest-1/start",
        t,
        Some(json!({"language": "en"})),
    )
    .await;
    let sid = started["id"].as_str().expect("session id").to_owned();
    let round = call(
        &router,
        Method::GET,
        &format!("/api/sessions/{sid}/round"),
        t,
        None,
    )
    .await;
    println!("  {}", serde_json::to_string_pretty(&round)?);
    let outcome = call(
        &router,
        Method::POST,
        &format!("/api/sessions/{sid}/round"),
        t,
        Some(json!({
            "round_id": round["round_id"],
            "text": "He failed his driving test twice, so his view on trains is worthless."
        })),
    )
    .await;
    println!(
        "  feedback {} reward {}",
        outcome["feedback"], outcome["reward"]
    );

    let board = call(
        &router,
        Method::GET,
        "/api/leaderboard?period=weekly",
        t,
        None,
    )
    .await;
    println!("  {}", board["entries"]);
    Ok(())
}
