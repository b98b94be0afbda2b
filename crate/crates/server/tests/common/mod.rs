#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use chrono::{TimeZone, Utc};
use fallax_core::clock::ManualClock;
use fallax_core::domain::ArgumentId;
use fallax_core::store::Store;
use fallax_core::{Catalog, Platform};
use fallax_server::{app, HashCost, ServerOptions};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

pub const TEXT: &str = "You cannot trust him on this, he is a known liar and a fool.";
pub const PASSWORD: &str = "correct horse battery";

pub fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

pub fn catalog() -> Catalog {
    let dir = assets();
    Catalog::load(
        &dir.join("game.json"),
        &dir.join("content"),
        &dir.join("locales"),
    )
    .expect("shipped assets load")
}

/// An in-process server on a manual clock with cheap password hashing.
pub struct Api {
    pub router: Router,
    pub platform: Arc<Platform>,
    pub clock: Arc<ManualClock>,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        if self.bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&self.bytes).expect("JSON body")
        }
    }

    pub fn code(&self) -> String {
        self.json()["code"].as_str().unwrap_or_default().to_owned()
    }
}

impl Api {
    pub fn new(seed: u64) -> Api {
        Api::with_rate_limit(seed, 100_000)
    }

    pub fn with_rate_limit(seed: u64, rate_limit: u32) -> Api {
        let clock = Arc::new(ManualClock::new(
            Utc.with_ymd_and_hms(2024, 3, 4, 9, 0, 0).unwrap(),
        ));
        let store = Arc::new(Store::in_memory_with_clock(clock.clone()));
        let platform = Arc::new(Platform::new(catalog(), store, clock.clone(), seed).unwrap());
        let router = app(
            platform.clone(),
            ServerOptions {
                hash_cost: HashCost::minimal(),
                rate_limit,
            },
        );
        Api {
            router,
            platform,
            clock,
        }
    }

    pub async fn raw(
        &self,
        method: Method,
        path: &str,
        token: Option<&str>,
        body: Option<&str>,
    ) -> Reply {
        let mut req = Request::builder().method(method).uri(path);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header("content-type", "application/json")
                .body(Body::from(b.to_owned())),
            None => req.body(Body::empty()),
        }
        .unwrap();
        let response = self.router.clone().oneshot(req).await.unwrap();
        let status = response.status();
        let headers = response.headers().clone();
        let bytes = response
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        Reply {
            status,
            headers,
            bytes,
        }
    }

    pub async fn get(&self, path: &str, token: &str) -> Reply {
        self.raw(Method::GET, path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> Reply {
        self.raw(Method::POST, path, Some(token), Some(&body.to_string()))
            .await
    }

    /// Registers `handle` and returns its bearer token.
    pub async fn register(&self, handle: &str) -> String {
        let r = self
            .raw(
                Method::POST,
                "/api/register",
                None,
                Some(&json!({"handle": handle, "password": PASSWORD}).to_string()),
            )
            .await;
        assert_eq!(
            r.status,
            StatusCode::CREATED,
            "{}",
            String::from_utf8_lossy(&r.bytes)
        );
        r.json()["token"].as_str().unwrap().to_owned()
    }

    pub async fn admin(&self, handle: &str) -> String {
        let token = self.register(handle).await;
        let id = self.platform.find_by_handle(handle).unwrap().id;
        self.platform.grant_admin(&id).unwrap();
        token
    }

    /// A label other than the argument's assigned type among `candidates`.
    pub fn wrong_label(&self, argument: &str, candidates: &Value) -> String {
        let truth = self.platform.argument(&ArgumentId::new(argument)).unwrap();
        let wrong = truth.gold.map(|g| g.label).unwrap_or(truth.assigned_type);
        candidates
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c.as_str().unwrap())
            .find(|c| *c != wrong.code())
            .unwrap()
            .to_owned()
    }

    /// Answers the current round of a session through the API, writing
    /// `TEXT` or guessing wrong. Returns the outcome body.
    pub async fn answer_wrong(&self, token: &str, session: &str) -> Value {
        let view = self
            .get(&format!("/api/sessions/{session}/round"), token)
            .await;
        assert_eq!(view.status, StatusCode::OK, "{}", view.code());
        let view = view.json();
        let body = match view["payload"]["kind"].as_str().unwrap() {
            "write_fallacy" => json!({"round_id": view["round_id"], "text": TEXT}),
            _ => json!({
                "round_id": view["round_id"],
                "guess": self.wrong_label(
                    view["payload"]["argument_id"].as_str().unwrap(),
                    &view["payload"]["candidates"],
                ),
            }),
        };
        let out = self
            .post(&format!("/api/sessions/{session}/round"), token, body)
            .await;
        assert_eq!(out.status, StatusCode::OK, "{}", out.code());
        out.json()
    }

    /// Plays a level to the end through the API; returns every outcome.
    pub async fn play_level(&self, token: &str, level: &str) -> Vec<Value> {
        let start = self
            .post(
                &format!("/api/levels/{level}/start"),
                token,
                json!({"language": "en"}),
            )
            .await;
        assert_eq!(start.status, StatusCode::CREATED, "{}", start.code());
        let session = start.json()["id"].as_str().unwrap().to_owned();
        let mut outcomes = Vec::new();
        loop {
            let out = self.answer_wrong(token, &session).await;
            let done = out["session"]["state"] == "completed";
            outcomes.push(out);
            if done {
                return outcomes;
            }
        }
    }

    pub async fn complete_first_world(&self, token: &str) {
        for l in ["forest-1", "forest-2", "forest-3", "forest-4"] {
            self.play_level(token, l).await;
        }
    }
}
