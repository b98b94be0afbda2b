//! Route table and handlers. Every handler delegates to one platform
//! operation; bodies mirror the platform types.

use axum::body::Bytes;
use axum::extract::{FromRequest, FromRequestParts, Request, State};
use axum::http::header::CONTENT_TYPE;
use axum::http::request::Parts;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use fallax_core::config::LocaleBundle;
use fallax_core::domain::{
    ArgumentId, FallacyLabel, LevelId, MatchId, NotificationId, ReportId, Role, RoundId, SessionId,
    Topic, TopicId, UserAccount, UserId,
};
use fallax_core::engine::{Leaderboard, PendingRound, Period, ProgressionView};
use fallax_core::export::ExportFilter;
use fallax_core::moderation::{Actor, ReportAction, ReportState};
use fallax_core::pvp::MatchView;
use fallax_core::Platform;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::auth::{valid_handle, Admin, Caller, MIN_PASSWORD_CHARS};
use crate::error::{ApiError, ApiResult};
use crate::AppState;

/// Header carrying the export manifest as JSON.
pub const MANIFEST_HEADER: &str = "x-export-manifest";

/// JSON body whose rejections become `bad_request`.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| Body(v))
            .map_err(|_| ApiError::bad_request())
    }
}

/// Query string whose rejections become `bad_request`.
pub struct Query<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Query<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|axum::extract::Query(v)| Query(v))
            .map_err(|_| ApiError::bad_request())
    }
}

/// Path segment whose rejections become `not_found`.
pub struct Path<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for Path<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, Self::Rejection> {
        axum::extract::Path::<T>::from_request_parts(parts, state)
            .await
            .map(|axum::extract::Path(v)| Path(v))
            .map_err(|_| ApiError::not_found())
    }
}

/// JSON body that may be absent altogether; an empty body yields
/// `T::default()`.
pub struct OptionalBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned + Default> FromRequest<S> for OptionalBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|_| ApiError::bad_request())?;
        if bytes.iter().all(u8::is_ascii_whitespace) {
            return Ok(OptionalBody(T::default()));
        }
        serde_json::from_slice(&bytes)
            .map(OptionalBody)
            .map_err(|_| ApiError::bad_request())
    }
}

/// Runs blocking platform work (hashing, aggregation, export) off the
/// async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|_| ApiError::internal())?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/register", post(register))
        .route("/api/login", post(login))
        .route("/api/logout", post(logout))
        .route("/api/me", get(me))
        .route("/api/locales/{language}", get(locale))
        .route("/api/topics", get(topics))
        .route("/api/worlds", get(worlds))
        .route("/api/levels/{id}/start", post(start_level))
        .route("/api/sessions/{id}", get(session))
        .route(
            "/api/sessions/{id}/round",
            get(serve_round).post(submit_round),
        )
        .route("/api/sessions/{id}/refresh", post(refresh_round))
        .route("/api/sessions/{id}/finish", post(finish_level))
        .route("/api/leaderboard", get(leaderboard))
        .route("/api/matches", get(list_matches).post(create_match))
        .route("/api/matches/{id}", get(get_match))
        .route("/api/matches/{id}/turn", post(submit_turn))
        .route("/api/matches/{id}/guess", post(submit_guess))
        .route("/api/notifications", get(notifications))
        .route("/api/notifications/read", post(mark_read))
        .route("/api/arguments/{id}/report", post(report))
        .route("/api/admin/spam", get(list_reports))
        .route("/api/admin/spam/{id}", post(resolve_report))
        .route("/api/admin/aggregate", post(aggregate))
        .route("/api/admin/export", get(export))
        .route("/api/admin/stats", get(stats))
        .fallback(|| async { ApiError::not_found() })
        .method_not_allowed_fallback(|| async { ApiError::new("method_not_allowed") })
        .with_state(state)
}

/// An account as shown to its owner; never includes the password digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserView {
    pub id: UserId,
    pub handle: String,
    pub avatar_id: u32,
    pub roles: Vec<Role>,
    pub total_points: u64,
    pub created_at: DateTime<Utc>,
}

impl From<UserAccount> for UserView {
    fn from(u: UserAccount) -> Self {
        UserView {
            id: u.id,
            handle: u.handle,
            avatar_id: u.avatar_id,
            roles: u.roles,
            total_points: u.total_points,
            created_at: u.created_at,
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct Credentials {
    pub handle: String,
    pub password: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionToken {
    pub token: String,
    pub expires_at: DateTime<Utc>,
    pub user: UserView,
}

fn issue(platform: &Platform, account: UserAccount) -> ApiResult<SessionToken> {
    let (token, record) = platform.issue_token(&account.id)?;
    Ok(SessionToken {
        token,
        expires_at: record.expires_at,
        user: account.into(),
    })
}

async fn register(State(s): State<AppState>, Body(c): Body<Credentials>) -> ApiResult<Response> {
    if !valid_handle(&c.handle) {
        return Err(ApiError::bad_request());
    }
    if c.password.chars().count() < MIN_PASSWORD_CHARS {
        return Err(ApiError::new("weak_password"));
    }
    if s.platform.find_by_handle(&c.handle).is_some() {
        return Err(ApiError::new("handle_taken"));
    }
    let cost = s.hash_cost;
    let token = blocking(move || {
        let digest = cost.hash(&c.password);
        let account = s.platform.create_account(&c.handle, &digest)?;
        issue(&s.platform, account)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(token)).into_response())
}

async fn login(
    State(s): State<AppState>,
    Body(c): Body<Credentials>,
) -> ApiResult<Json<SessionToken>> {
    blocking(move || {
        let account = s.platform.find_by_handle(&c.handle);
        let digest = account
            .as_ref()
            .map(|a| a.password_digest.as_str())
            .unwrap_or(s.dummy_digest.as_str());
        let verified = s.hash_cost.verify(&c.password, digest);
        match account {
            Some(a) if verified && a.id.is_human() => issue(&s.platform, a),
            _ => Err(ApiError::new("bad_credentials")),
        }
    })
    .await
    .map(Json)
}

async fn logout(State(s): State<AppState>, caller: Caller) -> ApiResult<StatusCode> {
    s.platform.revoke_token(&caller.token)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn me(caller: Caller) -> Json<UserView> {
    Json(caller.account.into())
}

async fn locale(
    State(s): State<AppState>,
    Path(language): Path<String>,
) -> ApiResult<Json<LocaleBundle>> {
    s.platform
        .catalog
        .locales
        .bundle(&language)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::new("unsupported_language"))
}

#[derive(Debug, Deserialize)]
struct LanguageQuery {
    language: String,
}

async fn topics(
    State(s): State<AppState>,
    _caller: Caller,
    Query(q): Query<LanguageQuery>,
) -> ApiResult<Json<Vec<Topic>>> {
    let pack = s
        .platform
        .catalog
        .pack(&q.language)
        .ok_or_else(|| ApiError::new("unsupported_language"))?;
    Ok(Json(pack.topics.clone()))
}

async fn worlds(State(s): State<AppState>, caller: Caller) -> Json<ProgressionView> {
    Json(s.platform.progression_view(&caller.account.id))
}

#[derive(Debug, Deserialize)]
struct StartLevel {
    language: String,
}

async fn start_level(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(b): Body<StartLevel>,
) -> ApiResult<Response> {
    let session = s
        .platform
        .start_level(&caller.account.id, &LevelId::new(id), &b.language)?;
    Ok((StatusCode::CREATED, Json(session)).into_response())
}

async fn session(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let session = s
        .platform
        .session(&SessionId::new(id), &caller.account.id)?;
    Ok(Json(session).into_response())
}

async fn serve_round(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let view = s
        .platform
        .serve_round(&SessionId::new(id), &caller.account.id)?;
    Ok(Json(view).into_response())
}

/// Answer to the current round: `text` for write rounds, `guess` for
/// recognition rounds.
#[derive(Debug, Deserialize)]
struct RoundAnswer {
    round_id: String,
    text: Option<String>,
    guess: Option<String>,
}

fn parse_label(code: &str) -> ApiResult<FallacyLabel> {
    FallacyLabel::from_code(code).ok_or_else(|| ApiError::new("invalid_guess"))
}

async fn submit_round(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(b): Body<RoundAnswer>,
) -> ApiResult<Response> {
    let session_id = SessionId::new(id);
    let user = &caller.account.id;
    let session = s.platform.session(&session_id, user)?;
    if session.is_completed() {
        return Err(ApiError::new("session_completed"));
    }
    let round_id = RoundId::new(b.round_id);
    let outcome = match &session.pending {
        Some(PendingRound::Write { .. }) => {
            let text = b.text.ok_or_else(ApiError::bad_request)?;
            s.platform
                .submit_write_round(&session_id, user, &round_id, &text)?
        }
        Some(PendingRound::Recognize { .. }) => {
            let guess = parse_label(b.guess.as_deref().ok_or_else(ApiError::bad_request)?)?;
            s.platform
                .submit_recognition_round(&session_id, user, &round_id, guess)?
        }
        Some(PendingRound::Unavailable { .. }) | None => {
            return Err(ApiError::new("content_exhausted"))
        }
    };
    Ok(Json(outcome).into_response())
}

async fn refresh_round(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let session = s
        .platform
        .refresh_round(&SessionId::new(id), &caller.account.id)?;
    Ok(Json(session).into_response())
}

async fn finish_level(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let delta = s
        .platform
        .finish_level(&SessionId::new(id), &caller.account.id)?;
    Ok(Json(delta).into_response())
}

#[derive(Debug, Deserialize)]
struct PeriodQuery {
    period: Option<String>,
}

async fn leaderboard(
    State(s): State<AppState>,
    _caller: Caller,
    Query(q): Query<PeriodQuery>,
) -> ApiResult<Json<Leaderboard>> {
    let period = match q.period.as_deref() {
        None | Some("all") | Some("all_time") => Period::AllTime,
        Some("weekly") => Period::Weekly,
        Some(_) => return Err(ApiError::bad_request()),
    };
    Ok(Json(s.platform.leaderboard(period, s.platform.clock.now())))
}

/// Challenge a player by handle, or the bot with `bot: true`.
#[derive(Debug, Deserialize)]
struct NewMatch {
    opponent_handle: Option<String>,
    #[serde(default)]
    bot: bool,
    topic_id: Option<String>,
    language: String,
}

async fn create_match(
    State(s): State<AppState>,
    caller: Caller,
    Body(b): Body<NewMatch>,
) -> ApiResult<Response> {
    let opponent = match (b.bot, b.opponent_handle) {
        (true, None) => UserId::bot(),
        (false, Some(handle)) => {
            s.platform
                .find_by_handle(&handle)
                .ok_or_else(|| ApiError::new("unknown_user"))?
                .id
        }
        _ => return Err(ApiError::bad_request()),
    };
    let topic = b.topic_id.map(TopicId::new);
    let user = &caller.account.id;
    let m = s
        .platform
        .create_match(user, &opponent, topic.as_ref(), &b.language)?;
    let view = s.platform.match_view(&m.id, user)?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list_matches(
    State(s): State<AppState>,
    caller: Caller,
) -> ApiResult<Json<Vec<MatchView>>> {
    let user = &caller.account.id;
    let mut matches = s.platform.matches_for(user);
    matches.sort_by(|a, b| b.updated_at.cmp(&a.updated_at).then(a.id.cmp(&b.id)));
    let views = matches
        .iter()
        .map(|m| s.platform.match_view(&m.id, user))
        .collect::<Result<_, _>>()?;
    Ok(Json(views))
}

async fn get_match(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
) -> ApiResult<Json<MatchView>> {
    Ok(Json(
        s.platform
            .match_view(&MatchId::new(id), &caller.account.id)?,
    ))
}

#[derive(Debug, Deserialize)]
struct Turn {
    expected_version: u64,
    text: String,
}

async fn submit_turn(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(b): Body<Turn>,
) -> ApiResult<Json<MatchView>> {
    let id = MatchId::new(id);
    let user = &caller.account.id;
    s.platform
        .submit_turn(&id, user, b.expected_version, &b.text)?;
    Ok(Json(s.platform.match_view(&id, user)?))
}

#[derive(Debug, Deserialize)]
struct Guess {
    expected_version: u64,
    guess: String,
}

async fn submit_guess(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    Body(b): Body<Guess>,
) -> ApiResult<Response> {
    let guess = parse_label(&b.guess)?;
    let outcome = s.platform.submit_guess(
        &MatchId::new(id),
        &caller.account.id,
        b.expected_version,
        guess,
    )?;
    Ok(Json(outcome).into_response())
}

#[derive(Debug, Deserialize)]
struct SinceQuery {
    since: Option<DateTime<Utc>>,
}

async fn notifications(
    State(s): State<AppState>,
    caller: Caller,
    Query(q): Query<SinceQuery>,
) -> ApiResult<Response> {
    let notes = s.platform.pull_notifications(&caller.account.id, q.since);
    Ok(Json(notes).into_response())
}

#[derive(Debug, Deserialize)]
struct MarkRead {
    ids: Vec<NotificationId>,
}

#[derive(Debug, Serialize)]
struct Marked {
    marked: usize,
}

async fn mark_read(
    State(s): State<AppState>,
    caller: Caller,
    Body(b): Body<MarkRead>,
) -> ApiResult<Response> {
    let marked = s
        .platform
        .mark_notifications_read(&caller.account.id, &b.ids)?;
    Ok(Json(Marked { marked }).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct ReportBody {
    reason: Option<String>,
}

async fn report(
    State(s): State<AppState>,
    caller: Caller,
    Path(id): Path<String>,
    OptionalBody(b): OptionalBody<ReportBody>,
) -> ApiResult<Response> {
    let report = s.platform.report_spam(
        &caller.account.id,
        &ArgumentId::new(id),
        b.reason.as_deref(),
    )?;
    Ok((StatusCode::CREATED, Json(report)).into_response())
}

fn actor(admin: &Admin) -> Actor {
    Actor::User(admin.0.account.id.clone())
}

#[derive(Debug, Deserialize)]
struct StateQuery {
    state: Option<ReportState>,
}

async fn list_reports(
    State(s): State<AppState>,
    admin: Admin,
    Query(q): Query<StateQuery>,
) -> ApiResult<Response> {
    let reports = s.platform.list_reports(&actor(&admin), q.state)?;
    Ok(Json(reports).into_response())
}

#[derive(Debug, Deserialize)]
struct Resolve {
    action: ReportAction,
}

async fn resolve_report(
    State(s): State<AppState>,
    admin: Admin,
    Path(id): Path<String>,
    Body(b): Body<Resolve>,
) -> ApiResult<Response> {
    let report = s
        .platform
        .resolve_report(&actor(&admin), &ReportId::new(id), b.action)?;
    Ok(Json(report).into_response())
}

#[derive(Debug, Default, Deserialize)]
struct AggregateBody {
    seed: Option<u64>,
}

async fn aggregate(
    State(s): State<AppState>,
    admin: Admin,
    OptionalBody(b): OptionalBody<AggregateBody>,
) -> ApiResult<Response> {
    let summary =
        blocking(move || Ok(s.platform.trigger_aggregation(&actor(&admin), b.seed)?)).await?;
    Ok(Json(summary).into_response())
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    language: Option<String>,
    #[serde(default)]
    gold_only: bool,
}

async fn export(
    State(s): State<AppState>,
    _admin: Admin,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let filter = ExportFilter {
        language: q.language,
        gold_only: q.gold_only,
    };
    let (body, manifest) = blocking(move || {
        let mut body = Vec::new();
        let manifest = s.platform.export_corpus(&filter, &mut body)?;
        Ok((body, manifest))
    })
    .await?;
    let manifest = serde_json::to_string(&manifest).map_err(|_| ApiError::internal())?;
    let mut response = body.into_response();
    let headers = response.headers_mut();
    headers.insert(
        CONTENT_TYPE,
        HeaderValue::from_static("application/x-ndjson"),
    );
    headers.insert(
        MANIFEST_HEADER,
        HeaderValue::from_str(&manifest).map_err(|_| ApiError::internal())?,
    );
    Ok(response)
}

async fn stats(State(s): State<AppState>, _admin: Admin) -> Response {
    Json(s.platform.stats()).into_response()
}
