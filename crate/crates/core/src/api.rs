//! JSON-over-HTTP facade under `/v1`.
//!
//! Responses are filtered by condition on the server: only MMM sessions ever
//! see `s_d` / `s_cum`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::engine::{Engine, LogStore};
use crate::matcher::{Intention, LlmConfig, LlmMatcher, MatchError, MatcherBackend, Matchers};
use crate::score::{ScoreStrategy, Valence};
use crate::session::{
    Condition, IterationRecord, SessionConfig, SessionError, SessionState, SessionStatus,
};
use crate::token::{ConceptEntry, Grid, Token, TokenCombination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiErrorCode {
    BadRequest,
    NotFound,
    Conflict,
    UpstreamUnavailable,
}

impl ApiErrorCode {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ApiErrorCode::NotFound => StatusCode::NOT_FOUND,
            ApiErrorCode::Conflict => StatusCode::CONFLICT,
            ApiErrorCode::UpstreamUnavailable => StatusCode::SERVICE_UNAVAILABLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub code: ApiErrorCode,
    pub detail: String,
}

impl ApiError {
    pub fn bad_request(detail: impl Into<String>) -> Self {
        ApiError {
            code: ApiErrorCode::BadRequest,
            detail: detail.into(),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::InvalidConfig(_) | SessionError::Invalid(_) => ApiErrorCode::BadRequest,
            SessionError::NotFound(_) => ApiErrorCode::NotFound,
            SessionError::NotActive | SessionError::AlreadyExists(_) => ApiErrorCode::Conflict,
            SessionError::Matcher(MatchError::BackendUnavailable(_))
            | SessionError::Matcher(MatchError::MalformedBackendResponse(_))
            | SessionError::Io(_)
            | SessionError::CorruptLog { .. } => ApiErrorCode::UpstreamUnavailable,
        };
        ApiError {
            code,
            detail: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub condition: String,
    #[serde(default)]
    pub score_strategy: Option<ScoreStrategy>,
    #[serde(default)]
    pub matcher_backend: Option<MatcherBackend>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub max_iterations: Option<u32>,
    #[serde(default)]
    pub demo_interval: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub id: String,
    pub condition: Condition,
    pub max_iterations: u32,
    pub demo_interval: u32,
    pub status: SessionStatus,
    pub score: u32,
    pub iterations: u32,
    pub remaining: u32,
}

impl From<&SessionState> for SessionDescriptor {
    fn from(s: &SessionState) -> Self {
        SessionDescriptor {
            id: s.id.clone(),
            condition: s.config.condition,
            max_iterations: s.config.max_iterations,
            demo_interval: s.config.demo_interval,
            status: s.status,
            score: s.score,
            iterations: s.iterations(),
            remaining: s.remaining(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterationRequest {
    pub tokens: Vec<Token>,
    pub intention: String,
}

/// What a participant sees after one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationView {
    pub d: u32,
    pub valence: Valence,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_cum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demonstration: Option<Grid>,
    pub status: SessionStatus,
    pub remaining: u32,
}

impl IterationView {
    pub fn filtered(record: &IterationRecord, condition: Condition, state: &SessionState) -> Self {
        let mmm = condition == Condition::Mmm;
        IterationView {
            d: record.d,
            valence: record.feedback.valence,
            message: record.feedback.message.clone(),
            s_d: record.feedback.s_d.filter(|_| mmm),
            s_cum: record.feedback.s_cum.filter(|_| mmm),
            demonstration: record.demonstration,
            status: state.status,
            remaining: state.remaining(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsView {
    pub id: String,
    pub condition: Condition,
    pub learned_count: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_cum: Option<Vec<f64>>,
}

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    default_backend: MatcherBackend,
}

pub fn router(engine: Arc<Engine>, default_backend: MatcherBackend) -> Router {
    let state = AppState {
        engine,
        default_backend,
    };
    Router::new()
        .route("/v1/concepts", get(list_concepts))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/iterations", post(submit_iteration))
        .route("/v1/sessions/{id}/demonstration", get(get_demonstration))
        .route("/v1/sessions/{id}/metrics", get(get_metrics))
        .with_state(state)
}

/// `router` plus static client assets from `ui_dir` for every other path.
pub fn router_with_ui(
    engine: Arc<Engine>,
    default_backend: MatcherBackend,
    ui_dir: &std::path::Path,
) -> Router {
    let index = ui_dir.join("index.html");
    router(engine, default_backend).fallback_service(
        tower_http::services::ServeDir::new(ui_dir)
            .fallback(tower_http::services::ServeFile::new(index)),
    )
}

async fn list_concepts(State(app): State<AppState>) -> Json<Vec<ConceptEntry>> {
    Json(app.engine.dictionary().entries().to_vec())
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionDescriptor>), ApiError> {
    let Json(req) = body?;
    let condition: Condition = req.condition.parse()?;
    let mut config = SessionConfig::new(condition);
    config.matcher_backend = req.matcher_backend.unwrap_or(app.default_backend);
    config.score_strategy = req.score_strategy.unwrap_or_default();
    config.seed = req.seed.unwrap_or_else(rand::random);
    if let Some(m) = req.max_iterations {
        config.max_iterations = m;
    }
    if let Some(i) = req.demo_interval {
        config.demo_interval = i;
    }
    let state = app.engine.create_session(config)?;
    Ok((StatusCode::CREATED, Json(SessionDescriptor::from(&state))))
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionDescriptor>, ApiError> {
    Ok(Json(SessionDescriptor::from(&app.engine.session(&id)?)))
}

async fn submit_iteration(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<IterationRequest>, JsonRejection>,
) -> Result<Json<IterationView>, ApiError> {
    let Json(req) = body?;
    // validate before touching the session so bad input never costs an iteration
    let combo =
        TokenCombination::try_from(req.tokens).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let intention =
        Intention::new(req.intention).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let engine = Arc::clone(&app.engine);
    let view = tokio::task::spawn_blocking(move || -> Result<IterationView, SessionError> {
        let record = engine.submit_iteration(&id, combo, intention)?;
        let state = engine.session(&id)?;
        Ok(IterationView::filtered(
            &record,
            state.config.condition,
            &state,
        ))
    })
    .await
    .map_err(|e| ApiError {
        code: ApiErrorCode::UpstreamUnavailable,
        detail: e.to_string(),
    })??;
    Ok(Json(view))
}

async fn get_demonstration(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let grid = app.engine.demonstration(&id)?;
    Ok(Json(json!({ "id": id, "grid": grid })))
}

async fn get_metrics(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<MetricsView>, ApiError> {
    let state = app.engine.session(&id)?;
    let series = state.series();
    let mmm = state.config.condition == Condition::Mmm;
    Ok(Json(MetricsView {
        id: state.id,
        condition: state.config.condition,
        learned_count: series.learned_count,
        s_d: mmm.then_some(series.s_d),
        s_cum: mmm.then_some(series.s_cum),
    }))
}

pub const ENV_BIND: &str = "MMM_BIND";
pub const ENV_DATA_DIR: &str = "MMM_DATA_DIR";
pub const ENV_MATCHER: &str = "MMM_MATCHER";
pub const ENV_FSYNC: &str = "MMM_FSYNC";
pub const ENV_UI_DIR: &str = "MMM_UI_DIR";

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub bind: SocketAddr,
    pub data_dir: Option<PathBuf>,
    pub fsync: bool,
    pub ui_dir: Option<PathBuf>,
    pub backend: MatcherBackend,
    pub llm: Option<LlmConfig>,
}

impl ServeConfig {
    pub fn from_env() -> anyhow::Result<Self> {
        let bind = std::env::var(ENV_BIND)
            .unwrap_or_else(|_| "127.0.0.1:8080".to_string())
            .parse()?;
        let backend = match std::env::var(ENV_MATCHER).as_deref() {
            Ok("llm") => MatcherBackend::Llm,
            Ok("lexicon") | Err(_) => MatcherBackend::Lexicon,
            Ok(other) => anyhow::bail!("{ENV_MATCHER} must be `lexicon` or `llm`, got `{other}`"),
        };
        let llm = LlmConfig::from_env();
        if backend == MatcherBackend::Llm && llm.is_none() {
            anyhow::bail!(
                "{ENV_MATCHER}=llm needs {}",
                crate::matcher::llm::ENV_ENDPOINT
            );
        }
        Ok(ServeConfig {
            bind,
            data_dir: std::env::var_os(ENV_DATA_DIR).map(PathBuf::from),
            fsync: matches!(std::env::var(ENV_FSYNC).as_deref(), Ok("1") | Ok("true")),
            ui_dir: std::env::var_os(ENV_UI_DIR).map(PathBuf::from),
            backend,
            llm,
        })
    }

    pub fn build_engine(&self) -> anyhow::Result<Engine> {
        let matchers = match &self.llm {
            Some(cfg) => Matchers::with_llm(LlmMatcher::new(cfg.clone())),
            None => Matchers::lexicon_only(),
        };
        let engine = Engine::new(matchers);
        Ok(match &self.data_dir {
            Some(dir) => engine.with_store(LogStore::open(dir, self.fsync)?)?,
            None => engine,
        })
    }
}

pub async fn serve(config: ServeConfig) -> anyhow::Result<()> {
    let engine = Arc::new(config.build_engine()?);
    let app = match &config.ui_dir {
        Some(dir) => router_with_ui(engine, config.backend, dir),
        None => router(engine, config.backend),
    };
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving /v1");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
