//! HTTP service for the online editing loop.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/datasets` | analyze config | `{dataset_id, name, insights, subspaces}` |
//! | GET | `/datasets` | | registered datasets |
//! | GET | `/datasets/{id}/insights?k=` | | `{dataset_id, insights}` |
//! | POST | `/sessions` | `{dataset_id, alpha?, k?}` | `{session_id, dataset_id}` |
//! | POST | `/sessions/{id}/suggest` | editing context | `{session_id, suggestions}` |
//! | POST | `/sessions/{id}/feedback` | `{insight_id, event}` | `{session_id, fatigue}` |
//! | POST | `/reports/generate` | `{dataset_id, k}` | data story |
//!
//! Errors are `{error, code}` with status 400, 404 or 502. All JSON bodies
//! are written with sorted keys.

use std::collections::HashMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use storyline::agent::{parse_context, rerank, AgentConfig, EditingContext, Suggestion};
use storyline::cube::{EnumerationBudget, SubspaceCube};
use storyline::detect::DetectorConfig;
use storyline::json::{to_canonical_pretty, to_canonical_string};
use storyline::model::{DataTable, Insight};
use storyline::narrative::{chart_for, LlmBackendConfig, NarrativeError, Narrator};
use storyline::pipeline::{
    attach_evidence, read_cube, read_insights, run_analysis_with, AnalyzeConfig, PipelineError,
};
use storyline::score::{top_k, FatigueState, Feedback, ScoringWeights};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    /// One subdirectory of analysis artifacts per registered dataset.
    pub registry_dir: PathBuf,
    /// One JSON document per session.
    pub session_dir: PathBuf,
    pub scoring: ScoringWeights,
    pub budget: EnumerationBudget,
    pub detectors: DetectorConfig,
    pub narrative: LlmBackendConfig,
    pub agent: AgentConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            registry_dir: PathBuf::from("storyline-data/datasets"),
            session_dir: PathBuf::from("storyline-data/sessions"),
            scoring: ScoringWeights::default(),
            budget: EnumerationBudget::default(),
            detectors: DetectorConfig::default(),
            narrative: LlmBackendConfig::default(),
            agent: AgentConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid service config: {0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Narrative(#[from] NarrativeError),
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), ServiceError> {
        self.bind
            .parse::<SocketAddr>()
            .map_err(|e| ServiceError::Config(format!("bind `{}`: {e}", self.bind)))?;
        self.scoring
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        self.narrative.validate()?;
        let a = &self.agent;
        if !(0.0..=1.0).contains(&a.alpha) || !(a.decay > 0.0 && a.decay < 1.0) || a.k == 0 {
            return Err(ServiceError::Config(
                "agent needs alpha in [0,1], decay in (0,1) and k >= 1".into(),
            ));
        }
        for dir in [&self.registry_dir, &self.session_dir] {
            fs::create_dir_all(dir).map_err(|source| ServiceError::Io {
                path: dir.clone(),
                source,
            })?;
        }
        Ok(())
    }
}

/// A registered dataset: its ranked insight pool and cube.
pub struct DatasetEntry {
    pub id: String,
    pub name: String,
    pub pool: Vec<Insight>,
    pub cube: SubspaceCube,
    pub table: Option<DataTable>,
}

impl DatasetEntry {
    fn with_evidence(&self, insight: &Insight) -> Insight {
        let mut i = insight.clone();
        attach_evidence(&mut i, &self.cube, self.table.as_ref());
        i
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub dataset_id: String,
    pub agent: AgentConfig,
    pub fatigue: FatigueState,
    #[serde(default)]
    pub last_context: Option<EditingContext>,
}

pub struct AppState {
    config: ServiceConfig,
    narrator: Arc<Narrator>,
    datasets: RwLock<HashMap<String, Arc<DatasetEntry>>>,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Session>>>>,
}

fn load_entry(dir: &Path) -> Result<DatasetEntry, PipelineError> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let pool = read_insights(&dir.join("insights.jsonl"))?;
    let cube = read_cube(&dir.join("cube.jsonl"))?;
    Ok(DatasetEntry {
        id,
        name: cube.dataset().to_string(),
        pool,
        cube,
        table: None,
    })
}

impl AppState {
    /// Validates the config and reloads every dataset in the registry.
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        Self::with_narrator(config.clone(), Narrator::from_config(&config.narrative)?)
    }

    pub fn with_narrator(config: ServiceConfig, narrator: Narrator) -> Result<Self, ServiceError> {
        config.validate()?;
        let mut datasets = HashMap::new();
        let dir = &config.registry_dir;
        let entries = fs::read_dir(dir).map_err(|source| ServiceError::Io {
            path: dir.clone(),
            source,
        })?;
        for e in entries.flatten() {
            let path = e.path();
            if path.join("insights.jsonl").exists() && path.join("cube.jsonl").exists() {
                let entry = load_entry(&path)?;
                datasets.insert(entry.id.clone(), Arc::new(entry));
            }
        }
        Ok(AppState {
            config,
            narrator: Arc::new(narrator),
            datasets: RwLock::new(datasets),
            sessions: Mutex::new(HashMap::new()),
        })
    }

    fn dataset(&self, id: &str) -> Result<Arc<DatasetEntry>, ApiError> {
        self.datasets
            .read()
            .expect("dataset lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown dataset `{id}`")))
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.config.session_dir.join(format!("{id}.json"))
    }

    /// The session's lock, reloading it from disk after a restart.
    fn session(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
        let mut map = self.sessions.lock().expect("session lock");
        if let Some(s) = map.get(id) {
            return Ok(s.clone());
        }
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-');
        let text = valid
            .then(|| fs::read_to_string(self.session_path(id)).ok())
            .flatten();
        let session: Session = text
            .and_then(|t| serde_json::from_str(&t).ok())
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
        let handle = Arc::new(tokio::sync::Mutex::new(session));
        map.insert(id.to_string(), handle.clone());
        Ok(handle)
    }

    fn persist(&self, session: &Session) -> Result<(), ApiError> {
        let path = self.session_path(&session.id);
        let tmp = path.with_extension("json.tmp");
        let body = to_canonical_pretty(session).map_err(|e| ApiError::internal(e.to_string()))?;
        fs::write(&tmp, body)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| ApiError::internal(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Responses

/// `{error, code}` with an HTTP status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "validation",
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: message.into(),
        }
    }
}

impl From<NarrativeError> for ApiError {
    fn from(e: NarrativeError) -> Self {
        match e {
            NarrativeError::BackendUnavailable(_) => ApiError {
                status: StatusCode::BAD_GATEWAY,
                code: "backend_unavailable",
                message: e.to_string(),
            },
            NarrativeError::EmptyInput => ApiError::bad_request(e.to_string()),
            _ => ApiError::internal(e.to_string()),
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Narrative(n) => n.into(),
            PipelineError::Io { .. } => ApiError::internal(e.to_string()),
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match to_canonical_string(body) {
        Ok(text) => (status, [(header::CONTENT_TYPE, "application/json")], text).into_response(),
        Err(e) => ApiError::internal(e.to_string()).into_response(),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body<'a> {
            error: &'a str,
            code: &'a str,
        }
        json_response(
            self.status,
            &Body {
                error: &self.message,
                code: self.code,
            },
        )
    }
}

struct Json<T>(T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        json_response(StatusCode::OK, &self.0)
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> T + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<Json<T>, ApiError>;

// ---------------------------------------------------------------------------
// Handlers

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset_id: String,
    pub name: String,
    pub insights: usize,
    pub subspaces: usize,
}

impl DatasetSummary {
    fn of(e: &DatasetEntry) -> Self {
        DatasetSummary {
            dataset_id: e.id.clone(),
            name: e.name.clone(),
            insights: e.pool.len(),
            subspaces: e.cube.len(),
        }
    }
}

/// Registers a dataset and runs the offline flow on it. Fields missing from
/// the body take the service defaults.
async fn register_dataset(State(state): State<Shared>, body: Bytes) -> ApiResult<DatasetSummary> {
    let mut value: serde_json::Value = parse_body(&body)?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| ApiError::bad_request("body must be an object"))?;
    let defaults = [
        ("budget", serde_json::to_value(&state.config.budget)),
        ("detectors", serde_json::to_value(&state.config.detectors)),
        ("scoring", serde_json::to_value(&state.config.scoring)),
    ];
    for (key, v) in defaults {
        obj.entry(key)
            .or_insert(v.map_err(|e| ApiError::internal(e.to_string()))?);
    }
    let cfg: AnalyzeConfig =
        serde_json::from_value(value).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let dir = state.config.registry_dir.join(&id);
    let entry = blocking(move || -> Result<DatasetEntry, PipelineError> {
        let run = run_analysis_with(&cfg, &Narrator::template())?;
        run.write_artifacts(&dir)?;
        Ok(DatasetEntry {
            id,
            name: run.table.name().to_string(),
            pool: run.pool,
            cube: run.cube,
            table: Some(run.table),
        })
    })
    .await??;
    let summary = DatasetSummary::of(&entry);
    state
        .datasets
        .write()
        .expect("dataset lock")
        .insert(entry.id.clone(), Arc::new(entry));
    Ok(Json(summary))
}

async fn list_datasets(State(state): State<Shared>) -> ApiResult<Vec<DatasetSummary>> {
    let map = state.datasets.read().expect("dataset lock");
    let mut v: Vec<DatasetSummary> = map.values().map(|e| DatasetSummary::of(e)).collect();
    v.sort_by(|a, b| a.dataset_id.cmp(&b.dataset_id));
    Ok(Json(v))
}

#[derive(Debug, Deserialize)]
struct KQuery {
    k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InsightList {
    pub dataset_id: String,
    pub insights: Vec<Insight>,
}

/// The offline top-k (fatigue caps applied, no session state).
async fn dataset_insights(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<KQuery>,
) -> ApiResult<InsightList> {
    let entry = state.dataset(&id)?;
    let k = q.k.unwrap_or(10);
    let insights = top_k(
        &entry.pool,
        k,
        state.config.scoring.fatigue_cap,
        &FatigueState::default(),
    )
    .iter()
    .map(|i| entry.with_evidence(i))
    .collect();
    Ok(Json(InsightList {
        dataset_id: id,
        insights,
    }))
}

#[derive(Debug, Deserialize)]
struct NewSession {
    dataset_id: String,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub dataset_id: String,
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> ApiResult<SessionCreated> {
    let req: NewSession = parse_body(&body)?;
    state.dataset(&req.dataset_id)?;
    let mut agent = state.config.agent.clone();
    if let Some(a) = req.alpha {
        if !(0.0..=1.0).contains(&a) {
            return Err(ApiError::bad_request("alpha must lie in [0,1]"));
        }
        agent.alpha = a;
    }
    if let Some(k) = req.k {
        if k == 0 {
            return Err(ApiError::bad_request("k must be positive"));
        }
        agent.k = k;
    }
    let session = Session {
        id: uuid::Uuid::new_v4().to_string(),
        dataset_id: req.dataset_id.clone(),
        agent,
        fatigue: FatigueState::default(),
        last_context: None,
    };
    state.persist(&session)?;
    let id = session.id.clone();
    state
        .sessions
        .lock()
        .expect("session lock")
        .insert(id.clone(), Arc::new(tokio::sync::Mutex::new(session)));
    Ok(Json(SessionCreated {
        session_id: id,
        dataset_id: req.dataset_id,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub session_id: String,
    pub suggestions: Vec<Suggestion>,
}

async fn suggest(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<SuggestResponse> {
    let handle = state.session(&id)?;
    let mut ctx: EditingContext = parse_body(&body)?;
    let mut session = handle.lock().await;
    let entry = state.dataset(&session.dataset_id)?;
    ctx.truncate_edits(session.agent.max_edits);
    let tokens = parse_context(&ctx);
    let mut suggestions = rerank(
        &entry.pool,
        &tokens,
        &session.agent,
        &session.fatigue,
        state.config.scoring.fatigue_cap,
    );
    for s in &mut suggestions {
        s.insight = entry.with_evidence(&s.insight);
        s.chart = chart_for(&s.insight);
    }
    if state.narrator.mode() == storyline::narrative::NarrativeMode::Remote {
        let narrator = state.narrator.clone();
        suggestions = blocking(move || -> Result<Vec<Suggestion>, NarrativeError> {
            for s in &mut suggestions {
                s.description = narrator.describe(&s.insight)?;
            }
            Ok(suggestions)
        })
        .await??;
    }
    session.last_context = Some(ctx);
    state.persist(&session)?;
    Ok(Json(SuggestResponse {
        session_id: id,
        suggestions,
    }))
}

#[derive(Debug, Deserialize)]
struct FeedbackRequest {
    insight_id: String,
    event: Feedback,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub session_id: String,
    pub fatigue: FatigueState,
}

async fn feedback(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<FeedbackResponse> {
    let handle = state.session(&id)?;
    let req: FeedbackRequest = parse_body(&body)?;
    let mut session = handle.lock().await;
    let entry = state.dataset(&session.dataset_id)?;
    let insight = entry
        .pool
        .iter()
        .find(|i| i.id == req.insight_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown insight `{}`", req.insight_id)))?;
    session.fatigue =
        storyline::agent::apply_feedback(req.event, insight, &session.fatigue, session.agent.decay);
    state.persist(&session)?;
    Ok(Json(FeedbackResponse {
        session_id: id,
        fatigue: session.fatigue.clone(),
    }))
}

#[derive(Debug, Deserialize)]
struct ReportRequest {
    dataset_id: String,
    #[serde(default)]
    k: Option<usize>,
}

async fn generate_report(
    State(state): State<Shared>,
    body: Bytes,
) -> ApiResult<storyline::narrative::DataStory> {
    let req: ReportRequest = parse_body(&body)?;
    let entry = state.dataset(&req.dataset_id)?;
    let k = req.k.unwrap_or(10);
    if k == 0 {
        return Err(ApiError::bad_request("k must be positive"));
    }
    let top: Vec<Insight> = top_k(
        &entry.pool,
        k,
        state.config.scoring.fatigue_cap,
        &FatigueState::default(),
    )
    .iter()
    .map(|i| entry.with_evidence(i))
    .collect();
    let narrator = state.narrator.clone();
    let name = entry.name.clone();
    let story = blocking(move || narrator.assemble_story(&name, &top)).await??;
    Ok(Json(story))
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(register_dataset).get(list_datasets))
        .route("/datasets/{id}/insights", get(dataset_insights))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/suggest", post(suggest))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/reports/generate", post(generate_report))
        .fallback(not_found)
        .with_state(state)
}

/// Binds and serves until the process ends.
pub async fn serve(state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&state.config.bind).await?;
    serve_on(listener, state).await
}

pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: Arc<AppState>,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
