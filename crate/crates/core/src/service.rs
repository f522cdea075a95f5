//! REST service wrapping dialogue sessions for interactive elicitation.
//!
//! Each request against a session runs on the blocking pool with that
//! session's lock held, so requests to one session are serialized while
//! distinct sessions proceed in parallel.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

use crate::acquisition::{Policy, PolicyKind};
use crate::catalog::{synth_binary_code_catalog, ItemCatalog};
use crate::dialogue::{Method, ObservationMode, Providers, Session, SessionConfig, SessionExport};
use crate::entailment::EntailmentConfig;
use crate::error::{Error, Result};
use crate::querygen::Answer;

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";
pub const DEMO_CATALOG: &str = "demo";

/// `PEBOL_ADDR`, or [`DEFAULT_ADDR`].
pub fn listen_addr() -> Result<SocketAddr> {
    let raw = std::env::var("PEBOL_ADDR").unwrap_or_else(|_| DEFAULT_ADDR.to_string());
    raw.parse()
        .map_err(|_| Error::InvalidArgument(format!("PEBOL_ADDR is not a socket address: {raw:?}")))
}

struct CatalogEntry {
    catalog: Arc<ItemCatalog>,
    providers: Providers,
}

struct StoredSession {
    catalog: String,
    session: Mutex<Session>,
}

/// Registered catalogs plus the live sessions.
pub struct SessionStore {
    catalogs: HashMap<String, CatalogEntry>,
    sessions: RwLock<HashMap<String, Arc<StoredSession>>>,
    defaults: SessionConfig,
}

impl SessionStore {
    /// `defaults` fills every field a create request leaves out, except the
    /// seed, which is drawn fresh per session unless given.
    pub fn new(defaults: SessionConfig) -> Self {
        Self {
            catalogs: HashMap::new(),
            sessions: RwLock::new(HashMap::new()),
            defaults,
        }
    }

    /// A store with the synthetic 100-item, 7-bit `demo` catalog and offline providers.
    pub fn with_demo(seed: u64) -> Result<Self> {
        let mut store = Self::new(SessionConfig::default());
        let catalog = synth_binary_code_catalog(100, 7, seed)?;
        let providers = Providers::offline(&catalog)?;
        store.register_catalog(DEMO_CATALOG, catalog, providers);
        Ok(store)
    }

    pub fn register_catalog(&mut self, name: impl Into<String>, catalog: ItemCatalog, providers: Providers) {
        self.catalogs.insert(
            name.into(),
            CatalogEntry {
                catalog: Arc::new(catalog),
                providers,
            },
        );
    }

    pub fn catalog_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.catalogs.keys().map(String::as_str).collect();
        names.sort_unstable();
        names
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().len()
    }

    fn lookup(&self, id: &str) -> Option<Arc<StoredSession>> {
        self.sessions.read().get(id).cloned()
    }

    /// Writes `{catalog, session}` JSON for every live session into `dir`.
    pub fn write_snapshots(&self, dir: &Path) -> Result<usize> {
        std::fs::create_dir_all(dir)?;
        let sessions: Vec<(String, Arc<StoredSession>)> =
            self.sessions.read().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        for (id, stored) in &sessions {
            let export = stored.session.lock().export();
            let doc = json!({"catalog": stored.catalog, "session": export});
            let tmp = dir.join(format!("{id}.json.tmp"));
            std::fs::write(&tmp, serde_json::to_vec(&doc)?)?;
            std::fs::rename(&tmp, dir.join(format!("{id}.json")))?;
        }
        Ok(sessions.len())
    }

    /// Loads snapshots written by [`write_snapshots`](Self::write_snapshots).
    /// Files naming an unregistered catalog are skipped.
    pub fn restore_snapshots(&self, dir: &Path) -> Result<usize> {
        #[derive(Deserialize)]
        struct Snapshot {
            catalog: String,
            session: SessionExport,
        }
        let mut restored = 0;
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
                continue;
            };
            let snap: Snapshot = serde_json::from_slice(&std::fs::read(&path)?)?;
            let Some(entry) = self.catalogs.get(&snap.catalog) else {
                continue;
            };
            let session = Session::import(snap.session, entry.catalog.clone(), entry.providers.clone())?;
            self.sessions.write().insert(
                id,
                Arc::new(StoredSession {
                    catalog: snap.catalog,
                    session: Mutex::new(session),
                }),
            );
            restored += 1;
        }
        Ok(restored)
    }
}

/// Periodically snapshots every session into `dir` until the runtime stops.
pub fn spawn_snapshot_task(store: Arc<SessionStore>, dir: PathBuf, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        tick.tick().await;
        loop {
            tick.tick().await;
            let store = store.clone();
            let dir = dir.clone();
            let res = tokio::task::spawn_blocking(move || store.write_snapshots(&dir)).await;
            if let Ok(Err(e)) = res {
                eprintln!("snapshot failed: {e}");
            }
        }
    })
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str) -> Self {
        Self {
            status,
            body: json!({ "error": code }),
        }
    }

    fn with_message(status: StatusCode, code: &str, message: impl ToString) -> Self {
        Self {
            status,
            body: json!({ "error": code, "message": message.to_string() }),
        }
    }

    fn unknown_session() -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::State { phase } => Self::new(StatusCode::CONFLICT, phase),
            Error::AllAspectsExhausted => Self::new(StatusCode::CONFLICT, "aspects_exhausted"),
            Error::InvalidArgument(_) | Error::Validation(_) => {
                Self::with_message(StatusCode::BAD_REQUEST, "invalid_request", e)
            }
            Error::Transport { .. } => Self::with_message(StatusCode::BAD_GATEWAY, "provider_unavailable", e),
            Error::Unsupported(_) => Self::with_message(StatusCode::UNPROCESSABLE_ENTITY, "unsupported", e),
            other => Self::with_message(StatusCode::INTERNAL_SERVER_ERROR, "internal", other),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = std::result::Result<Response, ApiError>;

/// Body of `POST /sessions`. Every field but `catalog` overrides a default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub catalog: String,
    pub method: Option<String>,
    pub policy: Option<String>,
    pub ucb_k: Option<f64>,
    pub obs: Option<String>,
    pub nli_temp: Option<f64>,
    pub history: Option<bool>,
    pub max_turns: Option<usize>,
    pub top_k: Option<usize>,
    pub seed: Option<u64>,
    pub prior_alpha: Option<f64>,
    pub prior_beta: Option<f64>,
}

impl CreateSession {
    fn config(&self, defaults: &SessionConfig) -> Result<SessionConfig> {
        let mut c = defaults.clone();
        if let Some(m) = &self.method {
            c.method = m.parse::<Method>()?;
        }
        let kind = match &self.policy {
            Some(p) => p.parse::<PolicyKind>()?,
            None => c.policy.kind,
        };
        c.policy = Policy::new(kind, self.ucb_k.unwrap_or(c.policy.ucb_percentile))?;
        if let Some(o) = &self.obs {
            c.observation_mode = o.parse::<ObservationMode>()?;
        }
        if let Some(t) = self.nli_temp {
            c.nli = EntailmentConfig::new(t)?;
        }
        if let Some(h) = self.history {
            c.include_history = h;
        }
        if let Some(n) = self.max_turns {
            c.max_turns = n;
        }
        if let Some(k) = self.top_k {
            c.top_k = k;
        }
        if let Some(a) = self.prior_alpha {
            c.prior_alpha = a;
        }
        if let Some(b) = self.prior_beta {
            c.prior_beta = b;
        }
        c.seed = self.seed.unwrap_or_else(rand::random);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Serialize)]
struct Recommendation {
    rank: usize,
    id: String,
    description: String,
    score: f64,
}

#[derive(Debug, Serialize)]
struct BeliefSummary {
    id: String,
    mean: f64,
    variance: f64,
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &Bytes) -> std::result::Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::with_message(StatusCode::BAD_REQUEST, "invalid_request", e))
}

/// Runs `f` against the session on the blocking pool.
async fn with_session<T, F>(store: &Arc<SessionStore>, id: String, f: F) -> std::result::Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> std::result::Result<T, ApiError> + Send + 'static,
{
    let stored = store.lookup(&id).ok_or_else(ApiError::unknown_session)?;
    tokio::task::spawn_blocking(move || f(&mut stored.session.lock()))
        .await
        .map_err(|e| ApiError::with_message(StatusCode::INTERNAL_SERVER_ERROR, "internal", e))?
}

async fn create_session(State(store): State<Arc<SessionStore>>, body: Bytes) -> ApiResult {
    let req: CreateSession = parse_json(&body)?;
    let entry = store
        .catalogs
        .get(&req.catalog)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_catalog"))?;
    let config = req.config(&store.defaults)?;
    let session = Session::start(config.clone(), entry.catalog.clone(), entry.providers.clone())?;
    let id = uuid::Uuid::new_v4().to_string();
    store.sessions.write().insert(
        id.clone(),
        Arc::new(StoredSession {
            catalog: req.catalog.clone(),
            session: Mutex::new(session),
        }),
    );
    let body = json!({"session_id": id, "n_items": entry.catalog.len(), "config": config});
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn next_query(State(store): State<Arc<SessionStore>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let q = with_session(&store, id, |s| s.next_query().map_err(ApiError::from)).await?;
    Ok(Json(json!({
        "turn": q.turn,
        "query": q.text,
        "aspect": q.aspect,
        "selected_item": q.selected_item,
    }))
    .into_response())
}

#[derive(Deserialize)]
struct ResponseBody {
    answer: Value,
}

async fn submit_response(
    State(store): State<Arc<SessionStore>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult {
    if store.lookup(&id).is_none() {
        return Err(ApiError::unknown_session());
    }
    let req: ResponseBody = parse_json(&body)?;
    let answer: Answer = req
        .answer
        .as_str()
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| ApiError::with_message(StatusCode::BAD_REQUEST, "invalid_answer", "answer must be \"yes\" or \"no\""))?;
    let body = with_session(&store, id, move |s| {
        let result = s.submit_response(answer)?;
        let catalog = s.catalog().clone();
        let recommendations: Vec<Recommendation> = result
            .ranking
            .entries
            .iter()
            .enumerate()
            .map(|(r, e)| {
                let item = &catalog.items()[e.index];
                Recommendation {
                    rank: r + 1,
                    id: item.id.clone(),
                    description: item.description.clone(),
                    score: e.score,
                }
            })
            .collect();
        let belief_summary: Option<Vec<BeliefSummary>> = s.belief_snapshot().ok().map(|rows| {
            rows.into_iter()
                .map(|r| BeliefSummary {
                    id: r.id,
                    mean: r.mean,
                    variance: r.variance,
                })
                .collect()
        });
        Ok(json!({
            "turn": result.turn.index,
            "recommendations": recommendations,
            "belief_summary": belief_summary,
            "finished": result.finished,
        }))
    })
    .await?;
    Ok(Json(body).into_response())
}

async fn get_state(State(store): State<Arc<SessionStore>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    let export = with_session(&store, id, |s| Ok(s.export())).await?;
    Ok(Json(export).into_response())
}

async fn list_catalogs(State(store): State<Arc<SessionStore>>) -> Json<Value> {
    let catalogs: Vec<Value> = store
        .catalog_names()
        .into_iter()
        .map(|name| json!({"name": name, "n_items": store.catalogs[name].catalog.len()}))
        .collect();
    Json(json!({ "catalogs": catalogs }))
}

async fn openapi() -> Json<Value> {
    Json(openapi_document())
}

fn error_ref(description: &str) -> Value {
    json!({"description": description, "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Error"}}}})
}

/// OpenAPI 3 description of the routes.
pub fn openapi_document() -> Value {
    let id_param = json!([{"name": "id", "in": "path", "required": true, "schema": {"type": "string", "format": "uuid"}}]);
    json!({
        "openapi": "3.0.3",
        "info": {"title": "pebol", "version": env!("CARGO_PKG_VERSION")},
        "paths": {
            "/catalogs": {"get": {
                "summary": "List registered catalogs",
                "responses": {"200": {"description": "Catalog names and sizes"}}
            }},
            "/sessions": {"post": {
                "summary": "Start an elicitation session",
                "requestBody": {"required": true, "content": {"application/json": {"schema": {"$ref": "#/components/schemas/CreateSession"}}}},
                "responses": {
                    "201": {"description": "Session created", "content": {"application/json": {"schema": {
                        "type": "object",
                        "properties": {"session_id": {"type": "string"}, "n_items": {"type": "integer"}, "config": {"type": "object"}}
                    }}}},
                    "400": error_ref("Invalid configuration"),
                    "404": error_ref("Unknown catalog")
                }
            }},
            "/sessions/{id}/query": {"get": {
                "summary": "Ask the next question",
                "parameters": id_param,
                "responses": {
                    "200": {"description": "Next query", "content": {"application/json": {"schema": {
                        "type": "object",
                        "properties": {"turn": {"type": "integer"}, "query": {"type": "string"}, "aspect": {"type": "string", "nullable": true}}
                    }}}},
                    "404": error_ref("Unknown session"),
                    "409": error_ref("Session is awaiting a response, finished, or out of aspects")
                }
            }},
            "/sessions/{id}/response": {"post": {
                "summary": "Answer the pending question",
                "parameters": id_param,
                "requestBody": {"required": true, "content": {"application/json": {"schema": {
                    "type": "object", "required": ["answer"],
                    "properties": {"answer": {"type": "string", "enum": ["yes", "no"]}}
                }}}},
                "responses": {
                    "200": {"description": "Updated recommendations", "content": {"application/json": {"schema": {
                        "type": "object",
                        "properties": {
                            "turn": {"type": "integer"},
                            "recommendations": {"type": "array", "items": {"type": "object", "properties": {
                                "rank": {"type": "integer"}, "id": {"type": "string"},
                                "description": {"type": "string"}, "score": {"type": "number"}
                            }}},
                            "belief_summary": {"type": "array", "nullable": true, "items": {"type": "object", "properties": {
                                "id": {"type": "string"}, "mean": {"type": "number"}, "variance": {"type": "number"}
                            }}},
                            "finished": {"type": "boolean"}
                        }
                    }}}},
                    "400": error_ref("Answer is not yes or no"),
                    "404": error_ref("Unknown session"),
                    "409": error_ref("No query is pending")
                }
            }},
            "/sessions/{id}/state": {"get": {
                "summary": "Full session export",
                "parameters": id_param,
                "responses": {"200": {"description": "Session export"}, "404": error_ref("Unknown session")}
            }}
        },
        "components": {"schemas": {
            "Error": {"type": "object", "required": ["error"], "properties": {"error": {"type": "string"}, "message": {"type": "string"}}},
            "CreateSession": {"type": "object", "required": ["catalog"], "properties": {
                "catalog": {"type": "string"},
                "method": {"type": "string", "enum": ["pebol", "monollm"]},
                "policy": {"type": "string", "enum": ["ts", "ucb", "er", "greedy", "random"]},
                "ucb_k": {"type": "number"},
                "obs": {"type": "string", "enum": ["binary", "prob"]},
                "nli_temp": {"type": "number"},
                "history": {"type": "boolean"},
                "max_turns": {"type": "integer"},
                "top_k": {"type": "integer"},
                "seed": {"type": "integer"},
                "prior_alpha": {"type": "number"},
                "prior_beta": {"type": "number"}
            }}
        }}
    })
}

/// CORS for `PEBOL_CORS_ORIGIN` if set, otherwise any origin.
fn cors() -> CorsLayer {
    match std::env::var("PEBOL_CORS_ORIGIN").ok().and_then(|o| o.parse::<HeaderValue>().ok()) {
        Some(origin) => CorsLayer::new()
            .allow_origin(origin)
            .allow_methods(tower_http::cors::Any)
            .allow_headers(tower_http::cors::Any),
        None => CorsLayer::permissive(),
    }
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/spec", get(openapi))
        .route("/catalogs", get(list_catalogs))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/query", get(next_query))
        .route("/sessions/{id}/response", post(submit_response))
        .route("/sessions/{id}/state", get(get_state))
        .layer(cors())
        .with_state(store)
}

/// Serves until the listener fails.
pub async fn serve(store: Arc<SessionStore>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store)).await?;
    Ok(())
}
