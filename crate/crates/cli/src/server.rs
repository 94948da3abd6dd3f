//! JSON session API.
//!
//! Every body carries `"api": 1`. Node addresses are dotted paths such as
//! `0.1.0`. Mutations of one session are serialized by its write lock;
//! reads share it.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use refinery_core::oracle::{OracleConfig, OracleRegistry};
use refinery_core::refinement::{render_law, Library, LAW_CATALOG};
use refinery_core::verifier::{DomainSpec, Verifier};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::RwLock;

use crate::session::{Session, SessionError};
use crate::view::{node_view, tree_view};
use crate::Config;

pub const API_VERSION: u64 = 1;

pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, kind, message: message.into() }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, kind) = match &e {
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            SessionError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            SessionError::Invalid(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            SessionError::Oracle(_) => (StatusCode::UNPROCESSABLE_ENTITY, "oracle"),
        };
        ApiError::new(status, kind, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"api": API_VERSION, "error": self.message, "kind": self.kind}))).into_response()
    }
}

type ApiResult = Result<(StatusCode, Json<Value>), ApiError>;

fn ok(mut body: Value) -> ApiResult {
    body["api"] = json!(API_VERSION);
    Ok((StatusCode::OK, Json(body)))
}

fn check_version(api: Option<u64>) -> Result<(), ApiError> {
    match api {
        Some(v) if v != API_VERSION => {
            Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", format!("unsupported api version {v}")))
        }
        _ => Ok(()),
    }
}

struct Inner {
    cfg: Config,
    verifier: Verifier,
    domains: DomainSpec,
    library: Library,
    sessions: RwLock<BTreeMap<String, Arc<RwLock<Session>>>>,
    next: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// `verifier` fixes the backends; sessions may bring their own domains.
    pub fn new(cfg: Config, verifier: Verifier, library: Library) -> Self {
        let domains = verifier.config.domains.clone();
        AppState(Arc::new(Inner {
            cfg,
            verifier,
            domains,
            library,
            sessions: RwLock::new(BTreeMap::new()),
            next: AtomicU64::new(1),
        }))
    }

    async fn session(&self, id: &str) -> Result<Arc<RwLock<Session>>, ApiError> {
        self.0.sessions.read().await.get(id).cloned().ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id}"))
        })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api", get(describe))
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}/tree", get(tree))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/script", get(script))
        .route("/sessions/{id}/program", get(program))
        .route("/sessions/{id}/nodes/{n}/apply", post(apply))
        .route("/sessions/{id}/nodes/{n}/verify", post(verify))
        .route("/sessions/{id}/nodes/{n}/backtrack", post(backtrack))
        .route("/sessions/{id}/nodes/{n}/suggest", post(suggest))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn describe(State(st): State<AppState>) -> ApiResult {
    let laws: Vec<Value> =
        LAW_CATALOG.iter().map(|l| json!({"keyword": l.keyword, "syntax": l.syntax, "scheme": l.scheme})).collect();
    ok(json!({
        "laws": laws,
        "oracles": OracleRegistry::default().names(),
        "backends": st.0.verifier.config.backends,
        "default_oracle": st.0.cfg.oracle.name,
    }))
}

#[derive(Deserialize)]
struct CreateBody {
    api: Option<u64>,
    spec: String,
    oracle: Option<String>,
    script: Option<String>,
    /// Domain file contents, TOML.
    domains: Option<String>,
}

async fn create(State(st): State<AppState>, body: Result<Json<CreateBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    check_version(body.api)?;
    let invalid = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", m);
    let domains = match &body.domains {
        Some(t) => DomainSpec::from_toml(t).map_err(|e| invalid(format!("domains: {e}")))?,
        None => st.0.domains.clone(),
    };
    let verifier = Verifier::new(refinery_core::verifier::VerifierConfig { domains: domains.clone(), ..st.0.verifier.config.clone() })
        .map_err(invalid)?;
    let name = body.oracle.clone().unwrap_or_else(|| st.0.cfg.oracle.name.clone());
    let ocfg = OracleConfig { script: body.script.clone(), remote: st.0.cfg.oracle.remote.clone(), domains };
    let oracle = OracleRegistry::default().build(&name, &ocfg).map_err(|e| invalid(format!("oracle: {e}")))?;
    let id = format!("s{}", st.0.next.fetch_add(1, Ordering::SeqCst));
    let session =
        Session::new(id.clone(), &body.spec, Arc::new(verifier), oracle, st.0.library.clone(), st.0.cfg.limits().k)?;
    let view = tree_view(session.tree());
    let spec_name = session.name.clone();
    st.0.sessions.write().await.insert(id.clone(), Arc::new(RwLock::new(session)));
    let body = json!({"api": API_VERSION, "id": id, "name": spec_name, "oracle": name, "tree": view});
    Ok((StatusCode::CREATED, Json(body)))
}

async fn list(State(st): State<AppState>) -> ApiResult {
    let ids: Vec<String> = st.0.sessions.read().await.keys().cloned().collect();
    ok(json!({"sessions": ids}))
}

async fn tree(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = st.session(&id).await?;
    let s = s.read().await;
    ok(json!({"id": id, "name": s.name, "tree": tree_view(s.tree())}))
}

async fn events(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = st.session(&id).await?;
    let s = s.read().await;
    let events: Vec<_> = s.events().iter().enumerate().map(|(k, e)| e.view(k + 1)).collect();
    ok(json!({"id": id, "events": events}))
}

async fn script(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = st.session(&id).await?;
    let s = s.read().await;
    ok(json!({"id": id, "script": s.tree().script()}))
}

async fn program(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = st.session(&id).await?;
    let s = s.read().await;
    ok(json!({"id": id, "program": s.program()?}))
}

#[derive(Deserialize)]
struct ApplyBody {
    api: Option<u64>,
    law: String,
}

async fn apply(
    State(st): State<AppState>,
    Path((id, n)): Path<(String, String)>,
    body: Result<Json<ApplyBody>, JsonRejection>,
) -> ApiResult {
    let s = st.session(&id).await?;
    let Json(body) = body?;
    check_version(body.api)?;
    let mut s = s.write().await;
    let children = s.apply(&n, &body.law)?;
    let node = node_view(s.tree(), s.tree().by_path(&n).map_err(SessionError::from)?);
    ok(json!({"id": id, "path": n, "children": children, "node": node}))
}

async fn verify(State(st): State<AppState>, Path((id, n)): Path<(String, String)>) -> ApiResult {
    let s = st.session(&id).await?;
    let mut guard = s.write_owned().await;
    let path = n.clone();
    let obligations = tokio::task::spawn_blocking(move || guard.verify(&path))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    ok(json!({"id": id, "path": n, "obligations": obligations}))
}

#[derive(Deserialize, Default)]
struct BacktrackBody {
    api: Option<u64>,
    reason: Option<String>,
}

async fn backtrack(
    State(st): State<AppState>,
    Path((id, n)): Path<(String, String)>,
    body: Option<Json<BacktrackBody>>,
) -> ApiResult {
    let s = st.session(&id).await?;
    let body = body.map(|Json(b)| b).unwrap_or_default();
    check_version(body.api)?;
    let mut s = s.write().await;
    s.backtrack(&n, body.reason.as_deref().unwrap_or("backtracked by the user"))?;
    let node = node_view(s.tree(), s.tree().by_path(&n).map_err(SessionError::from)?);
    ok(json!({"id": id, "path": n, "node": node}))
}

async fn suggest(State(st): State<AppState>, Path((id, n)): Path<(String, String)>) -> ApiResult {
    let s = st.session(&id).await?;
    let guard = s.read_owned().await;
    let oracle = guard.oracle_name();
    let path = n.clone();
    let p = tokio::task::spawn_blocking(move || guard.suggest(&path))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    ok(json!({"id": id, "path": n, "oracle": oracle, "law": render_law(&p.law), "rationale": p.rationale}))
}
