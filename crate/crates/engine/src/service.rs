//! HTTP API over a single shared session.

use std::future::Future;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use dml_core::io::{export_cypher, serialize_graph};
use dml_core::query::{DiagnosticRequest, Session, Task};
use dml_core::{ModelGraph, PropagationConfig};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::config::ServiceConfig;
use crate::{load_text, parse_evidence, render, EngineError};

pub struct AppState {
    session: RwLock<Option<Session>>,
    propagation: PropagationConfig,
    pathset_limit: usize,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Self {
        AppState {
            session: RwLock::new(None),
            propagation: config.propagation,
            pathset_limit: config.pathset_limit,
        }
    }

    /// Installs `model`, keeping the revision sequence of an existing session.
    pub fn load(&self, model: ModelGraph) -> u64 {
        let mut slot = self.session.write().expect("session lock");
        match slot.as_mut() {
            Some(session) => session.reload(model),
            None => {
                *slot = Some(Session::with_config(
                    model,
                    self.propagation,
                    self.pathset_limit,
                ));
                0
            }
        }
    }

    fn read<T>(
        &self,
        f: impl FnOnce(&Session) -> Result<T, EngineError>,
    ) -> Result<T, EngineError> {
        let slot = self.session.read().expect("session lock");
        f(slot.as_ref().ok_or(EngineError::NoModel)?)
    }

    fn write<T>(
        &self,
        f: impl FnOnce(&mut Session) -> Result<T, EngineError>,
    ) -> Result<T, EngineError> {
        let mut slot = self.session.write().expect("session lock");
        f(slot.as_mut().ok_or(EngineError::NoModel)?)
    }
}

fn status_of(error: &EngineError) -> StatusCode {
    match error {
        EngineError::NoModel => StatusCode::CONFLICT,
        EngineError::Body(_) => StatusCode::BAD_REQUEST,
        EngineError::Io { .. } | EngineError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        EngineError::Model(_) => StatusCode::UNPROCESSABLE_ENTITY,
        EngineError::Query(e) => match e.code() {
            "NOT_FOUND" => StatusCode::NOT_FOUND,
            "AMBIGUOUS_NAME" | "MISSING_TARGET" | "WRONG_TASK" => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        },
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

impl IntoResponse for EngineError {
    fn into_response(self) -> Response {
        json_response(status_of(&self), render(&self.body()))
    }
}

type Reply = Result<Response, EngineError>;

fn ok(body: String) -> Reply {
    Ok(json_response(StatusCode::OK, body))
}

/// Empty bodies read as `{}`.
fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, EngineError> {
    let bytes: &[u8] = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        body
    };
    serde_json::from_slice(bytes).map_err(|e| EngineError::Body(e.to_string()))
}

async fn post_model(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let text = String::from_utf8_lossy(&body);
    match load_text(&text) {
        Ok(model) => {
            let counts = model.count_elements();
            state.load(model);
            json_response(StatusCode::CREATED, render(&counts))
        }
        Err(e) => match e.report() {
            Some(report) => json_response(StatusCode::UNPROCESSABLE_ENTITY, render(&report)),
            None => e.into_response(),
        },
    }
}

async fn get_model(State(state): State<Arc<AppState>>) -> Reply {
    state.read(|s| {
        let mut text = serialize_graph(s.model())?;
        text.push('\n');
        ok(text)
    })
}

async fn get_counts(State(state): State<Arc<AppState>>) -> Reply {
    state.read(|s| ok(render(&s.model().count_elements())))
}

async fn get_cypher(State(state): State<Arc<AppState>>) -> Reply {
    state.read(|s| {
        Ok((
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            export_cypher(s.model()),
        )
            .into_response())
    })
}

#[derive(Deserialize)]
struct SubgraphQuery {
    target: String,
    #[serde(default = "one")]
    depth: usize,
}

fn one() -> usize {
    1
}

async fn get_subgraph(State(state): State<Arc<AppState>>, Query(q): Query<SubgraphQuery>) -> Reply {
    let mut request = DiagnosticRequest::new(Task::Explanatory).target(q.target);
    request.depth = Some(q.depth);
    state.read(|s| ok(render(&s.explanatory_response(&request)?)))
}

async fn put_evidence(State(state): State<Arc<AppState>>, body: Bytes) -> Reply {
    let text = String::from_utf8_lossy(&body);
    let doc = parse_evidence(if text.trim().is_empty() { "{}" } else { &text })?;
    state.write(|s| ok(render(&json!({"revision": s.set_evidence(&doc)?}))))
}

async fn delete_evidence(State(state): State<Arc<AppState>>) -> Reply {
    state.write(|s| ok(render(&json!({"revision": s.clear_evidence()}))))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PropagateBody {
    threshold: Option<f64>,
}

async fn post_propagate(State(state): State<Arc<AppState>>, body: Bytes) -> Reply {
    let req: PropagateBody = parse_body(&body)?;
    state.read(|s| ok(crate::upward_payload(s, req.threshold)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathSetsBody {
    target: String,
    #[serde(default)]
    raw: bool,
    limit: Option<usize>,
}

async fn post_pathsets(State(state): State<Arc<AppState>>, body: Bytes) -> Reply {
    let req: PathSetsBody = parse_body(&body)?;
    state.read(|s| ok(crate::downward_payload(s, &req.target, req.raw, req.limit)?))
}

async fn healthz() -> Response {
    json_response(StatusCode::OK, render(&json!({"status": "ok"})))
}

pub fn router(state: Arc<AppState>, static_dir: Option<&std::path::Path>) -> Router {
    let api = Router::new()
        .route("/model", post(post_model).get(get_model))
        .route("/model/counts", get(get_counts))
        .route("/model/cypher", get(get_cypher))
        .route("/model/subgraph", get(get_subgraph))
        .route(
            "/evidence",
            post(put_evidence).put(put_evidence).delete(delete_evidence),
        )
        .route("/propagate", post(post_propagate))
        .route("/pathsets", post(post_pathsets))
        .route("/healthz", get(healthz))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Builds the shared state, preloading the configured model. A preload that
/// fails to validate is an error.
pub fn prepare(config: &ServiceConfig) -> Result<Arc<AppState>, EngineError> {
    config.check()?;
    let state = Arc::new(AppState::new(config));
    if let Some(path) = &config.model {
        state.load(load_text(&crate::read_file(path)?)?);
    }
    Ok(state)
}

/// Serves on `listener` until `shutdown` resolves; in-flight requests finish.
pub async fn serve_on(
    listener: TcpListener,
    config: &ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), EngineError> {
    let state = prepare(config)?;
    let app = router(state, config.static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| EngineError::Io {
            path: "listener".into(),
            message: e.to_string(),
        })
}

pub async fn serve(config: &ServiceConfig) -> Result<(), EngineError> {
    let address = config.address()?;
    let listener = TcpListener::bind(address)
        .await
        .map_err(|e| EngineError::Io {
            path: address.to_string(),
            message: e.to_string(),
        })?;
    eprintln!("listening on http://{address}");
    serve_on(listener, config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
