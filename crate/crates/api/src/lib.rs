//! Stateless HTTP front end to the solver.
//!
//! Every endpoint lives under `/v1` and answers JSON. Failures carry
//! `{error, reason}` with a matching status code. Clients hold the game
//! state. The only thing kept between requests is the table cache.

pub mod cache;
pub mod wire;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::{Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use krk_core::policies::{self, PolicyError, ScriptState};
use krk_core::rules::{self, MoveOutcome, Terminal};
use krk_core::tablebase::{TablebaseError, DEFAULT_CAP};
use krk_core::{Dims, Position, Side, Square, Tablebase};
use serde::Serialize;

pub use cache::TableCache;
use wire::{
    Annotation, DecodeError, EnginePolicy, Health, ProbeResponse, Rejection, ReplyRequest,
    ReplyResponse, WireMove, WirePosition,
};

pub const DEFAULT_PORT: u16 = 8423;

#[derive(Debug, Clone)]
pub struct ApiConfig {
    /// Largest board area the server will generate a table for.
    pub cap: usize,
    /// Bytes of tables kept in memory before the least recently used go.
    pub budget_bytes: u64,
    /// Directory searched for prebuilt `krk_{m}x{n}.tb` files.
    pub tb_dir: Option<PathBuf>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            cap: DEFAULT_CAP,
            budget_bytes: 1 << 30,
            tb_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AppState {
    tables: Arc<TableCache>,
}

impl AppState {
    pub fn new(config: ApiConfig) -> Self {
        Self {
            tables: Arc::new(TableCache::new(config.cap, config.budget_bytes, config.tb_dir)),
        }
    }

    pub fn tables(&self) -> &TableCache {
        &self.tables
    }

    async fn table(&self, dims: Dims) -> Result<Arc<Tablebase>, ApiError> {
        let tables = self.tables.clone();
        tokio::task::spawn_blocking(move || tables.get(dims))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))?
            .map_err(ApiError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: &'static str,
    pub reason: String,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, reason: impl Into<String>) -> Self {
        Self {
            status,
            error,
            reason: reason.into(),
        }
    }

    fn malformed(reason: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", reason)
    }

    fn invalid_position(reason: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_position", reason)
    }

    fn internal(reason: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", reason)
    }
}

impl From<DecodeError> for ApiError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Malformed(r) => ApiError::malformed(r),
            DecodeError::Invalid(r) => ApiError::invalid_position(r),
        }
    }
}

impl From<TablebaseError> for ApiError {
    fn from(e: TablebaseError) -> Self {
        match e {
            TablebaseError::Resource { .. } => {
                ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "over_cap", e.to_string())
            }
            TablebaseError::Rules(r) => ApiError::invalid_position(r.to_string()),
            e => ApiError::internal(e.to_string()),
        }
    }
}

impl From<PolicyError> for ApiError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::OffScript { .. } | PolicyError::OffScriptTrace { .. } => {
                ApiError::new(StatusCode::CONFLICT, "off_script", e.to_string())
            }
            PolicyError::OutOfScope(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "out_of_scope", e.to_string())
            }
            PolicyError::Tablebase(t) => t.into(),
            e => ApiError::internal(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/probe", get(probe))
        .route("/v1/reply", post(reply))
        .route("/v1/health", get(health))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ApiConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config))).await
}

async fn not_found(method: Method, uri: Uri) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no route for {method} {uri}"))
}

async fn method_not_allowed(method: Method, uri: Uri) -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "method_not_allowed",
        format!("{method} is not supported on {}", uri.path()),
    )
}

fn probe_position(q: &HashMap<String, String>) -> Result<WirePosition, ApiError> {
    let field = |k: &str| {
        q.get(k)
            .cloned()
            .ok_or_else(|| ApiError::malformed(format!("missing query parameter {k}")))
    };
    let size = |k: &str| {
        field(k)?
            .trim()
            .parse::<u16>()
            .map_err(|e| ApiError::malformed(format!("bad {k}: {e}")))
    };
    Ok(WirePosition {
        m: size("m")?,
        n: size("n")?,
        wk: field("wk")?,
        wr: field("wr")?,
        bk: field("bk")?,
        stm: field("stm")?,
    })
}

async fn probe(
    State(state): State<AppState>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<ProbeResponse>, ApiError> {
    let (dims, pos) = probe_position(&q)?.decode()?;
    let tb = state.table(dims).await?;
    let v = tb.probe(&pos)?;
    Ok(Json(ProbeResponse::new(dims, &pos, v)))
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        cached_tables: state.tables.cached(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

fn parse_human_move(s: &str) -> Result<(Square, Square), ApiError> {
    rules::parse_from_to(s).map_err(ApiError::malformed)
}

fn engine_move(
    tb: &Tablebase,
    dims: Dims,
    pos: &Position,
    policy: EnginePolicy,
) -> Result<krk_core::Move, ApiError> {
    let mv = match (policy, pos.stm) {
        (EnginePolicy::Optimal, _) => policies::optimal_move(tb, pos)?,
        (EnginePolicy::Scripted, Side::White) => {
            policies::scripted_white(dims, pos, ScriptState::infer(dims, pos))?.0
        }
        // no script exists for Black; the survival heuristic stands in
        (EnginePolicy::Scripted, Side::Black) => policies::black_heuristic(dims, pos)?,
    };
    Ok(mv)
}

fn annotations(tb: &Tablebase, pos: &Position) -> Vec<Annotation> {
    match tb.best_moves(pos) {
        Ok(moves) => moves
            .iter()
            .map(|(mv, child)| Annotation::new(pos, mv, *child))
            .collect(),
        Err(_) => Vec::new(),
    }
}

fn finished(dims: Dims, pos: &Position) -> Result<Terminal, ApiError> {
    rules::classify(dims, pos).map_err(|e| ApiError::invalid_position(e.to_string()))
}

async fn reply(
    State(state): State<AppState>,
    body: Result<Json<ReplyRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::malformed(e.body_text()))?;
    let (dims, start) = req.position.decode()?;
    let human = req.human_move.as_deref().map(parse_human_move).transpose()?;
    let tb = state.table(dims).await?;

    let reject = |reason: String| {
        let body = Rejection {
            accepted: false,
            error: "illegal_move".into(),
            reason,
            position: req.position.clone(),
        };
        (StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response()
    };

    let mut out = ReplyResponse {
        accepted: true,
        human_move: None,
        engine_move: None,
        new_position: None,
        terminal: wire::terminal_code(Terminal::Ongoing).into(),
        annotations: Vec::new(),
    };

    let mut pos = start;
    if let Some((from, to)) = human {
        let term = finished(dims, &pos)?;
        if term != Terminal::Ongoing {
            return Ok(reject(format!("game is over ({})", wire::terminal_code(term))));
        }
        if let Some(reason) = wire::illegal_reason(dims, &pos, from, to) {
            return Ok(reject(reason));
        }
        let mv = rules::find_move(dims, &pos, from, to).map_err(|e| ApiError::internal(e.to_string()))?;
        out.human_move = Some(WireMove::from(&mv));
        match rules::apply_move(dims, &pos, &mv).map_err(|e| ApiError::internal(e.to_string()))? {
            MoveOutcome::RookCaptured => {
                out.terminal = wire::terminal_code(Terminal::RookCaptured).into();
                return Ok(Json(out).into_response());
            }
            MoveOutcome::Continue(next) => pos = next,
        }
    }

    if finished(dims, &pos)? == Terminal::Ongoing {
        let mv = engine_move(&tb, dims, &pos, req.engine_policy)?;
        out.engine_move = Some(WireMove::from(&mv));
        match rules::apply_move(dims, &pos, &mv).map_err(|e| ApiError::internal(e.to_string()))? {
            MoveOutcome::RookCaptured => {
                out.terminal = wire::terminal_code(Terminal::RookCaptured).into();
                return Ok(Json(out).into_response());
            }
            MoveOutcome::Continue(next) => pos = next,
        }
    }

    out.terminal = wire::terminal_code(finished(dims, &pos)?).into();
    out.new_position = Some(WirePosition::from_position(dims, &pos));
    out.annotations = annotations(&tb, &pos);
    Ok(Json(out).into_response())
}
