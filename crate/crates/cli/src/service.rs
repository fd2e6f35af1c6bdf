//! HTTP evaluation service: `GET /health` and `GET /eval`.
//!
//! The service is stateless. Every request reads the shared store and, when
//! asked to search, runs its own searcher with a private table under a time
//! cap. A search that runs out of time still answers with store values and
//! `partial: true`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::{Query, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use c4_core::encoding::Player;
use c4_core::search::{order_moves, Position, Score, SearchConfig, SearchError, Searcher};
use c4_core::store::{StoreError, Wdl, WdlStore};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

/// Table size for per-request searches.
const REQUEST_TT_LOG2: u32 = 20;

#[derive(Clone)]
pub struct AppState {
    pub store: Option<Arc<WdlStore>>,
    pub search_budget: Duration,
}

impl AppState {
    pub fn new(store: Option<WdlStore>, search_budget: Duration) -> Self {
        AppState { store: store.map(Arc::new), search_budget }
    }
}

#[derive(Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub store_loaded: bool,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub encoding: Option<String>,
    pub plies_loaded: usize,
    pub max_ply: Option<u32>,
}

#[derive(Debug, Deserialize)]
pub struct EvalParams {
    #[serde(default)]
    pub moves: String,
    #[serde(default)]
    pub search: bool,
}

/// Value of one legal move, from the mover's point of view.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnEval {
    /// 1-based column.
    pub column: u32,
    pub wdl: Wdl,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<Score>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalResponse {
    pub moves: String,
    pub ply: u32,
    pub side_to_move: Player,
    /// Value for the side to move.
    pub wdl: Wdl,
    pub terminal: bool,
    /// One entry per legal column, in column order.
    pub columns: Vec<ColumnEval>,
    /// 1-based best column, absent once the game is over.
    pub best: Option<u32>,
    /// Exact score of the position when a search finished.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<Score>,
    pub searched: bool,
    /// The search ran out of time; values come from the store only.
    pub partial: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

fn store_error(e: StoreError) -> Response {
    match e {
        StoreError::MissingLayer { .. } => error(StatusCode::NOT_FOUND, e.to_string()),
        StoreError::IllegalPosition(_) => error(StatusCode::BAD_REQUEST, e.to_string()),
        other => error(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    }
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods([Method::GET]);
    Router::new().route("/health", get(health)).route("/eval", get(eval)).layer(cors).with_state(state)
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let s = state.store.as_deref();
    Json(Health {
        status: "ok".into(),
        store_loaded: s.is_some(),
        width: s.map(|s| s.geometry().width()),
        height: s.map(|s| s.geometry().height()),
        encoding: s.map(|s| s.kind().name().to_string()),
        plies_loaded: s.map_or(0, |s| s.plies_loaded()),
        max_ply: s.map(|s| s.geometry().max_ply()),
    })
}

async fn eval(State(state): State<AppState>, Query(params): Query<EvalParams>) -> Response {
    let Some(store) = state.store.clone() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no store loaded");
    };
    let pos = match Position::from_moves(store.geometry(), &params.moves) {
        Ok(p) => p,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let deadline = Instant::now() + state.search_budget;
    let moves = params.moves.clone();
    let task = tokio::task::spawn_blocking(move || evaluate(&store, &pos, moves, params.search.then_some(deadline)));
    match task.await {
        Ok(Ok(r)) => Json(r).into_response(),
        Ok(Err(e)) => store_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

/// Store values for `pos` and each legal move, plus exact scores when a
/// search deadline is given and met.
pub fn evaluate(
    store: &WdlStore,
    pos: &Position,
    moves: String,
    search_deadline: Option<Instant>,
) -> Result<EvalResponse, StoreError> {
    let wdl = store.lookup(pos)?;
    let terminal = pos.is_terminal();
    let legal = if terminal { Vec::new() } else { pos.legal_moves() };
    let mut columns = Vec::with_capacity(legal.len());
    for &c in &legal {
        let child = store.lookup(&pos.after(c))?.negate();
        columns.push(ColumnEval { column: c + 1, wdl: child, score: None });
    }

    let mut partial = false;
    let mut score = None;
    if let (Some(deadline), false) = (search_deadline, terminal) {
        let cfg = SearchConfig { tt_log2: REQUEST_TT_LOG2, deadline: Some(deadline), ..SearchConfig::default() };
        let mut searcher = Searcher::new(store.geometry(), cfg, Some(store));
        // The searcher only polls the clock every few thousand nodes.
        let result = if Instant::now() >= deadline { Err(SearchError::Timeout) } else { searcher.evaluate_moves(pos) };
        match result {
            Ok(scores) => {
                for (col, (_, s)) in columns.iter_mut().zip(scores) {
                    col.score = Some(s);
                }
                score = columns.iter().filter_map(|c| c.score).max();
            }
            Err(SearchError::Timeout) => partial = true,
            Err(SearchError::Terminal) => {}
        }
    }

    // Highest score (or value), ties to the move searched first.
    let rank = order_moves(pos, &legal);
    let best = columns
        .iter()
        .max_by_key(|c| {
            let r = rank.iter().position(|&m| m + 1 == c.column).unwrap_or(usize::MAX);
            (c.score.unwrap_or(0), c.wdl, std::cmp::Reverse(r))
        })
        .map(|c| c.column);

    Ok(EvalResponse {
        moves,
        ply: pos.ply(),
        side_to_move: pos.side_to_move(),
        wdl,
        terminal,
        columns,
        best,
        score,
        searched: search_deadline.is_some() && !partial && !terminal,
        partial,
    })
}
