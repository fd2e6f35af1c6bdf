//! Subcommand implementations. Each returns the text to print, or a
//! [`CliError`] that carries its exit code.

use std::path::{Path, PathBuf};
use std::time::Duration;

use c4_core::bdd::BddManager;
use c4_core::encoding::{BoardCopy, Encoding, Player};
use c4_core::search::{
    build_opening_book, final_ply, write_book, BookError, Position, Score, SearchConfig, SearchError, Searcher,
};
use c4_core::solver::{count_positions, solve, SolveBudget, SolverError};
use c4_core::store::{layer_path, load_bdd, LayerRole, StoreError, Wdl, WdlStore};
use log::info;
use serde::Serialize;
use thiserror::Error;

use crate::args::{BookArgs, Command, OptionalBoardArgs, QueryArgs, ServeArgs, SymbolicArgs};
use crate::service::{router, AppState};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input from the user: arguments, moves or a missing store.
    #[error("{0}")]
    Usage(String),
    /// The command was well formed but could not finish.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(m) => CliError::Usage(m),
            other => CliError::Failure(other.to_string()),
        }
    }
}

pub fn run(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Count(a) => cmd_count(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Query(a) => cmd_query(a),
        Command::Book(a) => cmd_book(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn cmd_count(a: &SymbolicArgs) -> Result<String, CliError> {
    let g = a.board.geometry();
    if a.ply.is_some_and(|p| p > g.max_ply()) {
        return Err(CliError::Usage(format!("--ply is beyond the last ply {} of {g}", g.max_ply())));
    }
    let budget = SolveBudget { max_ply: a.ply, ..SolveBudget::new(a.nodes) };
    let report = count_positions(g, a.encoding.into(), &budget)?;
    Ok(if a.json { to_json(&report) } else { report.render_table() })
}

pub fn cmd_solve(a: &SymbolicArgs) -> Result<String, CliError> {
    let g = a.board.geometry();
    if a.ply.is_some() {
        return Err(CliError::Usage("solve always runs to the last ply; --ply applies to count".into()));
    }
    let budget = SolveBudget { out_dir: Some(a.out.clone()), ..SolveBudget::new(a.nodes) };
    let report = solve(g, a.encoding.into(), &budget)?;
    info!("store written below {}", a.out.display());
    Ok(if a.json { to_json(&report) } else { report.render_table() })
}

/// Opens the store at `db`, for the given board if one was named.
pub fn open_store(db: &Path, board: &OptionalBoardArgs) -> Result<WdlStore, CliError> {
    let opened = match board.geometry() {
        Some(g) => WdlStore::open_for(db, g),
        None => WdlStore::open(db),
    };
    opened.map_err(|e| CliError::Usage(format!("cannot open store {}: {e}", db.display())))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QueryReport {
    pub moves: String,
    pub ply: u32,
    pub side_to_move: Player,
    pub wdl: Wdl,
    /// 1-based best column; absent once the game is over.
    pub best: Option<u32>,
    pub score: Score,
    /// Ply at which the game ends under best play, or none for a draw.
    pub final_ply: Option<u32>,
    /// 1-based columns of the principal variation.
    pub pv: Vec<u32>,
}

impl QueryReport {
    pub fn render(&self) -> String {
        let mut head = self.wdl.as_str().to_uppercase();
        if let Some(b) = self.best {
            head += &format!(", best {b}");
        }
        match self.final_ply {
            Some(f) if self.wdl == Wdl::Win => head += &format!(", mate in {} plies", f - self.ply),
            Some(f) if self.wdl == Wdl::Loss => head += &format!(", lost in {} plies", f - self.ply),
            _ => {}
        }
        let pv: Vec<String> = self.pv.iter().map(u32::to_string).collect();
        format!("{head}\nscore {}\npv {}\n", self.score, pv.join(""))
    }
}

/// Store value plus a searched best move, score and principal variation.
pub fn query(store: &WdlStore, moves: &str) -> Result<QueryReport, CliError> {
    let g = store.geometry();
    let pos = Position::from_moves(g, moves).map_err(|e| CliError::Usage(e.to_string()))?;
    let wdl = store.lookup(&pos).map_err(store_failure)?;
    let mut searcher = Searcher::new(g, SearchConfig::default(), Some(store));
    let (best, score, pv) = match searcher.best_move(&pos) {
        Ok(b) => (Some(b.column + 1), b.score, b.pv.iter().map(|c| c + 1).collect()),
        Err(SearchError::Terminal) => (None, searcher.solve(&pos).map_err(search_failure)?, Vec::new()),
        Err(e) => return Err(search_failure(e)),
    };
    if Wdl::of_score(score) != wdl {
        return Err(CliError::Failure(format!("store says {wdl} but search scores {score}")));
    }
    Ok(QueryReport {
        moves: moves.to_string(),
        ply: pos.ply(),
        side_to_move: pos.side_to_move(),
        wdl,
        best,
        score,
        final_ply: final_ply(g, score),
        pv,
    })
}

fn store_failure(e: StoreError) -> CliError {
    match e {
        StoreError::IllegalPosition(m) => CliError::Usage(m),
        other => CliError::Failure(other.to_string()),
    }
}

fn search_failure(e: SearchError) -> CliError {
    CliError::Failure(e.to_string())
}

pub fn cmd_query(a: &QueryArgs) -> Result<String, CliError> {
    let store = open_store(&a.db, &a.board)?;
    let report = query(&store, &a.moves)?;
    Ok(if a.json { to_json(&report) } else { report.render() })
}

#[derive(Clone, Debug, Serialize)]
pub struct BookSummary {
    pub width: u32,
    pub height: u32,
    pub ply: u32,
    pub entries: usize,
    pub path: PathBuf,
}

/// Number of positions in the store's `states` layer at `ply`.
fn layer_count(store: &WdlStore, ply: u32) -> Result<num_bigint::BigUint, CliError> {
    let path = layer_path(store.dir(), ply, LayerRole::States);
    let enc = Encoding::new(store.geometry(), store.kind());
    let mut m = BddManager::new(1 << 22, enc.num_vars()).map_err(|e| CliError::Failure(e.to_string()))?;
    let (_, root) = load_bdd(&mut m, &path).map_err(|e| CliError::Failure(e.to_string()))?;
    m.satcount(root, &enc.copy_vars(BoardCopy::of_ply(ply))).map_err(|e| CliError::Failure(e.to_string()))
}

pub fn cmd_book(a: &BookArgs) -> Result<String, CliError> {
    let store = open_store(&a.db, &a.board)?;
    let g = store.geometry();
    if a.ply > g.max_ply() {
        return Err(CliError::Usage(format!("--ply is beyond the last ply {} of {g}", g.max_ply())));
    }
    let expected = layer_count(&store, a.ply)?;
    let cfg = SearchConfig::default();
    let book = build_opening_book(g, a.ply, Some(&store), a.workers, &cfg, Some(&expected)).map_err(|e| match e {
        BookError::Unsupported(_) | BookError::BadPly { .. } => CliError::Usage(e.to_string()),
        other => CliError::Failure(other.to_string()),
    })?;
    let path = a.out.clone().unwrap_or_else(|| store.dir().join(format!("book_{}.bin", a.ply)));
    let file = std::fs::File::create(&path).map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    write_book(std::io::BufWriter::new(file), g, a.ply, &book)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    let summary = BookSummary { width: g.width(), height: g.height(), ply: a.ply, entries: book.len(), path };
    Ok(if a.json {
        to_json(&summary)
    } else {
        format!("{g} ply {}: {} entries written to {}\n", a.ply, summary.entries, summary.path.display())
    })
}

pub fn cmd_serve(a: &ServeArgs) -> Result<String, CliError> {
    let store = open_store(&a.db, &a.board)?;
    let state = AppState::new(Some(store), Duration::from_millis(a.search_ms));
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Failure(e.to_string()))?;
    rt.block_on(async {
        let addr = std::net::SocketAddr::from(([0, 0, 0, 0], a.port));
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Failure(format!("cannot bind port {}: {e}", a.port)))?;
        info!("listening on {addr}");
        axum::serve(listener, router(state)).await.map_err(|e| CliError::Failure(e.to_string()))
    })?;
    Ok(String::new())
}
