//! Per-ply BDD files and win/draw/loss look-ups.
//!
//! A solved board lives in `<out>/w<W>h<H>/`, one `layer_<ply>.<role>.bdd`
//! file per ply and role. Only `win` and `lost` are needed for look-ups;
//! a position in neither is a draw.

mod file;

pub use file::{load_bdd, save_bdd, write_bdd, BddMeta, LayerRole, StoredBdd, HEADER_LEN, MAGIC, VERSION};

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bdd::BddError;
use crate::encoding::{BoardGeometry, Encoding, EncodingKind};
use crate::search::Position;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}corrupt file at byte {offset}: {reason}", path_prefix(.path))]
    CorruptFile { path: Option<PathBuf>, offset: u64, reason: &'static str },
    #[error("unsupported file format version {version}")]
    Unsupported { version: u32 },
    #[error("{}{source}", path_prefix(.path))]
    Io { path: Option<PathBuf>, source: std::io::Error },
    #[error("illegal position: {0}")]
    IllegalPosition(String),
    #[error("no layer file for ply {ply} in {dir}")]
    MissingLayer { ply: u32, dir: PathBuf },
    #[error("store mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Bdd(#[from] BddError),
}

fn path_prefix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("{}: ", p.display()),
        None => String::new(),
    }
}

impl From<std::io::Error> for StoreError {
    fn from(source: std::io::Error) -> Self {
        StoreError::Io { path: None, source }
    }
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io { path: Some(path.to_path_buf()), source }
    }

    /// Attaches `path` to errors that do not name a file yet.
    pub(crate) fn at(self, path: &Path) -> Self {
        match self {
            StoreError::CorruptFile { path: None, offset, reason } => {
                StoreError::CorruptFile { path: Some(path.to_path_buf()), offset, reason }
            }
            StoreError::Io { path: None, source } => StoreError::Io { path: Some(path.to_path_buf()), source },
            e => e,
        }
    }
}

/// Game value for the player to move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wdl {
    Loss,
    Draw,
    Win,
}

impl Wdl {
    pub fn negate(self) -> Wdl {
        match self {
            Wdl::Win => Wdl::Loss,
            Wdl::Draw => Wdl::Draw,
            Wdl::Loss => Wdl::Win,
        }
    }

    /// The value class of a search score.
    pub fn of_score(score: i32) -> Wdl {
        match score.signum() {
            1 => Wdl::Win,
            0 => Wdl::Draw,
            _ => Wdl::Loss,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Wdl::Win => "win",
            Wdl::Draw => "draw",
            Wdl::Loss => "loss",
        }
    }
}

impl fmt::Display for Wdl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Directory holding the files of one board, `<out>/w<W>h<H>`.
pub fn board_dir(out: &Path, geometry: BoardGeometry) -> PathBuf {
    out.join(format!("w{}h{}", geometry.width(), geometry.height()))
}

pub fn layer_path(dir: &Path, ply: u32, role: LayerRole) -> PathBuf {
    dir.join(format!("layer_{ply}.{}.bdd", role.name()))
}

struct Layer {
    win: StoredBdd,
    lost: StoredBdd,
}

/// Read-only look-up over a solved board. Layers load on first use; a
/// look-up reads at most the two files of its ply.
pub struct WdlStore {
    dir: PathBuf,
    encoding: Encoding,
    layers: Vec<OnceLock<Arc<Layer>>>,
    loaded: AtomicUsize,
}

impl fmt::Debug for WdlStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WdlStore")
            .field("dir", &self.dir)
            .field("geometry", &self.geometry())
            .field("kind", &self.encoding.kind())
            .field("loaded", &self.plies_loaded())
            .finish()
    }
}

impl WdlStore {
    /// Opens a store. `path` may be the board directory itself or an output
    /// directory containing exactly one `w<W>h<H>` board directory.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let dir = Self::resolve(path, None)?;
        Self::open_dir(dir)
    }

    /// Opens the store of `geometry` below the output directory `out`
    /// (or `out` itself if it is that board's directory).
    pub fn open_for(out: &Path, geometry: BoardGeometry) -> Result<Self, StoreError> {
        let dir = Self::resolve(out, Some(geometry))?;
        let store = Self::open_dir(dir)?;
        if store.geometry() != geometry {
            return Err(StoreError::Mismatch(format!(
                "store holds {} but {} was requested",
                store.geometry(),
                geometry
            )));
        }
        Ok(store)
    }

    fn resolve(path: &Path, geometry: Option<BoardGeometry>) -> Result<PathBuf, StoreError> {
        let probe = |d: &Path| layer_path(d, 0, LayerRole::Win).is_file();
        if probe(path) {
            return Ok(path.to_path_buf());
        }
        if let Some(g) = geometry {
            let d = board_dir(path, g);
            return if probe(&d) { Ok(d) } else { Err(StoreError::MissingLayer { ply: 0, dir: d }) };
        }
        let entries = std::fs::read_dir(path).map_err(|e| StoreError::io(path, e))?;
        let mut found: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| probe(p)).collect();
        found.sort();
        match found.len() {
            1 => Ok(found.pop().unwrap()),
            0 => Err(StoreError::MissingLayer { ply: 0, dir: path.to_path_buf() }),
            _ => Err(StoreError::Mismatch(format!("{} holds several boards; pass the board size", path.display()))),
        }
    }

    fn open_dir(dir: PathBuf) -> Result<Self, StoreError> {
        let first = StoredBdd::load(&layer_path(&dir, 0, LayerRole::Win))?;
        let encoding = Encoding::new(first.meta.geometry, first.meta.kind);
        if first.meta.var_count != encoding.num_vars() {
            return Err(StoreError::Mismatch("variable count does not fit the encoding".into()));
        }
        let n = first.meta.geometry.max_ply() as usize + 1;
        Ok(WdlStore { dir, encoding, layers: (0..n).map(|_| OnceLock::new()).collect(), loaded: AtomicUsize::new(0) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn geometry(&self) -> BoardGeometry {
        self.encoding.geometry()
    }

    pub fn kind(&self) -> EncodingKind {
        self.encoding.kind()
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    /// Number of plies whose files are in memory.
    pub fn plies_loaded(&self) -> usize {
        self.loaded.load(Ordering::Relaxed)
    }

    fn layer(&self, ply: u32) -> Result<Arc<Layer>, StoreError> {
        let slot = &self.layers[ply as usize];
        if let Some(l) = slot.get() {
            return Ok(l.clone());
        }
        let read = |role| {
            let path = layer_path(&self.dir, ply, role);
            if !path.is_file() {
                return Err(StoreError::MissingLayer { ply, dir: self.dir.clone() });
            }
            let b = StoredBdd::load(&path)?;
            let m = &b.meta;
            if m.geometry != self.geometry() || m.kind != self.kind() || m.ply != ply || m.role != role {
                return Err(StoreError::Mismatch(format!("{} has an unexpected header", path.display())));
            }
            Ok(b)
        };
        let layer = Arc::new(Layer { win: read(LayerRole::Win)?, lost: read(LayerRole::Lost)? });
        let mut fresh = false;
        let l = slot.get_or_init(|| {
            fresh = true;
            layer
        });
        if fresh {
            self.loaded.fetch_add(1, Ordering::Relaxed);
        }
        Ok(l.clone())
    }

    /// Game value of `pos` for the player to move. Finished games need no
    /// file: a completed line is a loss for the mover, a full board a draw.
    pub fn lookup(&self, pos: &Position) -> Result<Wdl, StoreError> {
        if pos.geometry() != self.geometry() {
            return Err(StoreError::IllegalPosition(format!(
                "position is {} but the store holds {}",
                pos.geometry(),
                self.geometry()
            )));
        }
        if pos.last_mover_won() {
            return Ok(Wdl::Loss);
        }
        if pos.is_full() {
            return Ok(Wdl::Draw);
        }
        let a = self.encoding.position_to_assignment(pos).map_err(|e| StoreError::IllegalPosition(e.to_string()))?;
        let layer = self.layer(pos.ply())?;
        Ok(if layer.win.eval(&a) {
            Wdl::Win
        } else if layer.lost.eval(&a) {
            Wdl::Loss
        } else {
            Wdl::Draw
        })
    }
}
