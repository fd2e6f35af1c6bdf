//! Opening book: exact scores of every position at one ply.
//!
//! File layout, little-endian:
//!
//! ```text
//! offset  size  field
//!      0     8  magic "C4BOOK1\0"
//!      8     1  width
//!      9     1  height
//!     10     2  ply
//!     12     4  record count
//!     16  10*n  records (key u64, score i8, move u8), sorted by key
//! ```
//!
//! The key is the position's bitboard key. A move of 255 marks a position
//! that is already over.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::encoding::BoardGeometry;
use crate::store::WdlStore;

use super::{Position, Score, SearchConfig, Searcher};

pub const BOOK_MAGIC: [u8; 8] = *b"C4BOOK1\0";
const NO_MOVE: u8 = u8::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BookEntry {
    pub key: u64,
    pub score: i8,
    /// Best column (0-based), `None` for finished games.
    pub best: Option<u8>,
}

#[derive(Debug, Error)]
pub enum BookError {
    #[error("board {0} is too large for bitboard search")]
    Unsupported(BoardGeometry),
    #[error("ply {ply} is beyond the {geometry} board")]
    BadPly { geometry: BoardGeometry, ply: u32 },
    #[error("found {found} positions at ply {ply} but the layer holds {expected}")]
    CountMismatch { ply: u32, found: usize, expected: String },
    #[error("search failed: {0}")]
    Search(#[from] super::SearchError),
    #[error("malformed book file: {0}")]
    Format(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Every distinct position reachable at `ply`, in key order.
fn positions_at(geometry: BoardGeometry, ply: u32) -> Vec<Position> {
    let mut layer = vec![Position::new(geometry).expect("supported geometry")];
    for _ in 0..ply {
        let mut seen = HashSet::new();
        let mut next = Vec::new();
        for p in &layer {
            if p.is_terminal() {
                continue;
            }
            for c in p.legal_moves() {
                let q = p.after(c);
                if seen.insert(q.key()) {
                    next.push(q);
                }
            }
        }
        layer = next;
    }
    layer.sort_by_key(|p| p.key());
    layer
}

/// Scores all positions at `ply` with `workers` threads, each with its own
/// table. If `expected` is given (the layer's position count) it must match
/// the number of positions found.
pub fn build_opening_book(
    geometry: BoardGeometry,
    ply: u32,
    store: Option<&WdlStore>,
    workers: usize,
    config: &SearchConfig,
    expected: Option<&num_bigint::BigUint>,
) -> Result<Vec<BookEntry>, BookError> {
    if !Position::supports(geometry) {
        return Err(BookError::Unsupported(geometry));
    }
    if ply > geometry.max_ply() {
        return Err(BookError::BadPly { geometry, ply });
    }
    let positions = positions_at(geometry, ply);
    if let Some(e) = expected {
        if num_bigint::BigUint::from(positions.len()) != *e {
            return Err(BookError::CountMismatch { ply, found: positions.len(), expected: e.to_string() });
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<BookEntry>>> = Mutex::new(vec![None; positions.len()]);
    let failure: Mutex<Option<BookError>> = Mutex::new(None);
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| {
                let mut searcher = Searcher::new(geometry, config.clone(), store);
                loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= positions.len() || failure.lock().unwrap().is_some() {
                        break;
                    }
                    let pos = &positions[i];
                    let entry = if pos.is_terminal() {
                        searcher.solve(pos).map(|s| BookEntry { key: pos.key(), score: s as i8, best: None })
                    } else {
                        searcher.best_child_entry(pos)
                    };
                    match entry {
                        Ok(e) => results.lock().unwrap()[i] = Some(e),
                        Err(e) => {
                            *failure.lock().unwrap() = Some(e.into());
                            break;
                        }
                    }
                }
            });
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(results.into_inner().unwrap().into_iter().map(|e| e.expect("every slot filled")).collect())
}

impl Searcher<'_> {
    fn best_child_entry(&mut self, pos: &Position) -> Result<BookEntry, super::SearchError> {
        let (c, s): (u32, Score) = self.best_child(pos)?;
        Ok(BookEntry { key: pos.key(), score: s as i8, best: Some(c as u8) })
    }
}

pub fn write_book<W: Write>(
    mut w: W,
    geometry: BoardGeometry,
    ply: u32,
    entries: &[BookEntry],
) -> Result<(), BookError> {
    w.write_all(&BOOK_MAGIC)?;
    w.write_all(&[geometry.width() as u8, geometry.height() as u8])?;
    w.write_all(&(ply as u16).to_le_bytes())?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    let mut sorted = entries.to_vec();
    sorted.sort();
    for e in sorted {
        w.write_all(&e.key.to_le_bytes())?;
        w.write_all(&[e.score as u8, e.best.unwrap_or(NO_MOVE)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_book<R: Read>(mut r: R) -> Result<(BoardGeometry, u32, Vec<BookEntry>), BookError> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if head[..8] != BOOK_MAGIC {
        return Err(BookError::Format("bad magic"));
    }
    let geometry = BoardGeometry::new(head[8] as u32, head[9] as u32).map_err(|_| BookError::Format("bad geometry"))?;
    let ply = u16::from_le_bytes([head[10], head[11]]) as u32;
    let n = u32::from_le_bytes(head[12..16].try_into().unwrap()) as usize;
    let mut entries = Vec::with_capacity(n.min(1 << 24));
    let mut rec = [0u8; 10];
    for _ in 0..n {
        r.read_exact(&mut rec)?;
        entries.push(BookEntry {
            key: u64::from_le_bytes(rec[..8].try_into().unwrap()),
            score: rec[8] as i8,
            best: (rec[9] != NO_MOVE).then_some(rec[9]),
        });
    }
    Ok((geometry, ply, entries))
}
