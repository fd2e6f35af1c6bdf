//! Boolean encodings of ConnectFour boards.
//!
//! Every encoding carries two copies of the board variables: the current
//! board `S` and the successor board `S'`. The copies are interleaved
//! variable by variable, so a transition relation only relates neighbouring
//! levels. Even plies are held over `S` and odd plies over `S'`; image and
//! pre-image alternate between the forward relation `trans(S, S')` and its
//! mirror `trans'(S', S)`, so layers never need renaming.
//!
//! Three layouts are supported:
//!
//! * **Standard** (row-wise or column-wise cell order): two variables per
//!   cell, "first player here" and "second player here", plus side-to-move,
//!   i.e. `2wh + 1` variables per copy. Within a cell the order is
//!   first-player/`S`, first-player/`S'`, second-player/`S`,
//!   second-player/`S'`.
//! * **Compressed** (column-wise): one variable per cell of a board with an
//!   extra top row, plus side-to-move, `w(h + 1) + 1` per copy. In each
//!   column the lowest empty cell is `true` and everything above it `false`;
//!   cells below it hold `true` for first-player discs and `false` for
//!   second-player discs.
//!
//! The side-to-move variable of each copy is placed first. It is `true`
//! when the second player is to move.

mod geometry;
mod terminal;
mod transition;

pub use geometry::{BoardGeometry, Player, MAX_DIM};
pub use terminal::{intersect_terminals, subtract_terminals, TerminalClauses};
pub use transition::TransitionRelation;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bdd::{BddManager, NodeRef, Result as BddResult, Var, VarSet};
use crate::search::Position;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("unsupported board {width}x{height}: both sides must be within 1..=13")]
    InvalidGeometry { width: u32, height: u32 },
    #[error("unknown encoding `{0}` (expected standard-row, standard-col or compressed)")]
    UnknownKind(String),
    #[error("illegal position: {0}")]
    IllegalPosition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingKind {
    StandardRowWise,
    StandardColumnWise,
    Compressed,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 3] =
        [EncodingKind::StandardRowWise, EncodingKind::StandardColumnWise, EncodingKind::Compressed];

    /// Stable id used in file headers.
    pub fn id(self) -> u8 {
        match self {
            EncodingKind::StandardRowWise => 0,
            EncodingKind::StandardColumnWise => 1,
            EncodingKind::Compressed => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::StandardRowWise => "standard-row",
            EncodingKind::StandardColumnWise => "standard-col",
            EncodingKind::Compressed => "compressed",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncodingKind {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| EncodingError::UnknownKind(s.to_string()))
    }
}

/// Which copy of the board variables a BDD is expressed over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoardCopy {
    /// `S`
    Current,
    /// `S'`
    Next,
}

impl BoardCopy {
    /// Layers at even plies live over `S`, odd plies over `S'`.
    pub fn of_ply(ply: u32) -> BoardCopy {
        if ply.is_multiple_of(2) {
            BoardCopy::Current
        } else {
            BoardCopy::Next
        }
    }

    pub fn other(self) -> BoardCopy {
        match self {
            BoardCopy::Current => BoardCopy::Next,
            BoardCopy::Next => BoardCopy::Current,
        }
    }

    fn offset(self) -> Var {
        match self {
            BoardCopy::Current => 0,
            BoardCopy::Next => 1,
        }
    }
}

/// Variable layout for one board geometry. A pure description; BDDs built
/// from it live in whichever manager the caller supplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Encoding {
    geometry: BoardGeometry,
    kind: EncodingKind,
}

impl Encoding {
    pub fn new(geometry: BoardGeometry, kind: EncodingKind) -> Self {
        Encoding { geometry, kind }
    }

    pub fn geometry(&self) -> BoardGeometry {
        self.geometry
    }

    pub fn kind(&self) -> EncodingKind {
        self.kind
    }

    pub fn is_compressed(&self) -> bool {
        self.kind == EncodingKind::Compressed
    }

    /// Variables describing one board copy.
    pub fn vars_per_copy(&self) -> u32 {
        let (w, h) = (self.geometry.width(), self.geometry.height());
        match self.kind {
            EncodingKind::Compressed => w * (h + 1) + 1,
            _ => 2 * w * h + 1,
        }
    }

    /// Both copies together.
    pub fn num_vars(&self) -> u32 {
        2 * self.vars_per_copy()
    }

    pub fn stm_var(&self, copy: BoardCopy) -> Var {
        copy.offset()
    }

    fn cell_index(&self, col: u32, row: u32) -> u32 {
        let (w, h) = (self.geometry.width(), self.geometry.height());
        match self.kind {
            EncodingKind::StandardRowWise => row * w + col,
            EncodingKind::StandardColumnWise => col * h + row,
            EncodingKind::Compressed => col * (h + 1) + row,
        }
    }

    /// Standard layouts: "`player` occupies (col, row)" in `copy`.
    pub fn occupancy_var(&self, col: u32, row: u32, player: Player, copy: BoardCopy) -> Var {
        debug_assert!(!self.is_compressed());
        2 + 4 * self.cell_index(col, row) + 2 * player.index() as u32 + copy.offset()
    }

    /// Compressed layout: the bit of (col, row), `row` in `0..=height`.
    pub fn cell_bit(&self, col: u32, row: u32, copy: BoardCopy) -> Var {
        debug_assert!(self.is_compressed() && row <= self.geometry.height());
        2 + 2 * self.cell_index(col, row) + copy.offset()
    }

    /// All variables of one copy, side-to-move included.
    pub fn copy_vars(&self, copy: BoardCopy) -> VarSet {
        VarSet::from_unsorted((0..self.vars_per_copy()).map(|i| 2 * i + copy.offset()))
    }

    /// Per-column variables of `copy` in encoding order, for frame building.
    pub(crate) fn column_vars(&self, col: u32, copy: BoardCopy) -> Vec<Var> {
        let h = self.geometry.height();
        if self.is_compressed() {
            (0..=h).map(|r| self.cell_bit(col, r, copy)).collect()
        } else {
            (0..h).flat_map(|r| [Player::First, Player::Second].map(|p| self.occupancy_var(col, r, p, copy))).collect()
        }
    }

    /// The empty board with the first player to move, over `S`.
    pub fn initial_state(&self, m: &mut BddManager) -> BddResult<NodeRef> {
        let copy = BoardCopy::Current;
        let mut lits = vec![(self.stm_var(copy), false)];
        for c in 0..self.geometry.width() {
            if self.is_compressed() {
                for r in 0..=self.geometry.height() {
                    lits.push((self.cell_bit(c, r, copy), r == 0));
                }
            } else {
                lits.extend(self.column_vars(c, copy).into_iter().map(|v| (v, false)));
            }
        }
        m.cube(&lits)
    }

    /// A full assignment (both copies set identically) under which a layer
    /// BDD evaluates to `true` exactly when it contains `pos`.
    pub fn position_to_assignment(&self, pos: &Position) -> Result<Vec<bool>, EncodingError> {
        if pos.geometry() != self.geometry {
            return Err(EncodingError::IllegalPosition(format!(
                "position is {} but encoding is {}",
                pos.geometry(),
                self.geometry
            )));
        }
        let checked = Position::from_cells(self.geometry, |c, r| pos.cell(c, r))
            .map_err(|e| EncodingError::IllegalPosition(e.to_string()))?;
        if checked.mask() != pos.mask() || checked.current() != pos.current() {
            return Err(EncodingError::IllegalPosition("bitboard has stray bits outside the board".into()));
        }
        let mut a = vec![false; self.num_vars() as usize];
        let h = self.geometry.height();
        for copy in [BoardCopy::Current, BoardCopy::Next] {
            a[self.stm_var(copy) as usize] = pos.side_to_move() == Player::Second;
            for c in 0..self.geometry.width() {
                if self.is_compressed() {
                    let top = pos.column_height(c);
                    for r in 0..top {
                        a[self.cell_bit(c, r, copy) as usize] = pos.cell(c, r) == Some(Player::First);
                    }
                    a[self.cell_bit(c, top, copy) as usize] = true;
                } else {
                    for r in 0..h {
                        if let Some(p) = pos.cell(c, r) {
                            a[self.occupancy_var(c, r, p, copy) as usize] = true;
                        }
                    }
                }
            }
        }
        Ok(a)
    }

    /// Inverse of [`Self::position_to_assignment`] for one copy. Returns `None`
    /// when the bits do not describe a well-formed board.
    pub fn assignment_to_position(&self, a: &[bool], copy: BoardCopy) -> Option<Position> {
        let (w, h) = (self.geometry.width(), self.geometry.height());
        let mut cells = vec![None; (w * h) as usize];
        for c in 0..w {
            if self.is_compressed() {
                let marker = (0..=h).rev().find(|&r| a[self.cell_bit(c, r, copy) as usize])?;
                for r in 0..marker {
                    let first = a[self.cell_bit(c, r, copy) as usize];
                    cells[(c * h + r) as usize] = Some(if first { Player::First } else { Player::Second });
                }
            } else {
                for r in 0..h {
                    let p1 = a[self.occupancy_var(c, r, Player::First, copy) as usize];
                    let p2 = a[self.occupancy_var(c, r, Player::Second, copy) as usize];
                    cells[(c * h + r) as usize] = match (p1, p2) {
                        (false, false) => None,
                        (true, false) => Some(Player::First),
                        (false, true) => Some(Player::Second),
                        (true, true) => return None,
                    };
                }
            }
        }
        let pos = Position::from_cells(self.geometry, |c, r| cells[(c * h + r) as usize]).ok()?;
        let stm_second = a[self.stm_var(copy) as usize];
        (stm_second == (pos.side_to_move() == Player::Second)).then_some(pos)
    }
}

/// ANDs `parts` together, consuming one reference from each.
pub(crate) fn and_all(m: &mut BddManager, parts: Vec<NodeRef>) -> BddResult<NodeRef> {
    fold_consuming(m, parts, NodeRef::TRUE, |m, a, b| m.and(a, b))
}

/// ORs `parts` together, consuming one reference from each.
pub(crate) fn or_all(m: &mut BddManager, parts: Vec<NodeRef>) -> BddResult<NodeRef> {
    fold_consuming(m, parts, NodeRef::FALSE, |m, a, b| m.or(a, b))
}

fn fold_consuming(
    m: &mut BddManager,
    parts: Vec<NodeRef>,
    unit: NodeRef,
    op: impl Fn(&mut BddManager, NodeRef, NodeRef) -> BddResult<NodeRef>,
) -> BddResult<NodeRef> {
    let mut acc = unit;
    let mut rest = parts.into_iter();
    while let Some(p) = rest.next() {
        let next = op(m, acc, p);
        m.deref_node(p)?;
        m.deref_node(acc)?;
        match next {
            Ok(n) => acc = n,
            Err(e) => {
                for q in rest {
                    m.deref_node(q)?;
                }
                return Err(e);
            }
        }
    }
    Ok(acc)
}
