//! Two-mask bitboard.
//!
//! Each column takes `height + 1` bits, bottom row first; the extra bit per
//! column is a guard that keeps shifted line tests from wrapping between
//! columns. For 7×6:
//!
//! ```text
//!   .  .  .  .  .  .  .
//!   5 12 19 26 33 40 47
//!   4 11 18 25 32 39 46
//!   3 10 17 24 31 38 45
//!   2  9 16 23 30 37 44
//!   1  8 15 22 29 36 43
//!   0  7 14 21 28 35 42
//! ```

use std::fmt;

use thiserror::Error;

use crate::encoding::{BoardGeometry, Player};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PositionError {
    #[error("board {0} needs more than 64 bitboard bits")]
    TooLarge(BoardGeometry),
    #[error("illegal move at ply {ply}: column {column}")]
    IllegalMove { ply: u32, column: u32 },
    #[error("illegal position: {0}")]
    IllegalPosition(String),
}

/// A position: the mover's discs and the set of all discs.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    geometry: BoardGeometry,
    current: u64,
    mask: u64,
    ply: u32,
}

impl Position {
    pub fn supports(geometry: BoardGeometry) -> bool {
        geometry.width() * (geometry.height() + 1) <= 64
    }

    pub fn new(geometry: BoardGeometry) -> Result<Self, PositionError> {
        if !Self::supports(geometry) {
            return Err(PositionError::TooLarge(geometry));
        }
        Ok(Position { geometry, current: 0, mask: 0, ply: 0 })
    }

    /// Replays a string of 1-based column digits (`'1'..='9'`, then `'a'..`
    /// for wider boards). Moves after a decided game are rejected.
    pub fn from_moves(geometry: BoardGeometry, moves: &str) -> Result<Self, PositionError> {
        let mut pos = Position::new(geometry)?;
        for (i, ch) in moves.chars().enumerate() {
            let ply = i as u32 + 1;
            let column = ch.to_digit(36).filter(|&d| d >= 1).map(|d| d - 1);
            let Some(col) = column.filter(|&c| c < geometry.width()) else {
                let shown = ch.to_digit(36).unwrap_or(0);
                return Err(PositionError::IllegalMove { ply, column: shown });
            };
            if pos.is_terminal() || !pos.can_play(col) {
                return Err(PositionError::IllegalMove { ply, column: col + 1 });
            }
            pos.play(col);
        }
        Ok(pos)
    }

    /// Builds a position from per-cell owners, validating gravity and disc
    /// counts. `owner(col, row)` is queried for every cell.
    pub fn from_cells(
        geometry: BoardGeometry,
        owner: impl Fn(u32, u32) -> Option<Player>,
    ) -> Result<Self, PositionError> {
        let mut pos = Position::new(geometry)?;
        let (mut first, mut second) = (0u64, 0u64);
        for c in 0..geometry.width() {
            let mut gap = false;
            for r in 0..geometry.height() {
                let bit = 1u64 << pos.bit_index(c, r);
                match owner(c, r) {
                    None => gap = true,
                    Some(_) if gap => {
                        return Err(PositionError::IllegalPosition(format!(
                            "floating disc at column {}, row {}",
                            c + 1,
                            r + 1
                        )))
                    }
                    Some(Player::First) => first |= bit,
                    Some(Player::Second) => second |= bit,
                }
            }
        }
        let (n1, n2) = (first.count_ones(), second.count_ones());
        if n1 != n2 && n1 != n2 + 1 {
            return Err(PositionError::IllegalPosition(format!(
                "{n1} first-player discs against {n2} second-player discs"
            )));
        }
        pos.ply = n1 + n2;
        pos.mask = first | second;
        pos.current = if pos.ply % 2 == 0 { first } else { second };
        Ok(pos)
    }

    /// Raw constructor; no validation.
    pub fn from_raw(geometry: BoardGeometry, current: u64, mask: u64) -> Self {
        Position { geometry, current, mask, ply: mask.count_ones() }
    }

    pub fn geometry(&self) -> BoardGeometry {
        self.geometry
    }

    pub fn current(&self) -> u64 {
        self.current
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    /// Discs on the board.
    pub fn ply(&self) -> u32 {
        self.ply
    }

    pub fn side_to_move(&self) -> Player {
        Player::to_move_at(self.ply)
    }

    #[inline]
    fn col_bits(&self) -> u32 {
        self.geometry.height() + 1
    }

    #[inline]
    pub fn bit_index(&self, col: u32, row: u32) -> u32 {
        col * self.col_bits() + row
    }

    #[inline]
    pub fn bottom(&self, col: u32) -> u64 {
        1u64 << (col * self.col_bits())
    }

    #[inline]
    pub fn top(&self, col: u32) -> u64 {
        1u64 << (col * self.col_bits() + self.geometry.height() - 1)
    }

    #[inline]
    pub fn column_mask(&self, col: u32) -> u64 {
        ((1u64 << self.geometry.height()) - 1) << (col * self.col_bits())
    }

    /// Bottom cell of every column.
    pub fn bottom_mask(&self) -> u64 {
        (0..self.geometry.width()).fold(0, |acc, c| acc | self.bottom(c))
    }

    /// Every playable (non-guard) cell.
    pub fn board_mask(&self) -> u64 {
        self.bottom_mask() * ((1u64 << self.geometry.height()) - 1)
    }

    /// Discs of `player`.
    pub fn discs(&self, player: Player) -> u64 {
        if player == self.side_to_move() {
            self.current
        } else {
            self.current ^ self.mask
        }
    }

    pub fn cell(&self, col: u32, row: u32) -> Option<Player> {
        let bit = 1u64 << self.bit_index(col, row);
        if self.mask & bit == 0 {
            None
        } else if self.current & bit != 0 {
            Some(self.side_to_move())
        } else {
            Some(self.side_to_move().other())
        }
    }

    pub fn column_height(&self, col: u32) -> u32 {
        (self.mask & self.column_mask(col)).count_ones()
    }

    #[inline]
    pub fn can_play(&self, col: u32) -> bool {
        self.mask & self.top(col) == 0
    }

    /// Columns with room, as a bitmask of playable cells.
    #[inline]
    pub fn playable(&self) -> u64 {
        (self.mask + self.bottom_mask()) & self.board_mask()
    }

    pub fn legal_moves(&self) -> Vec<u32> {
        if self.is_terminal() {
            return Vec::new();
        }
        (0..self.geometry.width()).filter(|&c| self.can_play(c)).collect()
    }

    /// Drops a disc for the side to move. The column must have room.
    #[inline]
    pub fn play(&mut self, col: u32) {
        debug_assert!(self.can_play(col));
        self.current ^= self.mask;
        self.mask |= self.mask + self.bottom(col);
        self.ply += 1;
    }

    /// Plays a move given as a single-bit cell mask (must be playable).
    #[inline]
    pub fn play_cell(&mut self, cell: u64) {
        self.current ^= self.mask;
        self.mask |= cell;
        self.ply += 1;
    }

    pub fn after(&self, col: u32) -> Position {
        let mut p = *self;
        p.play(col);
        p
    }

    pub fn try_play(&mut self, col: u32) -> Result<(), PositionError> {
        if col >= self.geometry.width() || !self.can_play(col) || self.is_terminal() {
            return Err(PositionError::IllegalMove { ply: self.ply + 1, column: col + 1 });
        }
        self.play(col);
        Ok(())
    }

    /// Whether dropping into `col` completes a line for the side to move.
    #[inline]
    pub fn is_winning_move(&self, col: u32) -> bool {
        let cell = (self.mask + self.bottom(col)) & self.column_mask(col);
        self.has_won(self.current | cell)
    }

    /// Four in a row anywhere in `discs`.
    #[inline]
    pub fn has_won(&self, discs: u64) -> bool {
        let h = self.geometry.height();
        for shift in [1, h, h + 1, h + 2] {
            let m = discs & (discs >> shift);
            if m & (m >> (2 * shift)) != 0 {
                return true;
            }
        }
        false
    }

    /// The player who made the last move has four in a row.
    pub fn last_mover_won(&self) -> bool {
        self.has_won(self.current ^ self.mask)
    }

    pub fn is_full(&self) -> bool {
        self.ply == self.geometry.max_ply()
    }

    /// Game over: a line for the previous mover, or a full board.
    pub fn is_terminal(&self) -> bool {
        self.last_mover_won() || self.is_full()
    }

    /// Empty cells that would complete a line for `discs`.
    pub fn winning_cells(&self, discs: u64) -> u64 {
        let h = self.geometry.height() as u64;
        let p = discs;
        // vertical
        let mut r = (p << 1) & (p << 2) & (p << 3);
        for shift in [h + 1, h, h + 2] {
            let s = shift as u32;
            let a = (p << s) & (p << (2 * s));
            r |= a & (p << (3 * s));
            r |= a & (p >> s);
            let b = (p >> s) & (p >> (2 * s));
            r |= b & (p << s);
            r |= b & (p >> (3 * s));
        }
        r & (self.board_mask() ^ self.mask)
    }

    /// Empty cells completing a line for `player`.
    pub fn threats(&self, player: Player) -> u64 {
        self.winning_cells(self.discs(player))
    }

    /// Tromp key: unique for every position of a geometry.
    #[inline]
    pub fn key(&self) -> u64 {
        self.current + self.mask
    }

    pub fn mirror(&self) -> Position {
        let w = self.geometry.width();
        let (mut cur, mut mask) = (0u64, 0u64);
        for c in 0..w {
            let from = c * self.col_bits();
            let to = (w - 1 - c) * self.col_bits();
            let cm = self.column_mask(c);
            cur |= ((self.current & cm) >> from) << to;
            mask |= ((self.mask & cm) >> from) << to;
        }
        Position { geometry: self.geometry, current: cur, mask, ply: self.ply }
    }

    /// `min(key, mirrored key)`, with whether the minimum came from the mirror.
    #[inline]
    pub fn canonical_key(&self) -> (u64, bool) {
        let k = self.key();
        let mk = self.mirror().key();
        if mk < k {
            (mk, true)
        } else {
            (k, false)
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.mirror() == *self
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Position {} ply {}", self.geometry, self.ply)?;
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in (0..self.geometry.height()).rev() {
            for c in 0..self.geometry.width() {
                let ch = match self.cell(c, r) {
                    None => '.',
                    Some(Player::First) => 'X',
                    Some(Player::Second) => 'O',
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
