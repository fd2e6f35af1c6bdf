use std::fmt;

use serde::{Deserialize, Serialize};

use super::EncodingError;

pub const MAX_DIM: u8 = 13;

/// Board dimensions. Row 0 is the bottom row; discs fill columns upwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoardGeometry {
    width: u8,
    height: u8,
}

/// The two sides. `First` moves at even plies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    First,
    Second,
}

impl Player {
    pub fn to_move_at(ply: u32) -> Player {
        if ply.is_multiple_of(2) {
            Player::First
        } else {
            Player::Second
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::First => Player::Second,
            Player::Second => Player::First,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl BoardGeometry {
    pub fn new(width: u32, height: u32) -> Result<Self, EncodingError> {
        let ok = |d: u32| (1..=MAX_DIM as u32).contains(&d);
        if !ok(width) || !ok(height) {
            return Err(EncodingError::InvalidGeometry { width, height });
        }
        Ok(BoardGeometry { width: width as u8, height: height as u8 })
    }

    pub fn width(self) -> u32 {
        self.width as u32
    }

    pub fn height(self) -> u32 {
        self.height as u32
    }

    /// Number of cells, which is also the last ply of any game.
    pub fn max_ply(self) -> u32 {
        self.width() * self.height()
    }

    /// Every horizontal, vertical and diagonal run of four cells, as
    /// `(column, row)` pairs.
    pub fn windows(self) -> Vec<[(u32, u32); 4]> {
        let (w, h) = (self.width() as i32, self.height() as i32);
        let mut out = Vec::new();
        for (dc, dr) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
            for c in 0..w {
                for r in 0..h {
                    let (ec, er) = (c + 3 * dc, r + 3 * dr);
                    if ec < 0 || ec >= w || er < 0 || er >= h {
                        continue;
                    }
                    let mut win = [(0, 0); 4];
                    for (k, cell) in win.iter_mut().enumerate() {
                        let k = k as i32;
                        *cell = ((c + k * dc) as u32, (r + k * dr) as u32);
                    }
                    out.push(win);
                }
            }
        }
        out
    }

    /// Closed-form window count, `w(h-3) + (w-3)h + 2(w-3)(h-3)` with
    /// negative factors clamped to zero.
    pub fn window_count(self) -> usize {
        let (w, h) = (self.width() as i64, self.height() as i64);
        let vert = w * (h - 3).max(0);
        let horiz = (w - 3).max(0) * h;
        let diag = 2 * (w - 3).max(0) * (h - 3).max(0);
        (vert + horiz + diag) as usize
    }
}

impl fmt::Display for BoardGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}
