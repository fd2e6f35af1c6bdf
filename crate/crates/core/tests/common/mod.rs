//! Test support shared by the integration tests.
//!
//! [`Oracle`] solves a small board by plain memoized negamax over a cell
//! array, with its own move and line logic, so it shares no code with the
//! bitboard search or the symbolic solver.

#![allow(dead_code)]

pub mod formula;

use std::collections::HashMap;

use c4_core::encoding::{BoardGeometry, Player};
use c4_core::search::Position;

pub const EMPTY: u8 = 0;
pub const FIRST: u8 = 1;
pub const SECOND: u8 = 2;

/// Cells are stored column by column, bottom row first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    pub w: usize,
    pub h: usize,
    pub cells: Vec<u8>,
}

impl Grid {
    pub fn empty(w: usize, h: usize) -> Self {
        Grid { w, h, cells: vec![EMPTY; w * h] }
    }

    pub fn at(&self, c: usize, r: usize) -> u8 {
        self.cells[c * self.h + r]
    }

    pub fn discs(&self) -> usize {
        self.cells.iter().filter(|&&x| x != EMPTY).count()
    }

    pub fn mover(&self) -> u8 {
        if self.discs().is_multiple_of(2) {
            FIRST
        } else {
            SECOND
        }
    }

    pub fn height_of(&self, c: usize) -> usize {
        (0..self.h).take_while(|&r| self.at(c, r) != EMPTY).count()
    }

    /// Base-3 code of the cells; unique per grid.
    pub fn code(&self) -> u64 {
        self.cells.iter().rev().fold(0u64, |acc, &x| acc * 3 + x as u64)
    }

    pub fn decode(w: usize, h: usize, mut code: u64) -> Self {
        let mut cells = vec![EMPTY; w * h];
        for x in cells.iter_mut() {
            *x = (code % 3) as u8;
            code /= 3;
        }
        Grid { w, h, cells }
    }

    /// Drops a disc of `who` into column `c`; returns the row used.
    pub fn drop_disc(&mut self, c: usize, who: u8) -> usize {
        let r = self.height_of(c);
        self.cells[c * self.h + r] = who;
        r
    }

    /// Whether the disc at `(c, r)` is part of four in a row.
    pub fn line_through(&self, c: usize, r: usize) -> bool {
        let who = self.at(c, r);
        if who == EMPTY {
            return false;
        }
        for (dc, dr) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
            let mut run = 1;
            for sign in [1i64, -1] {
                let (mut x, mut y) = (c as i64 + sign * dc, r as i64 + sign * dr);
                while x >= 0
                    && y >= 0
                    && (x as usize) < self.w
                    && (y as usize) < self.h
                    && self.at(x as usize, y as usize) == who
                {
                    run += 1;
                    x += sign * dc;
                    y += sign * dr;
                }
            }
            if run >= 4 {
                return true;
            }
        }
        false
    }

    /// Whether `who` owns any four in a row.
    pub fn has_line(&self, who: u8) -> bool {
        (0..self.w).any(|c| (0..self.h).any(|r| self.at(c, r) == who && self.line_through(c, r)))
    }

    /// The player who did not move last has a line (the game ended).
    pub fn is_won(&self) -> bool {
        let last = if self.mover() == FIRST { SECOND } else { FIRST };
        self.has_line(last)
    }

    pub fn from_position(pos: &Position) -> Self {
        let g = pos.geometry();
        let (w, h) = (g.width() as usize, g.height() as usize);
        let mut grid = Grid::empty(w, h);
        for c in 0..w {
            for r in 0..h {
                grid.cells[c * h + r] = match pos.cell(c as u32, r as u32) {
                    Some(Player::First) => FIRST,
                    Some(Player::Second) => SECOND,
                    None => EMPTY,
                };
            }
        }
        grid
    }

    pub fn to_position(&self, geometry: BoardGeometry) -> Position {
        Position::from_cells(geometry, |c, r| match self.at(c as usize, r as usize) {
            FIRST => Some(Player::First),
            SECOND => Some(Player::Second),
            _ => None,
        })
        .expect("oracle grids are legal")
    }
}

/// Exact value of every reachable position of a small board.
pub struct Oracle {
    pub w: usize,
    pub h: usize,
    /// Code → score for the player to move: `+s` wins with disc `N + 1 - s`.
    pub values: HashMap<u64, i8>,
}

impl Oracle {
    pub fn build(w: usize, h: usize) -> Self {
        let mut o = Oracle { w, h, values: HashMap::new() };
        let root = Grid::empty(w, h);
        o.value(&root);
        o
    }

    pub fn n(&self) -> i32 {
        (self.w * self.h) as i32
    }

    pub fn geometry(&self) -> BoardGeometry {
        BoardGeometry::new(self.w as u32, self.h as u32).unwrap()
    }

    fn value(&mut self, g: &Grid) -> i8 {
        let code = g.code();
        if let Some(&v) = self.values.get(&code) {
            return v;
        }
        let n = self.n();
        let ply = g.discs() as i32;
        let v = if g.is_won() {
            -(n + 1 - ply)
        } else if ply == n {
            0
        } else {
            let me = g.mover();
            let mut best = i32::MIN;
            for c in 0..self.w {
                if g.height_of(c) == self.h {
                    continue;
                }
                let mut child = g.clone();
                child.drop_disc(c, me);
                best = best.max(-(self.value(&child) as i32));
            }
            best
        };
        self.values.insert(code, v as i8);
        v as i8
    }

    pub fn score(&self, g: &Grid) -> i8 {
        self.values[&g.code()]
    }

    /// Columns achieving the best score, for a non-terminal grid.
    pub fn best_moves(&self, g: &Grid) -> Vec<usize> {
        let me = g.mover();
        let mut scored = Vec::new();
        for c in 0..self.w {
            if g.height_of(c) == self.h {
                continue;
            }
            let mut child = g.clone();
            child.drop_disc(c, me);
            scored.push((c, -(self.score(&child) as i32)));
        }
        let best = scored.iter().map(|x| x.1).max().unwrap();
        scored.into_iter().filter(|x| x.1 == best).map(|x| x.0).collect()
    }

    pub fn grids(&self) -> impl Iterator<Item = (Grid, i8)> + '_ {
        self.values.iter().map(|(&code, &v)| (Grid::decode(self.w, self.h, code), v))
    }

    /// Per ply, for the player to move: `[win, draw, lost, terminal]`, with
    /// terminal positions counted as lost.
    pub fn ply_counts(&self) -> Vec<[u64; 4]> {
        let mut out = vec![[0u64; 4]; self.w * self.h + 1];
        for (g, v) in self.grids() {
            let row = &mut out[g.discs()];
            match v.signum() {
                1 => row[0] += 1,
                0 => row[1] += 1,
                _ => row[2] += 1,
            }
            if g.is_won() {
                row[3] += 1;
            }
        }
        out
    }
}
