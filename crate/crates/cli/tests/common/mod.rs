//! Test support: an explicit negamax oracle over cell arrays that shares no
//! code with the solver, plus helpers for building stores.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::Path;

use c4_core::encoding::{BoardGeometry, EncodingKind};
use c4_core::solver::{solve, SolveBudget};
use c4_core::store::WdlStore;

pub const CAPACITY: usize = 1 << 22;

pub fn solved_store(out: &Path, w: u32, h: u32) -> WdlStore {
    let g = BoardGeometry::new(w, h).unwrap();
    let budget = SolveBudget { out_dir: Some(out.to_path_buf()), ..SolveBudget::new(CAPACITY) };
    solve(g, EncodingKind::Compressed, &budget).unwrap();
    WdlStore::open_for(out, g).unwrap()
}

/// One reachable position: the first move string found for it, its exact
/// score for the player to move, and each legal move's score for that
/// player after making it.
#[derive(Clone, Debug)]
pub struct Entry {
    pub moves: String,
    pub ply: usize,
    pub score: i32,
    pub terminal: bool,
    /// (1-based column, score of the move for the mover).
    pub children: Vec<(u32, i32)>,
}

/// Every reachable position of a small board with its exact value.
pub struct Oracle {
    w: usize,
    h: usize,
    memo: HashMap<Vec<u8>, i32>,
    pub entries: Vec<Entry>,
}

impl Oracle {
    pub fn build(w: usize, h: usize) -> Oracle {
        let mut o = Oracle { w, h, memo: HashMap::new(), entries: Vec::new() };
        let mut cells = vec![0u8; w * h];
        o.negamax(&mut cells, 0, false);
        let mut seen = std::collections::HashSet::new();
        let mut moves = String::new();
        o.enumerate(&mut cells, 0, false, &mut moves, &mut seen);
        o
    }

    fn n(&self) -> usize {
        self.w * self.h
    }

    fn height(&self, cells: &[u8], c: usize) -> usize {
        (0..self.h).take_while(|&r| cells[c * self.h + r] != 0).count()
    }

    /// Whether the disc at (c, r) completes four in a line.
    fn line_at(&self, cells: &[u8], c: usize, r: usize) -> bool {
        let who = cells[c * self.h + r];
        let at = |c: isize, r: isize| {
            c >= 0
                && r >= 0
                && (c as usize) < self.w
                && (r as usize) < self.h
                && cells[c as usize * self.h + r as usize] == who
        };
        for (dc, dr) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
            let mut run = 1;
            for sign in [1, -1] {
                let (mut x, mut y) = (c as isize + sign * dc, r as isize + sign * dr);
                while at(x, y) {
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

    /// Value for the player to move; `won` says the last move made a line.
    fn negamax(&mut self, cells: &mut Vec<u8>, ply: usize, won: bool) -> i32 {
        if won {
            return -((self.n() + 1 - ply) as i32);
        }
        if ply == self.n() {
            return 0;
        }
        if let Some(&v) = self.memo.get(cells.as_slice()) {
            return v;
        }
        let who = 1 + (ply % 2) as u8;
        let mut best = i32::MIN;
        for c in 0..self.w {
            let r = self.height(cells, c);
            if r == self.h {
                continue;
            }
            cells[c * self.h + r] = who;
            let line = self.line_at(cells, c, r);
            best = best.max(-self.negamax(cells, ply + 1, line));
            cells[c * self.h + r] = 0;
        }
        self.memo.insert(cells.clone(), best);
        best
    }

    fn enumerate(
        &mut self,
        cells: &mut Vec<u8>,
        ply: usize,
        won: bool,
        moves: &mut String,
        seen: &mut std::collections::HashSet<Vec<u8>>,
    ) {
        if !seen.insert(cells.clone()) {
            return;
        }
        let score = self.negamax(cells, ply, won);
        let terminal = won || ply == self.n();
        let mut children = Vec::new();
        let mut next = Vec::new();
        if !terminal {
            let who = 1 + (ply % 2) as u8;
            for c in 0..self.w {
                let r = self.height(cells, c);
                if r == self.h {
                    continue;
                }
                cells[c * self.h + r] = who;
                let line = self.line_at(cells, c, r);
                children.push((c as u32 + 1, -self.negamax(cells, ply + 1, line)));
                next.push((c, r, line));
                cells[c * self.h + r] = 0;
            }
        }
        self.entries.push(Entry { moves: moves.clone(), ply, score, terminal, children });
        let who = 1 + (ply % 2) as u8;
        for (c, r, line) in next {
            cells[c * self.h + r] = who;
            moves.push(char::from_digit(c as u32 + 1, 10).unwrap());
            self.enumerate(cells, ply + 1, line, moves, seen);
            moves.pop();
            cells[c * self.h + r] = 0;
        }
    }
}
