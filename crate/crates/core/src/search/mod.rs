//! Explicit-state search: bitboard positions, alpha-beta with a
//! transposition table, and an opening book builder.
//!
//! Scores are from the side to move. With `N` cells, a score `s > 0` means
//! the mover wins and the winning disc is the `(N + 1 - s)`-th of the game;
//! `s < 0` is the mirror image for a loss and `0` is a draw. Larger is
//! always better for the mover: faster wins and slower losses.

mod book;
mod position;
mod tt;

pub use book::{build_opening_book, read_book, write_book, BookEntry, BookError, BOOK_MAGIC};
pub use position::{Position, PositionError};
pub use tt::{Bound, TranspositionTable, TtEntry};

use std::time::Instant;

use thiserror::Error;

use crate::encoding::BoardGeometry;
use crate::store::{Wdl, WdlStore};

pub type Score = i32;

/// Score of a game whose last disc (the winning one, if any) is number
/// `final_ply`, seen by the player who placed it.
pub fn win_score(geometry: BoardGeometry, final_ply: u32) -> Score {
    geometry.max_ply() as Score + 1 - final_ply as Score
}

/// The disc number that ends the game under best play, for a non-zero
/// score of a position at any ply.
pub fn final_ply(geometry: BoardGeometry, score: Score) -> Option<u32> {
    (score != 0).then(|| (geometry.max_ply() as Score + 1 - score.abs()) as u32)
}

/// Exact score of a terminal position: a loss for the mover if the last
/// disc made a line, otherwise a draw.
pub fn terminal_score(pos: &Position) -> Score {
    if pos.last_mover_won() {
        -win_score(pos.geometry(), pos.ply())
    } else {
        0
    }
}

/// Empty cells where `player` would complete a line.
pub fn count_threats(pos: &Position, player: crate::encoding::Player) -> u32 {
    pos.threats(player).count_ones()
}

fn center_distance(width: u32, col: u32) -> u32 {
    (2 * col).abs_diff(width - 1)
}

/// Orders `moves`: most threats created by the move first, then closest to
/// the center, then lowest column.
pub fn order_moves(pos: &Position, moves: &[u32]) -> Vec<u32> {
    let me = pos.side_to_move();
    let w = pos.geometry().width();
    let mut keyed: Vec<(u32, u32, u32)> = moves
        .iter()
        .map(|&c| {
            let threats = count_threats(&pos.after(c), me);
            (threats, center_distance(w, c), c)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|k| k.2).collect()
}

/// Moves that do not hand the opponent an immediate win: if the opponent
/// threatens a playable cell it must be blocked, and no move may be played
/// directly below an opponent threat. Returns 0 if every move loses.
pub fn non_losing_moves(pos: &Position) -> u64 {
    let opp = pos.side_to_move().other();
    let mut possible = pos.playable();
    let opp_win = pos.threats(opp);
    let forced = possible & opp_win;
    if forced != 0 {
        if forced.count_ones() > 1 {
            return 0;
        }
        possible = forced;
    }
    possible & !(opp_win >> 1)
}

/// Decides a non-terminal position without search where it can: an
/// immediate win, a loss because the opponent has two playable threats (or
/// every move gives one away), or a draw once neither side can still make
/// a line.
pub fn static_evaluate(pos: &Position) -> Option<Score> {
    let g = pos.geometry();
    let p = pos.ply();
    let n = g.max_ply();
    if pos.playable() & pos.threats(pos.side_to_move()) != 0 {
        return Some(win_score(g, p + 1));
    }
    if non_losing_moves(pos) == 0 {
        return Some(-win_score(g, p + 2));
    }
    if p + 2 >= n {
        return Some(0);
    }
    None
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub tt_log2: u32,
    /// Consult the store only while more than this many plies remain.
    pub probe_depth: u32,
    pub deadline: Option<Instant>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { tt_log2: TranspositionTable::DEFAULT_LOG2, probe_depth: 6, deadline: None }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("search deadline passed")]
    Timeout,
    #[error("position is over")]
    Terminal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BestMove {
    pub column: u32,
    pub score: Score,
    /// Best play from the position, starting with `column`.
    pub pv: Vec<u32>,
}

/// Principal-variation search over one geometry. Owns its table; a store,
/// if given, is shared read-only.
pub struct Searcher<'s> {
    geometry: BoardGeometry,
    tt: TranspositionTable,
    store: Option<&'s WdlStore>,
    config: SearchConfig,
    nodes: u64,
    timed_out: bool,
}

impl<'s> Searcher<'s> {
    pub fn new(geometry: BoardGeometry, config: SearchConfig, store: Option<&'s WdlStore>) -> Self {
        let key_bits = geometry.width() * (geometry.height() + 1);
        let store = store.filter(|s| s.geometry() == geometry);
        Searcher {
            geometry,
            tt: TranspositionTable::new(config.tt_log2, key_bits),
            store,
            config,
            nodes: 0,
            timed_out: false,
        }
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn reset_nodes(&mut self) {
        self.nodes = 0;
    }

    pub fn geometry(&self) -> BoardGeometry {
        self.geometry
    }

    fn probe(&self, pos: &Position) -> Option<Wdl> {
        let store = self.store?;
        let remaining = self.geometry.max_ply() - pos.ply();
        if remaining <= self.config.probe_depth {
            return None;
        }
        store.lookup(pos).ok()
    }

    /// Exact score of `pos`, terminal or not.
    pub fn solve(&mut self, pos: &Position) -> Result<Score, SearchError> {
        if pos.is_terminal() {
            return Ok(terminal_score(pos));
        }
        if let Some(s) = static_evaluate(pos) {
            return Ok(s);
        }
        let g = self.geometry;
        let p = pos.ply();
        let (mut lo, mut hi) = (-win_score(g, p + 4), win_score(g, p + 3));
        if let Some(wdl) = self.probe(pos) {
            match wdl {
                Wdl::Draw => return Ok(0),
                Wdl::Win => lo = lo.max(1),
                Wdl::Loss => hi = hi.min(-1),
            }
        }
        // Null-window probes narrow [lo, hi] until it is a single score.
        while lo < hi {
            let mut med = lo + (hi - lo) / 2;
            if med <= 0 && lo / 2 < med {
                med = lo / 2;
            } else if med >= 0 && hi / 2 > med {
                med = hi / 2;
            }
            let r = self.search(pos, med, med + 1);
            if self.timed_out {
                self.timed_out = false;
                return Err(SearchError::Timeout);
            }
            if r <= med {
                hi = r;
            } else {
                lo = r;
            }
        }
        Ok(lo)
    }

    /// Fail-hard negamax with principal-variation windows. `pos` must not be
    /// terminal. The result is exact when it lies strictly inside
    /// `(alpha, beta)`, an upper bound when `<= alpha` and a lower bound when
    /// `>= beta`.
    pub fn search(&mut self, pos: &Position, mut alpha: Score, mut beta: Score) -> Score {
        self.nodes += 1;
        if self.nodes & 0xFFF == 0 {
            if let Some(d) = self.config.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                }
            }
        }
        if self.timed_out {
            return alpha;
        }
        if let Some(s) = static_evaluate(pos) {
            return s.clamp(alpha, beta);
        }
        let g = self.geometry;
        let p = pos.ply();
        let w = g.width();

        // The mover cannot win with its next disc, nor lose to the reply.
        let max = win_score(g, p + 3);
        let min = -win_score(g, p + 4);
        alpha = alpha.max(min);
        beta = beta.min(max);
        if alpha >= beta {
            return alpha;
        }

        let mut winners_only = false;
        if let Some(wdl) = self.probe(pos) {
            match wdl {
                Wdl::Draw => return 0.clamp(alpha, beta),
                Wdl::Win => {
                    if beta <= 1 {
                        return beta;
                    }
                    alpha = alpha.max(0);
                    winners_only = true;
                }
                Wdl::Loss => {
                    if alpha >= -1 {
                        return alpha;
                    }
                    beta = beta.min(0);
                }
            }
        }

        let (key, mirrored) = pos.canonical_key();
        let orient = |c: u32| if mirrored { w - 1 - c } else { c };
        let mut tt_move = None;
        if let Some(e) = self.tt.get(key) {
            match e.bound {
                Bound::Exact => return e.score.clamp(alpha, beta),
                Bound::Lower => alpha = alpha.max(e.score),
                Bound::Upper => beta = beta.min(e.score),
            }
            if alpha >= beta {
                return alpha;
            }
            tt_move = e.best.map(orient);
        }

        let allowed = non_losing_moves(pos);
        let legal: Vec<u32> = (0..w).filter(|&c| allowed & pos.column_mask(c) != 0).collect();
        let mut moves = order_moves(pos, &legal);
        if let Some(t) = tt_move {
            if let Some(i) = moves.iter().position(|&c| c == t) {
                moves[..=i].rotate_right(1);
            }
        }
        if winners_only {
            let store = self.store.expect("probe implies a store");
            moves.retain(|&c| {
                let child = pos.after(c);
                !matches!(store.lookup(&child), Ok(Wdl::Win) | Ok(Wdl::Draw))
            });
        }

        let alpha0 = alpha;
        let mut best_move = None;
        for (i, &c) in moves.iter().enumerate() {
            let child = pos.after(c);
            let score = if i == 0 {
                -self.search(&child, -beta, -alpha)
            } else {
                let s = -self.search(&child, -alpha - 1, -alpha);
                if s > alpha && s < beta {
                    -self.search(&child, -beta, -alpha)
                } else {
                    s
                }
            };
            if self.timed_out {
                return alpha;
            }
            if score >= beta {
                self.tt.put(key, TtEntry { bound: Bound::Lower, score, best: Some(orient(c)) });
                return beta;
            }
            if score > alpha {
                alpha = score;
                best_move = Some(c);
            }
        }
        let bound = if alpha > alpha0 { Bound::Exact } else { Bound::Upper };
        self.tt.put(key, TtEntry { bound, score: alpha, best: best_move.map(orient) });
        alpha
    }

    /// Exact score of every legal move, as `(column, score for the mover)`,
    /// in column order.
    pub fn evaluate_moves(&mut self, pos: &Position) -> Result<Vec<(u32, Score)>, SearchError> {
        let mut out = Vec::new();
        for c in pos.legal_moves() {
            let child = pos.after(c);
            out.push((c, -self.solve(&child)?));
        }
        Ok(out)
    }

    /// Best move by exact score. Ties go to the move ordered first, judged
    /// in the canonical orientation so mirrored positions get mirrored moves.
    pub fn best_move(&mut self, pos: &Position) -> Result<BestMove, SearchError> {
        if pos.is_terminal() {
            return Err(SearchError::Terminal);
        }
        let (column, score) = self.best_child(pos)?;
        let mut pv = vec![column];
        let mut cur = pos.after(column);
        while !cur.is_terminal() {
            let (c, _) = self.best_child(&cur)?;
            pv.push(c);
            cur.play(c);
        }
        Ok(BestMove { column, score, pv })
    }

    fn best_child(&mut self, pos: &Position) -> Result<(u32, Score), SearchError> {
        let w = self.geometry.width();
        let (_, mirrored) = pos.canonical_key();
        let view = if mirrored { pos.mirror() } else { *pos };
        let ordered = order_moves(&view, &view.legal_moves());
        let mut best: Option<(u32, Score)> = None;
        for c in ordered {
            let s = -self.solve(&view.after(c))?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        let (c, s) = best.ok_or(SearchError::Terminal)?;
        Ok((if mirrored { w - 1 - c } else { c }, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Player;

    fn g(w: u32, h: u32) -> BoardGeometry {
        BoardGeometry::new(w, h).unwrap()
    }

    #[test]
    fn score_helpers() {
        let geo = g(7, 6);
        assert_eq!(win_score(geo, 41), 2);
        assert_eq!(final_ply(geo, 2), Some(41));
        assert_eq!(final_ply(geo, -2), Some(41));
        assert_eq!(final_ply(geo, 0), None);
        let won = Position::from_moves(geo, "1212121").unwrap();
        assert_eq!(terminal_score(&won), -win_score(geo, 7));
    }

    #[test]
    fn empty_board_orders_center_first() {
        let pos = Position::new(g(7, 6)).unwrap();
        assert_eq!(order_moves(&pos, &pos.legal_moves()), vec![3, 2, 4, 1, 5, 0, 6]);
        let pos = Position::new(g(4, 4)).unwrap();
        assert_eq!(order_moves(&pos, &pos.legal_moves()), vec![1, 2, 0, 3]);
    }

    #[test]
    fn threat_creating_move_outranks_center() {
        // X holds two stacked discs in the first column.
        let pos = Position::from_moves(g(7, 6), "1717").unwrap();
        let order = order_moves(&pos, &pos.legal_moves());
        assert_eq!(order[0], 0);
        assert_eq!(order[1], 3);
        assert_eq!(count_threats(&pos.after(0), Player::First), 1);
        assert_eq!(count_threats(&pos.after(3), Player::First), 0);
    }

    #[test]
    fn static_evaluation_cases() {
        let geo = g(7, 6);
        assert_eq!(static_evaluate(&Position::new(geo).unwrap()), None);
        let win_now = Position::from_moves(geo, "121212").unwrap();
        assert_eq!(static_evaluate(&win_now), Some(win_score(geo, 7)));
        // O to move faces X threats on both ends of 2-3-4.
        let double = Position::from_moves(geo, "2737477").unwrap();
        assert_eq!(double.side_to_move(), Player::Second);
        assert_eq!(static_evaluate(&double), Some(-win_score(geo, 9)));
    }

    #[test]
    fn one_move_to_win_scores_maximum() {
        let geo = g(4, 4);
        let pos = Position::from_moves(geo, "121212").unwrap();
        let mut s = Searcher::new(geo, SearchConfig::default(), None);
        assert_eq!(s.solve(&pos).unwrap(), win_score(geo, 7));
        let best = s.best_move(&pos).unwrap();
        assert_eq!(best.column, 0);
        assert_eq!(best.pv, vec![0]);
    }

    #[test]
    fn expired_deadline_times_out() {
        let geo = g(6, 5);
        let pos = Position::new(geo).unwrap();
        let cfg = SearchConfig { deadline: Some(Instant::now()), ..SearchConfig::default() };
        let mut s = Searcher::new(geo, cfg, None);
        assert_eq!(s.solve(&pos), Err(SearchError::Timeout));
    }
}
