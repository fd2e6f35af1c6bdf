//! Symbolic forward and retrograde passes over ply-indexed layers.
//!
//! The forward pass computes `statesᵢ₊₁ = image(statesᵢ ∧ ¬terminalᵢ)`,
//! where `terminalᵢ` holds the positions in which the player who just moved
//! owns a line. The backward pass then classifies every layer for the
//! player to move:
//!
//! ```text
//! winᵢ  = pre(lostᵢ₊₁) ∧ statesᵢ ∧ ¬terminalᵢ
//! drawᵢ = pre(drawᵢ₊₁) ∧ statesᵢ ∧ ¬terminalᵢ ∧ ¬winᵢ
//! lostᵢ = statesᵢ ∧ ¬winᵢ ∧ ¬drawᵢ
//! ```
//!
//! starting from `win_N = ∅`, `draw_N = states_N ∧ ¬terminal_N`,
//! `lost_N = states_N ∧ terminal_N`. Draw sets are never written out.

mod report;

pub use report::{format_count, CountReport, LayerReport, SolveReport, Timing};

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{debug, info};
use num_bigint::BigUint;
use thiserror::Error;

use crate::bdd::{BddError, BddManager, NodeRef, VarSet};
use crate::encoding::{
    intersect_terminals, subtract_terminals, BoardCopy, BoardGeometry, Encoding, EncodingKind, Player, TerminalClauses,
    TransitionRelation,
};
use crate::store::{board_dir, layer_path, load_bdd, save_bdd, BddMeta, LayerRole, StoreError};

/// Name of the marker file present while a solve is incomplete.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("node pool exhausted at ply {ply}: capacity {capacity}, high-water mark {peak}")]
    PoolExhausted { ply: u32, capacity: usize, peak: usize },
    #[error(transparent)]
    Bdd(#[from] BddError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Config(String),
}

/// Resources for one run.
#[derive(Clone, Debug)]
pub struct SolveBudget {
    pub node_capacity: usize,
    /// Stop the forward pass after this ply (counting only).
    pub max_ply: Option<u32>,
    pub out_dir: Option<PathBuf>,
}

impl SolveBudget {
    pub fn new(node_capacity: usize) -> Self {
        SolveBudget { node_capacity, max_ply: None, out_dir: None }
    }
}

/// Forward-pass figures for one ply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerCounts {
    pub ply: u32,
    pub total: BigUint,
    pub terminal: BigUint,
    /// Size of the layer's BDD, terminals included.
    pub nodes: usize,
}

/// Backward-pass figures for one ply, for the player to move.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WdlCounts {
    pub ply: u32,
    pub win: BigUint,
    pub draw: BigUint,
    pub lost: BigUint,
    pub total: BigUint,
    pub terminal: BigUint,
}

impl WdlCounts {
    /// `(won, drawn, lost)` for the first player.
    pub fn first_player(&self) -> (BigUint, BigUint, BigUint) {
        match Player::to_move_at(self.ply) {
            Player::First => (self.win.clone(), self.draw.clone(), self.lost.clone()),
            Player::Second => (self.lost.clone(), self.draw.clone(), self.win.clone()),
        }
    }
}

/// Index into `Solver::lines` of the player who moved last at `ply`.
fn line_owner(ply: u32) -> Option<usize> {
    (ply > 0).then(|| Player::to_move_at(ply).other().index())
}

/// A manager together with the relations and line clauses of one board.
pub struct Solver {
    enc: Encoding,
    m: BddManager,
    tr: TransitionRelation,
    /// Indexed by the player owning the lines. First-player lines appear at
    /// odd plies (held over `S'`), second-player lines at even plies.
    lines: [TerminalClauses; 2],
    started: Instant,
}

impl Solver {
    pub fn new(geometry: BoardGeometry, kind: EncodingKind, node_capacity: usize) -> Result<Self, SolverError> {
        let enc = Encoding::new(geometry, kind);
        let mut m = BddManager::new(node_capacity, enc.num_vars())?;
        let started = Instant::now();
        let tr = TransitionRelation::build(&enc, &mut m)?;
        let first = TerminalClauses::build(&enc, &mut m, Player::First, BoardCopy::Next)?;
        let second = TerminalClauses::build(&enc, &mut m, Player::Second, BoardCopy::Current)?;
        debug!("{geometry} {kind}: {} variables, relation {} nodes", enc.num_vars(), tr.node_count(&m));
        Ok(Solver { enc, m, tr, lines: [first, second], started })
    }

    pub fn encoding(&self) -> &Encoding {
        &self.enc
    }

    pub fn geometry(&self) -> BoardGeometry {
        self.enc.geometry()
    }

    pub fn manager(&self) -> &BddManager {
        &self.m
    }

    pub fn manager_mut(&mut self) -> &mut BddManager {
        &mut self.m
    }

    pub fn transition(&self) -> &TransitionRelation {
        &self.tr
    }

    /// The variables a layer at `ply` is expressed over.
    pub fn layer_vars(&self, ply: u32) -> &VarSet {
        self.tr.vars(BoardCopy::of_ply(ply))
    }

    /// Line clauses for the player who made the last move at `ply`.
    pub fn terminal_clauses(&self, ply: u32) -> Option<&TerminalClauses> {
        line_owner(ply).map(|i| &self.lines[i])
    }

    /// Runs `op`; if the pool runs dry, sweeps and tries once more.
    fn retry<T>(&mut self, ply: u32, op: impl Fn(&mut Self) -> Result<T, BddError>) -> Result<T, SolverError> {
        match op(self) {
            Err(BddError::PoolExhausted { .. }) => {
                self.m.collect_garbage();
                op(self).map_err(|e| self.exhausted(ply, e))
            }
            r => r.map_err(SolverError::from),
        }
    }

    fn exhausted(&self, ply: u32, e: BddError) -> SolverError {
        match e {
            BddError::PoolExhausted { capacity } => {
                SolverError::PoolExhausted { ply, capacity, peak: self.m.stats().peak_allocated }
            }
            e => e.into(),
        }
    }

    /// `states ∧ ¬terminal` for a layer at `ply`.
    pub fn nonterminal(&mut self, states: NodeRef, ply: u32) -> Result<NodeRef, SolverError> {
        self.retry(ply, |s| match line_owner(ply) {
            Some(i) => subtract_terminals(&mut s.m, states, &s.lines[i]),
            None => Ok(s.m.ref_node(states)),
        })
    }

    /// `states ∧ terminal` for a layer at `ply`.
    pub fn terminal(&mut self, states: NodeRef, ply: u32) -> Result<NodeRef, SolverError> {
        self.retry(ply, |s| match line_owner(ply) {
            Some(i) => intersect_terminals(&mut s.m, states, &s.lines[i]),
            None => Ok(NodeRef::FALSE),
        })
    }

    pub fn image(&mut self, states: NodeRef, ply: u32) -> Result<NodeRef, SolverError> {
        self.retry(ply, |s| s.tr.image(&mut s.m, states, ply))
    }

    pub fn preimage(&mut self, target: NodeRef, ply: u32) -> Result<NodeRef, SolverError> {
        self.retry(ply, |s| s.tr.preimage(&mut s.m, target, ply))
    }

    fn binary(
        &mut self,
        ply: u32,
        f: NodeRef,
        g: NodeRef,
        op: fn(&mut BddManager, NodeRef, NodeRef) -> Result<NodeRef, BddError>,
    ) -> Result<NodeRef, SolverError> {
        self.retry(ply, |s| op(&mut s.m, f, g))
    }

    /// Positions in a layer BDD at `ply`.
    pub fn count(&self, f: NodeRef, ply: u32) -> Result<BigUint, SolverError> {
        Ok(self.m.satcount(f, self.layer_vars(ply))?)
    }

    pub fn release(&mut self, f: NodeRef) -> Result<(), SolverError> {
        Ok(self.m.deref_node(f)?)
    }

    /// Computes layers 0 through `max_ply` (capped at the board size),
    /// handing each referenced `statesᵢ` to `on_layer` before releasing it.
    /// Stops early if a layer is empty.
    pub fn forward_pass(
        &mut self,
        max_ply: u32,
        mut on_layer: impl FnMut(&mut Self, &LayerCounts, NodeRef) -> Result<(), SolverError>,
    ) -> Result<Vec<LayerCounts>, SolverError> {
        let last = max_ply.min(self.geometry().max_ply());
        let mut out = Vec::new();
        let mut states = self.retry(0, |s| s.enc.initial_state(&mut s.m))?;
        for ply in 0..=last {
            let nonterm = self.nonterminal(states, ply)?;
            let total = self.count(states, ply)?;
            let terminal = &total - self.count(nonterm, ply)?;
            let counts = LayerCounts { ply, total, terminal, nodes: self.m.node_count(states) };
            debug!(
                "ply {ply}: {} positions, {} terminal, {} nodes, {} allocated",
                counts.total,
                counts.terminal,
                counts.nodes,
                self.m.allocated()
            );
            on_layer(self, &counts, states)?;
            out.push(counts);
            let next = if ply < last { Some(self.image(nonterm, ply)) } else { None };
            self.release(nonterm)?;
            self.release(states)?;
            match next {
                None => break,
                Some(n) => states = n?,
            }
            if states.is_false() {
                break;
            }
        }
        Ok(out)
    }

    /// Retrograde classification from ply `N` down to 0. `load` must return
    /// a referenced `statesᵢ`; `on_solved` receives the referenced `winᵢ`
    /// and `lostᵢ`, which are released afterwards.
    pub fn backward_pass(
        &mut self,
        mut load: impl FnMut(&mut Self, u32) -> Result<NodeRef, SolverError>,
        mut on_solved: impl FnMut(&mut Self, &WdlCounts, NodeRef, NodeRef) -> Result<(), SolverError>,
    ) -> Result<Vec<WdlCounts>, SolverError> {
        let n = self.geometry().max_ply();
        let mut out = Vec::with_capacity(n as usize + 1);
        // (lostᵢ₊₁, drawᵢ₊₁)
        let mut above: Option<(NodeRef, NodeRef)> = None;
        for ply in (0..=n).rev() {
            let states = load(self, ply)?;
            let nonterm = self.nonterminal(states, ply)?;
            let (win, draw) = match above {
                None => (NodeRef::FALSE, self.m.ref_node(nonterm)),
                Some((lost_up, draw_up)) => {
                    let pre_lost = self.preimage(lost_up, ply)?;
                    let win = self.binary(ply, pre_lost, nonterm, BddManager::and)?;
                    self.release(pre_lost)?;
                    let pre_draw = self.preimage(draw_up, ply)?;
                    let open = self.binary(ply, nonterm, win, BddManager::diff)?;
                    let draw = self.binary(ply, pre_draw, open, BddManager::and)?;
                    self.release(pre_draw)?;
                    self.release(open)?;
                    self.release(lost_up)?;
                    self.release(draw_up)?;
                    (win, draw)
                }
            };
            let not_win = self.binary(ply, states, win, BddManager::diff)?;
            let lost = self.binary(ply, not_win, draw, BddManager::diff)?;
            self.release(not_win)?;

            let total = self.count(states, ply)?;
            let counts = WdlCounts {
                ply,
                win: self.count(win, ply)?,
                draw: self.count(draw, ply)?,
                lost: self.count(lost, ply)?,
                terminal: &total - self.count(nonterm, ply)?,
                total,
            };
            debug!(
                "ply {ply}: win {} draw {} lost {} terminal {}",
                counts.win, counts.draw, counts.lost, counts.terminal
            );
            on_solved(self, &counts, win, lost)?;
            out.push(counts);
            self.release(win)?;
            self.release(nonterm)?;
            self.release(states)?;
            above = Some((lost, draw));
        }
        if let Some((lost, draw)) = above {
            self.release(lost)?;
            self.release(draw)?;
        }
        out.reverse();
        Ok(out)
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    fn timing(&self) -> Timing {
        let stats = self.m.stats();
        let wall = self.elapsed().as_secs_f64();
        let gc = stats.gc_time.as_secs_f64();
        Timing { wall_seconds: wall, gc_seconds: gc, gc_share: if wall > 0.0 { gc / wall } else { 0.0 } }
    }
}

/// All layers of a board solved in memory, each BDD held referenced.
pub struct SolvedLayers {
    pub solver: Solver,
    pub states: Vec<NodeRef>,
    pub win: Vec<NodeRef>,
    pub lost: Vec<NodeRef>,
    pub forward: Vec<LayerCounts>,
    pub counts: Vec<WdlCounts>,
}

impl SolvedLayers {
    /// `statesᵢ ∧ ¬winᵢ ∧ ¬lostᵢ`, referenced.
    pub fn draw(&mut self, ply: u32) -> Result<NodeRef, SolverError> {
        let i = ply as usize;
        let (s, w, l) = (self.states[i], self.win[i], self.lost[i]);
        let m = self.solver.manager_mut();
        let a = m.diff(s, w)?;
        let r = m.diff(a, l);
        m.deref_node(a)?;
        Ok(r?)
    }
}

/// Forward and backward pass with every layer kept in memory.
pub fn solve_in_memory(
    geometry: BoardGeometry,
    kind: EncodingKind,
    node_capacity: usize,
) -> Result<SolvedLayers, SolverError> {
    let mut solver = Solver::new(geometry, kind, node_capacity)?;
    let mut states = Vec::new();
    let forward = solver.forward_pass(geometry.max_ply(), |s, _, f| {
        states.push(s.manager_mut().ref_node(f));
        Ok(())
    })?;
    let n = geometry.max_ply() as usize + 1;
    while states.len() < n {
        states.push(NodeRef::FALSE);
    }
    let (mut win, mut lost) = (vec![NodeRef::FALSE; n], vec![NodeRef::FALSE; n]);
    let counts = solver.backward_pass(
        |s, ply| Ok(s.manager_mut().ref_node(states[ply as usize])),
        |s, c, w, l| {
            win[c.ply as usize] = s.manager_mut().ref_node(w);
            lost[c.ply as usize] = s.manager_mut().ref_node(l);
            Ok(())
        },
    )?;
    Ok(SolvedLayers { solver, states, win, lost, forward, counts })
}

/// Counts the positions of every ply (through `budget.max_ply`).
pub fn count_positions(
    geometry: BoardGeometry,
    kind: EncodingKind,
    budget: &SolveBudget,
) -> Result<CountReport, SolverError> {
    let mut solver = Solver::new(geometry, kind, budget.node_capacity)?;
    let max_ply = budget.max_ply.unwrap_or(geometry.max_ply());
    let layers = solver.forward_pass(max_ply, |_, _, _| Ok(()))?;
    let stats = solver.manager().stats();
    let report = CountReport::new(geometry, kind, budget.node_capacity, &layers, &stats, solver.timing());
    info!("{geometry} {kind}: {} positions", report.total);
    Ok(report)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SolverError + '_ {
    move |source| SolverError::Io { path: path.to_path_buf(), source }
}

/// Full pipeline: forward pass writing `states` files, backward pass writing
/// `win` and `lost` files, then `report.json`. Layers are streamed through
/// disk so only a few live in the pool at once. An `INCOMPLETE` marker stays
/// in the board directory if the run aborts.
pub fn solve(geometry: BoardGeometry, kind: EncodingKind, budget: &SolveBudget) -> Result<SolveReport, SolverError> {
    let out = budget.out_dir.as_deref().ok_or_else(|| SolverError::Config("solve needs an output directory".into()))?;
    if budget.max_ply.is_some_and(|p| p < geometry.max_ply()) {
        return Err(SolverError::Config("a solve cannot stop before the last ply".into()));
    }
    let dir = board_dir(out, geometry);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    std::fs::write(&marker, b"solve in progress or aborted\n").map_err(io_err(&marker))?;
    let _ = std::fs::remove_file(dir.join(REPORT_FILE));

    let mut solver = Solver::new(geometry, kind, budget.node_capacity)?;
    let meta = |ply: u32, role: LayerRole, var_count: u32| BddMeta { geometry, kind, ply, role, var_count };
    let var_count = solver.encoding().num_vars();

    let forward = solver.forward_pass(geometry.max_ply(), |s, c, f| {
        save_bdd(
            s.manager(),
            f,
            &meta(c.ply, LayerRole::States, var_count),
            &layer_path(&dir, c.ply, LayerRole::States),
        )?;
        Ok(())
    })?;
    info!("{geometry} {kind}: forward pass done, {} layers", forward.len());
    // Layers past an early exit are empty; they still get files.
    for ply in forward.len() as u32..=geometry.max_ply() {
        save_bdd(
            solver.manager(),
            NodeRef::FALSE,
            &meta(ply, LayerRole::States, var_count),
            &layer_path(&dir, ply, LayerRole::States),
        )?;
    }

    let counts = solver.backward_pass(
        |s, ply| {
            let (_, root) = load_bdd(s.manager_mut(), &layer_path(&dir, ply, LayerRole::States))?;
            Ok(root)
        },
        |s, c, win, lost| {
            save_bdd(
                s.manager(),
                win,
                &meta(c.ply, LayerRole::Win, var_count),
                &layer_path(&dir, c.ply, LayerRole::Win),
            )?;
            save_bdd(
                s.manager(),
                lost,
                &meta(c.ply, LayerRole::Lost, var_count),
                &layer_path(&dir, c.ply, LayerRole::Lost),
            )?;
            Ok(())
        },
    )?;

    let stats = solver.manager().stats();
    let report = SolveReport::new(geometry, kind, budget.node_capacity, &forward, &counts, &stats, solver.timing());
    let path = dir.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, json + "\n").map_err(io_err(&path))?;
    std::fs::remove_file(&marker).map_err(io_err(&marker))?;
    info!("{geometry} {kind}: solved, ply-0 value {}", report.root_value);
    Ok(report)
}
