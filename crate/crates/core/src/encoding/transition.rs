use crate::bdd::{BddManager, NodeRef, Result, Var, VarSet};

use super::{and_all, or_all, BoardCopy, Encoding, Player};

/// Move relations, one BDD per (player, column), in both orientations.
///
/// `forward` relates a board over `S` to its successor over `S'`;
/// `mirrored` is the same relation with the roles of the copies swapped.
pub struct TransitionRelation {
    forward: [Vec<NodeRef>; 2],
    mirrored: [Vec<NodeRef>; 2],
    current_vars: VarSet,
    next_vars: VarSet,
}

fn var_eq(m: &mut BddManager, a: Var, b: Var) -> Result<NodeRef> {
    let (a, b) = (a.min(b), a.max(b));
    let nb = m.literal(b, false)?;
    let pb = m.literal(b, true)?;
    let r = m.make_node(a, nb, pb);
    m.deref_node(nb)?;
    m.deref_node(pb)?;
    r
}

fn frame(m: &mut BddManager, pairs: impl IntoIterator<Item = (Var, Var)>) -> Result<NodeRef> {
    let mut pairs: Vec<(Var, Var)> = pairs.into_iter().collect();
    // Conjoin from the bottom of the order up so every step extends the chain.
    pairs.sort_unstable_by(|a, b| b.cmp(a));
    let mut parts = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        parts.push(var_eq(m, a, b)?);
    }
    and_all(m, parts)
}

fn build_column(enc: &Encoding, m: &mut BddManager, player: Player, col: u32, from: BoardCopy) -> Result<NodeRef> {
    let to = from.other();
    let geo = enc.geometry();
    let h = geo.height();

    let mut parts = Vec::new();
    let others = (0..geo.width())
        .filter(|&c| c != col)
        .flat_map(|c| enc.column_vars(c, from).into_iter().zip(enc.column_vars(c, to)));
    parts.push(frame(m, others.collect::<Vec<_>>())?);
    parts.push(m.cube(&[(enc.stm_var(from), player == Player::Second), (enc.stm_var(to), player == Player::First)])?);

    let mut drops = Vec::new();
    if enc.is_compressed() {
        let bit = |r: u32, copy: BoardCopy| enc.cell_bit(col, r, copy);
        // The marker sits at row k and moves up to k + 1.
        for k in 0..h {
            let mut lits = vec![(bit(k, from), true)];
            lits.extend((k + 1..=h).map(|r| (bit(r, from), false)));
            lits.push((bit(k, to), player == Player::First));
            lits.push((bit(k + 1, to), true));
            lits.extend((k + 2..=h).map(|r| (bit(r, to), false)));
            let cube = m.cube(&lits)?;
            let below = frame(m, (0..k).map(|r| (bit(r, from), bit(r, to))))?;
            drops.push(and_all(m, vec![cube, below])?);
        }
    } else {
        let occ = |r: u32, p: Player, copy: BoardCopy| enc.occupancy_var(col, r, p, copy);
        let (me, them) = (player, player.other());
        for r in 0..h {
            let mut pieces = vec![m.cube(&[
                (occ(r, me, from), false),
                (occ(r, them, from), false),
                (occ(r, me, to), true),
                (occ(r, them, to), false),
            ])?];
            if r > 0 {
                let a = m.mk_var(occ(r - 1, Player::First, from))?;
                let b = m.mk_var(occ(r - 1, Player::Second, from))?;
                pieces.push(or_all(m, vec![a, b])?);
            }
            let rest = (0..h)
                .filter(|&x| x != r)
                .flat_map(|x| [Player::First, Player::Second].map(|p| (occ(x, p, from), occ(x, p, to))));
            pieces.push(frame(m, rest.collect::<Vec<_>>())?);
            drops.push(and_all(m, pieces)?);
        }
    }
    parts.push(or_all(m, drops)?);
    and_all(m, parts)
}

impl TransitionRelation {
    pub fn build(enc: &Encoding, m: &mut BddManager) -> Result<Self> {
        let mut forward = [Vec::new(), Vec::new()];
        let mut mirrored = [Vec::new(), Vec::new()];
        for player in [Player::First, Player::Second] {
            for col in 0..enc.geometry().width() {
                forward[player.index()].push(build_column(enc, m, player, col, BoardCopy::Current)?);
                mirrored[player.index()].push(build_column(enc, m, player, col, BoardCopy::Next)?);
            }
        }
        Ok(TransitionRelation {
            forward,
            mirrored,
            current_vars: enc.copy_vars(BoardCopy::Current),
            next_vars: enc.copy_vars(BoardCopy::Next),
        })
    }

    /// Per-column relations for `player` moving from a board over `from`.
    pub fn relation(&self, player: Player, from: BoardCopy) -> &[NodeRef] {
        match from {
            BoardCopy::Current => &self.forward[player.index()],
            BoardCopy::Next => &self.mirrored[player.index()],
        }
    }

    pub fn vars(&self, copy: BoardCopy) -> &VarSet {
        match copy {
            BoardCopy::Current => &self.current_vars,
            BoardCopy::Next => &self.next_vars,
        }
    }

    /// Successors of `states` (positions at `ply`). The result lives over the
    /// other copy, i.e. the copy of `ply + 1`.
    pub fn image(&self, m: &mut BddManager, states: NodeRef, ply: u32) -> Result<NodeRef> {
        let from = BoardCopy::of_ply(ply);
        let rels = self.relation(Player::to_move_at(ply), from);
        let mut parts = Vec::with_capacity(rels.len());
        for &rel in rels {
            match m.and_exists(states, rel, self.vars(from)) {
                Ok(r) => parts.push(r),
                Err(e) => {
                    for p in parts {
                        m.deref_node(p)?;
                    }
                    return Err(e);
                }
            }
        }
        or_all(m, parts)
    }

    /// Positions at `ply` with at least one move into `target` (a set of
    /// positions at `ply + 1`).
    pub fn preimage(&self, m: &mut BddManager, target: NodeRef, ply: u32) -> Result<NodeRef> {
        let from = BoardCopy::of_ply(ply);
        let rels = self.relation(Player::to_move_at(ply), from);
        let mut parts = Vec::with_capacity(rels.len());
        for &rel in rels {
            match m.and_exists(rel, target, self.vars(from.other())) {
                Ok(r) => parts.push(r),
                Err(e) => {
                    for p in parts {
                        m.deref_node(p)?;
                    }
                    return Err(e);
                }
            }
        }
        or_all(m, parts)
    }

    /// The disjunction over all columns, as a single BDD.
    pub fn monolithic(&self, m: &mut BddManager, player: Player, from: BoardCopy) -> Result<NodeRef> {
        let rels: Vec<NodeRef> = self.relation(player, from).to_vec();
        let refs = rels.into_iter().map(|r| m.ref_node(r)).collect();
        or_all(m, refs)
    }

    pub fn node_count(&self, m: &BddManager) -> usize {
        let all: Vec<NodeRef> = self.forward.iter().chain(self.mirrored.iter()).flatten().copied().collect();
        m.shared_node_count(&all)
    }

    pub fn release(self, m: &mut BddManager) -> Result<()> {
        for r in self.forward.into_iter().chain(self.mirrored).flatten() {
            m.deref_node(r)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashSet};

    use super::*;
    use crate::encoding::{BoardGeometry, EncodingKind};
    use crate::search::Position;

    /// All (assignment over both copies) pairs satisfying `rel`, decoded.
    fn decode_pairs(enc: &Encoding, m: &BddManager, rel: NodeRef, from: BoardCopy) -> BTreeSet<(u64, u64)> {
        let n = enc.num_vars();
        assert!(n <= 24);
        let mut out = BTreeSet::new();
        for bits in 0u32..(1 << n) {
            let a: Vec<bool> = (0..n).map(|i| bits & (1 << i) != 0).collect();
            if !m.eval(rel, &a) {
                continue;
            }
            let p = enc.assignment_to_position(&a, from);
            let q = enc.assignment_to_position(&a, from.other());
            if let (Some(p), Some(q)) = (p, q) {
                out.insert((p.key(), q.key()));
            }
        }
        out
    }

    /// (position key, successor key) pairs.
    type Moves = BTreeSet<(u64, u64)>;

    fn explicit_moves(geo: BoardGeometry) -> (Moves, Moves) {
        // Every reachable board, terminal or not, paired with each drop.
        let mut by_player = (BTreeSet::new(), BTreeSet::new());
        let mut seen = HashSet::new();
        let mut stack = vec![Position::new(geo).unwrap()];
        while let Some(p) = stack.pop() {
            if !seen.insert(p.key()) {
                continue;
            }
            for c in 0..geo.width() {
                if p.can_play(c) {
                    let q = p.after(c);
                    let set = match p.side_to_move() {
                        Player::First => &mut by_player.0,
                        Player::Second => &mut by_player.1,
                    };
                    set.insert((p.key(), q.key()));
                    stack.push(q);
                }
            }
        }
        by_player
    }

    #[test]
    fn relation_matches_explicit_move_graph_on_2x2() {
        let geo = BoardGeometry::new(2, 2).unwrap();
        let (first, second) = explicit_moves(geo);
        let sources: HashSet<u64> = first.iter().chain(&second).map(|&(p, _)| p).collect();
        for kind in EncodingKind::ALL {
            let enc = Encoding::new(geo, kind);
            let mut m = BddManager::new(1 << 14, enc.num_vars()).unwrap();
            let tr = TransitionRelation::build(&enc, &mut m).unwrap();
            for from in [BoardCopy::Current, BoardCopy::Next] {
                let r1 = tr.monolithic(&mut m, Player::First, from).unwrap();
                let r2 = tr.monolithic(&mut m, Player::Second, from).unwrap();
                // The relation also covers well-formed but unreachable
                // boards, so only pairs from reachable boards are compared.
                let reachable = |set: BTreeSet<(u64, u64)>| -> BTreeSet<(u64, u64)> {
                    set.into_iter().filter(|(p, _)| sources.contains(p)).collect()
                };
                assert_eq!(reachable(decode_pairs(&enc, &m, r1, from)), first, "{kind} {from:?}");
                assert_eq!(reachable(decode_pairs(&enc, &m, r2, from)), second, "{kind} {from:?}");
            }
            m.audit().unwrap();
        }
    }

    #[test]
    fn mirrored_relation_swaps_copies() {
        for kind in EncodingKind::ALL {
            let geo = if kind == EncodingKind::Compressed {
                BoardGeometry::new(3, 2).unwrap()
            } else {
                BoardGeometry::new(2, 2).unwrap()
            };
            let enc = Encoding::new(geo, kind);
            let mut m = BddManager::new(1 << 14, enc.num_vars()).unwrap();
            let tr = TransitionRelation::build(&enc, &mut m).unwrap();
            let n = enc.num_vars() as usize;
            let swap = |a: &[bool]| -> Vec<bool> { (0..n).map(|i| a[i ^ 1]).collect() };
            for player in [Player::First, Player::Second] {
                let f = tr.monolithic(&mut m, player, BoardCopy::Current).unwrap();
                let g = tr.monolithic(&mut m, player, BoardCopy::Next).unwrap();
                for bits in 0u64..(1 << n) {
                    let a: Vec<bool> = (0..n).map(|i| bits & (1 << i) != 0).collect();
                    assert_eq!(m.eval(f, &a), m.eval(g, &swap(&a)));
                }
            }
        }
    }

    /// Moves every node one level between copies (`S` to `S'` or back).
    fn rename(m: &mut BddManager, f: NodeRef, to: BoardCopy) -> NodeRef {
        let mut map = std::collections::HashMap::new();
        map.insert(0u32, NodeRef::FALSE);
        map.insert(1u32, NodeRef::TRUE);
        let nodes = m.topological_nodes(f);
        for (idx, var, lo, hi) in nodes {
            let v = match to {
                BoardCopy::Next => var | 1,
                BoardCopy::Current => var & !1,
            };
            let n = m.make_node(v, map[&lo], map[&hi]).unwrap();
            map.insert(idx, n);
        }
        m.ref_node(map[&f.index()])
    }

    #[test]
    fn mirrored_preimage_equals_rename_reference() {
        for (w, h) in [(3, 3), (2, 3), (3, 2)] {
            let geo = BoardGeometry::new(w, h).unwrap();
            for kind in EncodingKind::ALL {
                let enc = Encoding::new(geo, kind);
                let mut m = BddManager::new(1 << 18, enc.num_vars()).unwrap();
                let tr = TransitionRelation::build(&enc, &mut m).unwrap();
                let mut layer = enc.initial_state(&mut m).unwrap();
                let mut layers = vec![layer];
                for ply in 0..geo.max_ply() {
                    layer = tr.image(&mut m, layer, ply).unwrap();
                    layers.push(layer);
                }
                // Odd plies use the mirrored relation; compare with renaming
                // into the forward orientation.
                for ply in (1..geo.max_ply()).step_by(2) {
                    let target = layers[ply as usize + 1];
                    let direct = tr.preimage(&mut m, target, ply).unwrap();
                    let target_next = rename(&mut m, target, BoardCopy::Next);
                    let rel = tr.monolithic(&mut m, Player::Second, BoardCopy::Current).unwrap();
                    let pre = m.and_exists(rel, target_next, tr.vars(BoardCopy::Next)).unwrap();
                    let reference = rename(&mut m, pre, BoardCopy::Next);
                    assert_eq!(direct, reference, "{geo} {kind} ply {ply}");
                }
            }
        }
    }

    #[test]
    fn image_of_initial_state_has_one_child_per_column() {
        for kind in EncodingKind::ALL {
            let enc = Encoding::new(BoardGeometry::new(7, 6).unwrap(), kind);
            let mut m = BddManager::new(1 << 16, enc.num_vars()).unwrap();
            let tr = TransitionRelation::build(&enc, &mut m).unwrap();
            let init = enc.initial_state(&mut m).unwrap();
            let next = tr.image(&mut m, init, 0).unwrap();
            let n = m.satcount(next, &enc.copy_vars(BoardCopy::Next)).unwrap();
            assert_eq!(n, 7u32.into());
        }
    }

    #[test]
    fn full_column_blocks_its_move() {
        let geo = BoardGeometry::new(4, 4).unwrap();
        let pos = Position::from_moves(geo, "1111").unwrap();
        for kind in EncodingKind::ALL {
            let enc = Encoding::new(geo, kind);
            let mut m = BddManager::new(1 << 16, enc.num_vars()).unwrap();
            let tr = TransitionRelation::build(&enc, &mut m).unwrap();
            // Build the singleton {pos} over S from its assignment.
            let a = enc.position_to_assignment(&pos).unwrap();
            let lits: Vec<(Var, bool)> =
                enc.copy_vars(BoardCopy::Current).vars().iter().map(|&v| (v, a[v as usize])).collect();
            let single = m.cube(&lits).unwrap();
            let next = tr.image(&mut m, single, pos.ply()).unwrap();
            let n = m.satcount(next, &enc.copy_vars(BoardCopy::Next)).unwrap();
            assert_eq!(n, 3u32.into(), "{kind}");
        }
    }
}
