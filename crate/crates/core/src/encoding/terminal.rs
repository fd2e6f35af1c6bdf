use crate::bdd::{BddManager, NodeRef, Result, Var};

use super::{and_all, BoardCopy, Encoding, Player};

/// One BDD per four-cell window, each true when `player` fills that window.
pub struct TerminalClauses {
    player: Player,
    copy: BoardCopy,
    clauses: Vec<NodeRef>,
}

impl TerminalClauses {
    pub fn build(enc: &Encoding, m: &mut BddManager, player: Player, copy: BoardCopy) -> Result<Self> {
        let windows = enc.geometry().windows();
        let mut clauses = Vec::with_capacity(windows.len());
        for window in windows {
            let clause = if enc.is_compressed() {
                compressed_clause(enc, m, player, copy, &window)?
            } else {
                let mut lits = Vec::with_capacity(8);
                for &(c, r) in &window {
                    lits.push((enc.occupancy_var(c, r, player, copy), true));
                    lits.push((enc.occupancy_var(c, r, player.other(), copy), false));
                }
                m.cube(&lits)?
            };
            clauses.push(clause);
        }
        Ok(TerminalClauses { player, copy, clauses })
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn copy(&self) -> BoardCopy {
        self.copy
    }

    pub fn clauses(&self) -> &[NodeRef] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn release(self, m: &mut BddManager) -> Result<()> {
        for c in self.clauses {
            m.deref_node(c)?;
        }
        Ok(())
    }
}

/// In the compressed layout a cell holds a disc iff some bit above it in the
/// column is set, so each column of the window contributes its literals plus
/// one "something above the highest window cell" disjunction.
fn compressed_clause(
    enc: &Encoding,
    m: &mut BddManager,
    player: Player,
    copy: BoardCopy,
    window: &[(u32, u32); 4],
) -> Result<NodeRef> {
    let h = enc.geometry().height();
    let mut cols: Vec<u32> = window.iter().map(|&(c, _)| c).collect();
    cols.dedup();
    let mut parts = Vec::new();
    for col in cols {
        let rows: Vec<u32> = window.iter().filter(|&&(c, _)| c == col).map(|&(_, r)| r).collect();
        let top = *rows.iter().max().unwrap();
        let lits: Vec<(Var, bool)> =
            rows.iter().map(|&r| (enc.cell_bit(col, r, copy), player == Player::First)).collect();
        parts.push(m.cube(&lits)?);
        let mut above = Vec::new();
        for r in top + 1..=h {
            above.push(m.mk_var(enc.cell_bit(col, r, copy))?);
        }
        parts.push(super::or_all(m, above)?);
    }
    and_all(m, parts)
}

/// `states ∧ ¬(c₁ ∨ … ∨ cₙ)`, by subtracting one clause at a time.
pub fn subtract_terminals(m: &mut BddManager, states: NodeRef, clauses: &TerminalClauses) -> Result<NodeRef> {
    let mut acc = m.ref_node(states);
    for &c in clauses.clauses() {
        let next = m.diff(acc, c);
        m.deref_node(acc)?;
        acc = next?;
    }
    Ok(acc)
}

/// `states ∧ (c₁ ∨ … ∨ cₙ)`, accumulated clause by clause.
pub fn intersect_terminals(m: &mut BddManager, states: NodeRef, clauses: &TerminalClauses) -> Result<NodeRef> {
    let mut acc = NodeRef::FALSE;
    for &c in clauses.clauses() {
        let hit = match m.and(states, c) {
            Ok(h) => h,
            Err(e) => {
                m.deref_node(acc)?;
                return Err(e);
            }
        };
        let next = m.or(acc, hit);
        m.deref_node(hit)?;
        m.deref_node(acc)?;
        acc = next?;
    }
    Ok(acc)
}
