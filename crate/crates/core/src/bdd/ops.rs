use super::manager::BddManager;
use super::{NodeRef, Result, Var, VarSet};

/// Binary connectives supported by [`BddManager::apply`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    /// `f ∧ ¬g`
    Diff,
}

impl BinOp {
    pub const ALL: [BinOp; 4] = [BinOp::And, BinOp::Or, BinOp::Xor, BinOp::Diff];

    fn code(self) -> u32 {
        match self {
            BinOp::And => 1,
            BinOp::Or => 2,
            BinOp::Xor => 3,
            BinOp::Diff => 4,
        }
    }

    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            BinOp::And => a && b,
            BinOp::Or => a || b,
            BinOp::Xor => a ^ b,
            BinOp::Diff => a && !b,
        }
    }

    fn commutative(self) -> bool {
        !matches!(self, BinOp::Diff)
    }
}

const OP_NOT: u32 = 5;
const OP_EXISTS: u32 = 6;
const OP_RELPROD: u32 = 7;

const F: u32 = 0;
const T: u32 = 1;

impl BddManager {
    /// Runs a recursive kernel, discarding its scratch protection afterwards
    /// and handing the caller one reference to the result.
    fn run_top(&mut self, kernel: impl FnOnce(&mut Self) -> Result<u32>) -> Result<NodeRef> {
        let base = self.refstack.len();
        let r = kernel(self);
        self.refstack.truncate(base);
        Ok(self.ref_node(NodeRef(r?)))
    }

    /// The single-variable function `x_i`.
    pub fn mk_var(&mut self, i: Var) -> Result<NodeRef> {
        self.literal(i, true)
    }

    /// `x_i` or `¬x_i`.
    pub fn literal(&mut self, i: Var, positive: bool) -> Result<NodeRef> {
        self.check_var(i)?;
        let (lo, hi) = if positive { (F, T) } else { (T, F) };
        self.run_top(|m| m.mk_node(i, lo, hi))
    }

    /// Conjunction of literals. Contradictory literals give `FALSE`.
    pub fn cube(&mut self, lits: &[(Var, bool)]) -> Result<NodeRef> {
        let mut lits = lits.to_vec();
        for &(v, _) in &lits {
            self.check_var(v)?;
        }
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0].0 == w[1].0) {
            return Ok(NodeRef::FALSE);
        }
        self.run_top(|m| {
            let mut acc = T;
            for &(v, pos) in lits.iter().rev() {
                acc = if pos { m.mk_node(v, F, acc)? } else { m.mk_node(v, acc, F)? };
            }
            Ok(acc)
        })
    }

    pub fn apply(&mut self, op: BinOp, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.run_top(|m| m.apply_rec(op, f.0, g.0))
    }

    pub fn and(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.apply(BinOp::And, f, g)
    }

    pub fn or(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.apply(BinOp::Or, f, g)
    }

    pub fn xor(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.apply(BinOp::Xor, f, g)
    }

    /// `f ∧ ¬g`
    pub fn diff(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.apply(BinOp::Diff, f, g)
    }

    /// `f ↔ g`
    pub fn iff(&mut self, f: NodeRef, g: NodeRef) -> Result<NodeRef> {
        self.run_top(|m| {
            let x = m.apply_rec(BinOp::Xor, f.0, g.0)?;
            m.refstack.push(x);
            m.not_rec(x)
        })
    }

    pub fn not(&mut self, f: NodeRef) -> Result<NodeRef> {
        self.run_top(|m| m.not_rec(f.0))
    }

    /// `∃ vars. f`
    pub fn exists(&mut self, f: NodeRef, vars: &VarSet) -> Result<NodeRef> {
        if vars.is_empty() {
            return Ok(self.ref_node(f));
        }
        let id = self.intern_set(vars)?;
        self.run_top(|m| m.exists_rec(f.0, id))
    }

    /// Relational product `∃ vars. f ∧ g`, computed in one pass.
    pub fn and_exists(&mut self, f: NodeRef, g: NodeRef, vars: &VarSet) -> Result<NodeRef> {
        if vars.is_empty() {
            return self.and(f, g);
        }
        let id = self.intern_set(vars)?;
        self.run_top(|m| m.relprod_rec(f.0, g.0, id))
    }

    #[inline]
    fn cofactors(&self, n: u32, v: Var) -> (u32, u32) {
        let node = self.nodes[n as usize];
        if node.var == v {
            (node.low, node.high)
        } else {
            (n, n)
        }
    }

    pub(crate) fn apply_rec(&mut self, op: BinOp, mut f: u32, mut g: u32) -> Result<u32> {
        match op {
            BinOp::And => {
                if f == F || g == F {
                    return Ok(F);
                }
                if f == T || f == g {
                    return Ok(g);
                }
                if g == T {
                    return Ok(f);
                }
            }
            BinOp::Or => {
                if f == T || g == T {
                    return Ok(T);
                }
                if f == F || f == g {
                    return Ok(g);
                }
                if g == F {
                    return Ok(f);
                }
            }
            BinOp::Xor => {
                if f == g {
                    return Ok(F);
                }
                if f == F {
                    return Ok(g);
                }
                if g == F {
                    return Ok(f);
                }
                if f == T {
                    return self.not_rec(g);
                }
                if g == T {
                    return self.not_rec(f);
                }
            }
            BinOp::Diff => {
                if f == F || g == T || f == g {
                    return Ok(F);
                }
                if g == F {
                    return Ok(f);
                }
                if f == T {
                    return self.not_rec(g);
                }
            }
        }
        if op.commutative() && f > g {
            std::mem::swap(&mut f, &mut g);
        }
        if let Some(r) = self.cache_lookup(op.code(), f, g, 0) {
            return Ok(r);
        }
        let v = self.var_of(f).min(self.var_of(g));
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let lo = self.apply_rec(op, f0, g0)?;
        self.refstack.push(lo);
        let hi = self.apply_rec(op, f1, g1)?;
        self.refstack.push(hi);
        let r = self.mk_node(v, lo, hi)?;
        self.refstack.truncate(self.refstack.len() - 2);
        self.cache_insert(op.code(), f, g, 0, r);
        Ok(r)
    }

    pub(crate) fn not_rec(&mut self, f: u32) -> Result<u32> {
        if f < 2 {
            return Ok(f ^ 1);
        }
        if let Some(r) = self.cache_lookup(OP_NOT, f, 0, 0) {
            return Ok(r);
        }
        let n = self.nodes[f as usize];
        let lo = self.not_rec(n.low)?;
        self.refstack.push(lo);
        let hi = self.not_rec(n.high)?;
        self.refstack.push(hi);
        let r = self.mk_node(n.var, lo, hi)?;
        self.refstack.truncate(self.refstack.len() - 2);
        self.cache_insert(OP_NOT, f, 0, 0, r);
        Ok(r)
    }

    fn exists_rec(&mut self, f: u32, set: u32) -> Result<u32> {
        if f < 2 {
            return Ok(f);
        }
        let n = self.nodes[f as usize];
        if n.var > self.sets[set as usize].last {
            return Ok(f);
        }
        if let Some(r) = self.cache_lookup(OP_EXISTS, f, 0, set + 1) {
            return Ok(r);
        }
        let quantified = self.sets[set as usize].member[n.var as usize];
        let lo = self.exists_rec(n.low, set)?;
        let r = if quantified && lo == T {
            T
        } else {
            self.refstack.push(lo);
            let hi = self.exists_rec(n.high, set)?;
            self.refstack.push(hi);
            let r = if quantified { self.apply_rec(BinOp::Or, lo, hi)? } else { self.mk_node(n.var, lo, hi)? };
            self.refstack.truncate(self.refstack.len() - 2);
            r
        };
        self.cache_insert(OP_EXISTS, f, 0, set + 1, r);
        Ok(r)
    }

    fn relprod_rec(&mut self, mut f: u32, mut g: u32, set: u32) -> Result<u32> {
        if f == F || g == F {
            return Ok(F);
        }
        if f == T && g == T {
            return Ok(T);
        }
        if f == T || f == g {
            return self.exists_rec(g, set);
        }
        if g == T {
            return self.exists_rec(f, set);
        }
        let v = self.var_of(f).min(self.var_of(g));
        if v > self.sets[set as usize].last {
            return self.apply_rec(BinOp::And, f, g);
        }
        if f > g {
            std::mem::swap(&mut f, &mut g);
        }
        if let Some(r) = self.cache_lookup(OP_RELPROD, f, g, set + 1) {
            return Ok(r);
        }
        let quantified = self.sets[set as usize].member[v as usize];
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let lo = self.relprod_rec(f0, g0, set)?;
        let r = if quantified && lo == T {
            T
        } else {
            self.refstack.push(lo);
            let hi = self.relprod_rec(f1, g1, set)?;
            self.refstack.push(hi);
            let r = if quantified { self.apply_rec(BinOp::Or, lo, hi)? } else { self.mk_node(v, lo, hi)? };
            self.refstack.truncate(self.refstack.len() - 2);
            r
        };
        self.cache_insert(OP_RELPROD, f, g, set + 1, r);
        Ok(r)
    }
}
