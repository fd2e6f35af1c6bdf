//! Random Boolean formulas with a direct evaluator, for checking BDD
//! operations against truth tables.

use c4_core::bdd::{BddError, BddManager, BinOp, NodeRef};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random Boolean formula over `n` variables.
#[derive(Clone, Debug)]
pub enum Expr {
    Const(bool),
    Var(u32),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn random(rng: &mut ChaCha8Rng, n: u32, depth: u32) -> Expr {
        if depth == 0 || rng.random_range(0..10) < 2 {
            return if rng.random_range(0..20) == 0 {
                Expr::Const(rng.random())
            } else {
                Expr::Var(rng.random_range(0..n))
            };
        }
        if rng.random_range(0..6) == 0 {
            return Expr::Not(Box::new(Expr::random(rng, n, depth - 1)));
        }
        let op = BinOp::ALL[rng.random_range(0..4)];
        Expr::Bin(op, Box::new(Expr::random(rng, n, depth - 1)), Box::new(Expr::random(rng, n, depth - 1)))
    }

    pub fn eval(&self, a: usize) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Var(v) => a >> v & 1 == 1,
            Expr::Not(e) => !e.eval(a),
            Expr::Bin(op, l, r) => {
                let (x, y) = (l.eval(a), r.eval(a));
                match op {
                    BinOp::And => x && y,
                    BinOp::Or => x || y,
                    BinOp::Xor => x != y,
                    BinOp::Diff => x && !y,
                }
            }
        }
    }

    /// A syntactically different formula for the same function.
    pub fn rewrite(&self) -> Expr {
        let not = |e: Expr| Expr::Not(Box::new(e));
        let bin = |op, l: Expr, r: Expr| Expr::Bin(op, Box::new(l), Box::new(r));
        match self {
            Expr::Const(b) => not(Expr::Const(!b)),
            Expr::Var(v) => not(not(Expr::Var(*v))),
            Expr::Not(e) => not(e.rewrite()),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.rewrite(), r.rewrite());
                match op {
                    BinOp::And => not(bin(BinOp::Or, not(r), not(l))),
                    BinOp::Or => not(bin(BinOp::And, not(r), not(l))),
                    BinOp::Xor => bin(BinOp::Or, bin(BinOp::Diff, r.clone(), l.clone()), bin(BinOp::Diff, l, r)),
                    BinOp::Diff => bin(BinOp::And, not(r), l),
                }
            }
        }
    }

    pub fn build(&self, m: &mut BddManager) -> Result<NodeRef, BddError> {
        match self {
            Expr::Const(true) => Ok(NodeRef::TRUE),
            Expr::Const(false) => Ok(NodeRef::FALSE),
            Expr::Var(v) => m.mk_var(*v),
            Expr::Not(e) => {
                let x = e.build(m)?;
                let r = m.not(x);
                m.deref_node(x)?;
                r
            }
            Expr::Bin(op, l, r) => {
                let x = l.build(m)?;
                let y = r.build(m)?;
                let out = m.apply(*op, x, y);
                m.deref_node(x)?;
                m.deref_node(y)?;
                out
            }
        }
    }
}

pub fn table(n: u32, f: impl FnMut(usize) -> bool) -> Vec<bool> {
    (0..1usize << n).map(f).collect()
}

pub fn bdd_table(m: &BddManager, f: NodeRef, n: u32) -> Vec<bool> {
    let mut a = vec![false; n as usize];
    table(n, |i| {
        for (v, slot) in a.iter_mut().enumerate() {
            *slot = i >> v & 1 == 1;
        }
        m.eval(f, &a)
    })
}

pub fn exists_table(t: &[bool], vars: &[u32]) -> Vec<bool> {
    let mut t = t.to_vec();
    for &v in vars {
        let bit = 1usize << v;
        for i in 0..t.len() {
            t[i] = t[i & !bit] || t[i | bit];
        }
    }
    t
}
