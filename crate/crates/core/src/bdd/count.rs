use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::manager::BddManager;
use super::{BddError, NodeRef, Result, Var, VarSet};

impl BddManager {
    /// Number of assignments to exactly the variables of `vars` that satisfy
    /// `f`. Every variable `f` tests must belong to `vars`.
    pub fn satcount(&self, f: NodeRef, vars: &VarSet) -> Result<BigUint> {
        let mut rank = vec![u32::MAX; self.num_vars() as usize];
        for (i, &v) in vars.vars().iter().enumerate() {
            self.check_var(v)?;
            rank[v as usize] = i as u32;
        }
        let n = vars.len() as u32;
        let level = |m: &Self, x: u32| -> u32 {
            if x < 2 {
                n
            } else {
                rank[m.var_of(x) as usize]
            }
        };
        if !f.is_terminal() && level(self, f.0) == u32::MAX {
            return Err(BddError::DependsOutsideVarSet { var: self.var_of(f.0) });
        }

        // Post-order walk with an explicit stack; memo holds counts relative
        // to each node's own level.
        let mut memo: HashMap<u32, BigUint> = HashMap::new();
        memo.insert(0, BigUint::zero());
        memo.insert(1, BigUint::one());
        let mut stack = vec![(f.0, false)];
        while let Some((x, expanded)) = stack.pop() {
            if memo.contains_key(&x) {
                continue;
            }
            let node = self.nodes[x as usize];
            if !expanded {
                stack.push((x, true));
                for c in [node.low, node.high] {
                    if c >= 2 && level(self, c) == u32::MAX {
                        return Err(BddError::DependsOutsideVarSet { var: self.var_of(c) });
                    }
                    if !memo.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let lx = level(self, x);
            let part = |c: u32| -> BigUint { &memo[&c] << (level(self, c) - lx - 1) as usize };
            let total = part(node.low) + part(node.high);
            memo.insert(x, total);
        }
        Ok(&memo[&f.0] << level(self, f.0) as usize)
    }

    /// Distinct nodes reachable from `f`, terminals included.
    pub fn node_count(&self, f: NodeRef) -> usize {
        self.shared_node_count(&[f])
    }

    /// Distinct nodes reachable from any of `roots`, terminals included.
    pub fn shared_node_count(&self, roots: &[NodeRef]) -> usize {
        let mut seen = vec![0u64; self.capacity().div_ceil(64)];
        let mut stack: Vec<u32> = roots.iter().map(|r| r.0).collect();
        let mut count = 0;
        while let Some(x) = stack.pop() {
            let i = x as usize;
            if seen[i >> 6] & (1 << (i & 63)) != 0 {
                continue;
            }
            seen[i >> 6] |= 1 << (i & 63);
            count += 1;
            if x >= 2 {
                let n = self.nodes[i];
                stack.push(n.low);
                stack.push(n.high);
            }
        }
        count
    }

    /// Follows the assignment from the root to a terminal. `assignment` is
    /// indexed by variable id.
    pub fn eval(&self, f: NodeRef, assignment: &[bool]) -> bool {
        let mut x = f.0;
        while x >= 2 {
            let n = self.nodes[x as usize];
            x = if assignment[n.var as usize] { n.high } else { n.low };
        }
        x == 1
    }

    /// Variables tested anywhere in `f`.
    pub fn support(&self, f: NodeRef) -> VarSet {
        let mut seen = std::collections::HashSet::new();
        let mut vars = Vec::new();
        let mut stack = vec![f.0];
        while let Some(x) = stack.pop() {
            if x < 2 || !seen.insert(x) {
                continue;
            }
            let n = self.nodes[x as usize];
            vars.push(n.var);
            stack.push(n.low);
            stack.push(n.high);
        }
        VarSet::from_unsorted(vars)
    }

    /// Debug dump: a `digraph` with one `id var low high` comment line per node.
    pub fn dump_dot(&self, f: NodeRef) -> String {
        let mut out = String::from("digraph bdd {\n");
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![f.0];
        while let Some(x) = stack.pop() {
            if x < 2 || !seen.insert(x) {
                continue;
            }
            let n = self.nodes[x as usize];
            let _ = writeln!(out, "  // {} {} {} {}", x, n.var, n.low, n.high);
            let _ = writeln!(out, "  n{x} [label=\"x{}\"];", n.var);
            let _ = writeln!(out, "  n{x} -> n{} [style=dashed];", n.low);
            let _ = writeln!(out, "  n{x} -> n{};", n.high);
            stack.push(n.low);
            stack.push(n.high);
        }
        out.push_str("  n0 [shape=box,label=\"0\"];\n  n1 [shape=box,label=\"1\"];\n}\n");
        out
    }

    /// Decision nodes of `f` in children-before-parents order, each as
    /// `(index, var, low, high)`. Low subtrees are emitted before high ones.
    pub fn topological_nodes(&self, f: NodeRef) -> Vec<(u32, Var, u32, u32)> {
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![(f.0, false)];
        while let Some((x, expanded)) = stack.pop() {
            if x < 2 {
                continue;
            }
            let n = self.nodes[x as usize];
            if expanded {
                out.push((x, n.var, n.low, n.high));
                continue;
            }
            if !seen.insert(x) {
                continue;
            }
            stack.push((x, true));
            stack.push((n.high, false));
            stack.push((n.low, false));
        }
        out
    }

    /// Rebuilds a node from stored children, for deserialization.
    pub fn make_node(&mut self, var: Var, low: NodeRef, high: NodeRef) -> Result<NodeRef> {
        self.check_var(var)?;
        let ok = |m: &Self, c: NodeRef| c.is_terminal() || m.var_of(c.0) > var;
        if !ok(self, low) || !ok(self, high) {
            return Err(BddError::Config("child variable does not follow parent"));
        }
        let r = self.mk_node(var, low.0, high.0)?;
        Ok(self.ref_node(NodeRef(r)))
    }
}
