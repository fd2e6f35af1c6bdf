use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::{BddError, NodeRef, Result, Var, VarSet};

/// Level assigned to both terminals; ranks below every real variable.
pub(crate) const TERMINAL_VAR: Var = u32::MAX - 1;
/// Marks a slot sitting on the free list.
pub(crate) const FREE_VAR: Var = u32::MAX;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Node {
    pub var: Var,
    pub low: u32,
    pub high: u32,
}

#[derive(Clone, Copy, Default)]
pub(crate) struct CacheEntry {
    pub op: u32,
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub res: u32,
}

pub(crate) struct InternedSet {
    pub member: Vec<bool>,
    pub last: Var,
}

/// Counters exposed for reports and tests.
#[derive(Clone, Debug, Default)]
pub struct BddStats {
    pub capacity: usize,
    /// Slots currently off the free list (live or not yet collected).
    pub allocated: usize,
    /// High-water mark of `allocated`.
    pub peak_allocated: usize,
    pub gc_runs: u64,
    pub gc_time: Duration,
    pub cache_hits: u64,
    pub cache_misses: u64,
}

/// Owner of the node arena, unique table and operation cache.
///
/// Single-threaded; distinct managers share nothing.
pub struct BddManager {
    pub(crate) nodes: Vec<Node>,
    pub(crate) refs: Vec<u32>,
    marks: Vec<u64>,
    unique: Vec<u32>,
    unique_mask: usize,
    free_head: u32,
    free_count: usize,
    num_vars: u32,
    pub(crate) cache: Vec<CacheEntry>,
    pub(crate) cache_mask: usize,
    /// Intermediate results of the running operation that must survive a sweep.
    pub(crate) refstack: Vec<u32>,
    pub(crate) sets: Vec<InternedSet>,
    set_ids: HashMap<Vec<Var>, u32>,
    pub(crate) stats: BddStats,
}

#[inline]
fn mix(a: u32, b: u32, c: u32) -> u64 {
    let mut h = (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h = h.rotate_left(31);
    h ^= (c as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    h ^ (h >> 29)
}

fn try_vec<T: Clone>(len: usize, fill: T, bytes: &mut usize) -> Result<Vec<T>> {
    let need = len * std::mem::size_of::<T>();
    *bytes += need;
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| BddError::Allocation { bytes: need })?;
    v.resize(len, fill);
    Ok(v)
}

impl BddManager {
    /// Preallocates `capacity` node slots (two of which are the terminals) and
    /// an operation cache of a quarter of that size.
    pub fn new(capacity: usize, num_vars: u32) -> Result<Self> {
        Self::with_cache_size(capacity, num_vars, (capacity / 4).max(1))
    }

    pub fn with_cache_size(capacity: usize, num_vars: u32, cache_entries: usize) -> Result<Self> {
        if capacity < 2 {
            return Err(BddError::Config("capacity must be at least 2"));
        }
        if num_vars == 0 || num_vars >= TERMINAL_VAR {
            return Err(BddError::Config("variable count out of range"));
        }
        if capacity > u32::MAX as usize / 2 {
            return Err(BddError::Config("capacity exceeds 32-bit node indices"));
        }
        let unique_len = (2 * capacity).next_power_of_two();
        let cache_len = cache_entries.next_power_of_two();

        let mut bytes = 0usize;
        let nodes = try_vec(capacity, Node { var: FREE_VAR, low: 0, high: 0 }, &mut bytes);
        let refs = try_vec(capacity, 0u32, &mut bytes);
        let marks = try_vec(capacity.div_ceil(64), 0u64, &mut bytes);
        let unique = try_vec(unique_len, 0u32, &mut bytes);
        let cache = try_vec(cache_len, CacheEntry::default(), &mut bytes);
        let (mut nodes, refs, marks, unique, cache) = match (nodes, refs, marks, unique, cache) {
            (Ok(n), Ok(r), Ok(mk), Ok(u), Ok(c)) => (n, r, mk, u, c),
            _ => return Err(BddError::Allocation { bytes }),
        };

        for i in [0usize, 1] {
            nodes[i] = Node { var: TERMINAL_VAR, low: i as u32, high: i as u32 };
        }
        // Thread the free list through `low`, lowest index first.
        for (i, n) in nodes.iter_mut().enumerate().take(capacity).skip(2) {
            n.low = if i + 1 < capacity { (i + 1) as u32 } else { 0 };
        }

        Ok(BddManager {
            nodes,
            refs,
            marks,
            unique,
            unique_mask: unique_len - 1,
            free_head: if capacity > 2 { 2 } else { 0 },
            free_count: capacity - 2,
            num_vars,
            cache,
            cache_mask: cache_len - 1,
            refstack: Vec::with_capacity(1024),
            sets: Vec::new(),
            set_ids: HashMap::new(),
            stats: BddStats { capacity, allocated: 2, peak_allocated: 2, ..Default::default() },
        })
    }

    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Slots off the free list, including dead nodes not yet swept.
    pub fn allocated(&self) -> usize {
        self.capacity() - self.free_count
    }

    pub fn free_slots(&self) -> usize {
        self.free_count
    }

    pub fn stats(&self) -> BddStats {
        let mut s = self.stats.clone();
        s.allocated = self.allocated();
        s
    }

    #[inline]
    pub(crate) fn var_of(&self, n: u32) -> Var {
        self.nodes[n as usize].var
    }

    /// Variable tested at the root of `f`, or `None` for terminals.
    pub fn top_var(&self, f: NodeRef) -> Option<Var> {
        (!f.is_terminal()).then(|| self.var_of(f.0))
    }

    /// `(low, high)` children of a decision node.
    pub fn children(&self, f: NodeRef) -> Option<(NodeRef, NodeRef)> {
        if f.is_terminal() {
            return None;
        }
        let n = self.nodes[f.0 as usize];
        Some((NodeRef(n.low), NodeRef(n.high)))
    }

    pub fn ref_count(&self, f: NodeRef) -> u32 {
        self.refs[f.0 as usize]
    }

    pub(crate) fn check_var(&self, v: Var) -> Result<()> {
        if v >= self.num_vars {
            Err(BddError::InvalidVariable { var: v, num_vars: self.num_vars })
        } else {
            Ok(())
        }
    }

    /// Hands out one more external reference to `f`.
    pub fn ref_node(&mut self, f: NodeRef) -> NodeRef {
        if !f.is_terminal() {
            debug_assert_ne!(self.var_of(f.0), FREE_VAR, "ref of freed node");
            self.refs[f.0 as usize] += 1;
        }
        f
    }

    /// Gives back one external reference. A node left with no references is
    /// reclaimed, with any descendants only it kept alive, at the next sweep.
    pub fn deref_node(&mut self, f: NodeRef) -> Result<()> {
        if f.is_terminal() {
            return Ok(());
        }
        let r = &mut self.refs[f.0 as usize];
        if *r == 0 || self.nodes[f.0 as usize].var == FREE_VAR {
            return Err(BddError::DoubleFree { node: f.0 });
        }
        *r -= 1;
        Ok(())
    }

    fn unique_slot(&self, var: Var, low: u32, high: u32) -> (usize, Option<u32>) {
        let mut h = mix(var, low, high) as usize & self.unique_mask;
        loop {
            let idx = self.unique[h];
            if idx == 0 {
                return (h, None);
            }
            let n = &self.nodes[idx as usize];
            if n.var == var && n.low == low && n.high == high {
                return (h, Some(idx));
            }
            h = (h + 1) & self.unique_mask;
        }
    }

    /// Returns the canonical node `(var, low, high)`, allocating if needed.
    /// May sweep the pool; `low` and `high` are protected across the sweep.
    pub(crate) fn mk_node(&mut self, var: Var, low: u32, high: u32) -> Result<u32> {
        if low == high {
            return Ok(low);
        }
        debug_assert!(var < self.var_of(low) && var < self.var_of(high));
        let (mut slot, found) = self.unique_slot(var, low, high);
        if let Some(idx) = found {
            return Ok(idx);
        }
        if self.free_head == 0 {
            self.refstack.push(low);
            self.refstack.push(high);
            self.collect_garbage();
            self.refstack.truncate(self.refstack.len() - 2);
            if self.free_head == 0 {
                return Err(BddError::PoolExhausted { capacity: self.capacity() });
            }
            slot = self.unique_slot(var, low, high).0;
        }
        let idx = self.free_head;
        self.free_head = self.nodes[idx as usize].low;
        self.free_count -= 1;
        self.nodes[idx as usize] = Node { var, low, high };
        self.unique[slot] = idx;
        let allocated = self.capacity() - self.free_count;
        if allocated > self.stats.peak_allocated {
            self.stats.peak_allocated = allocated;
        }
        Ok(idx)
    }

    #[inline]
    fn is_marked(&self, i: usize) -> bool {
        self.marks[i >> 6] & (1 << (i & 63)) != 0
    }

    fn mark_from(&mut self, root: u32, stack: &mut Vec<u32>) {
        stack.push(root);
        while let Some(n) = stack.pop() {
            let i = n as usize;
            if n < 2 || self.is_marked(i) {
                continue;
            }
            self.marks[i >> 6] |= 1 << (i & 63);
            let node = self.nodes[i];
            stack.push(node.low);
            stack.push(node.high);
        }
    }

    /// Mark-and-sweep over the arena: every node not reachable from an
    /// externally referenced node (or the running operation's scratch stack)
    /// returns to the free list. The operation cache is cleared.
    pub fn collect_garbage(&mut self) {
        let start = Instant::now();
        let mut stack = Vec::with_capacity(256);
        for i in 2..self.capacity() {
            if self.refs[i] > 0 && self.nodes[i].var != FREE_VAR {
                self.mark_from(i as u32, &mut stack);
            }
        }
        for k in 0..self.refstack.len() {
            let r = self.refstack[k];
            self.mark_from(r, &mut stack);
        }

        self.unique.fill(0);
        self.free_head = 0;
        self.free_count = 0;
        // Walk downwards so the rebuilt free list hands out low indices first.
        for i in (2..self.capacity()).rev() {
            if self.is_marked(i) {
                let n = self.nodes[i];
                let (slot, _) = self.unique_slot(n.var, n.low, n.high);
                self.unique[slot] = i as u32;
            } else {
                self.nodes[i] = Node { var: FREE_VAR, low: self.free_head, high: 0 };
                self.refs[i] = 0;
                self.free_head = i as u32;
                self.free_count += 1;
            }
        }
        self.marks.fill(0);
        self.cache.fill(CacheEntry::default());
        self.stats.gc_runs += 1;
        self.stats.gc_time += start.elapsed();
        log::debug!("gc #{}: {} of {} slots free", self.stats.gc_runs, self.free_count, self.capacity());
    }

    /// Registers a variable set for use in quantification cache keys.
    pub(crate) fn intern_set(&mut self, set: &VarSet) -> Result<u32> {
        if let Some(&id) = self.set_ids.get(set.vars()) {
            return Ok(id);
        }
        let mut member = vec![false; self.num_vars as usize];
        for &v in set.vars() {
            self.check_var(v)?;
            member[v as usize] = true;
        }
        let id = self.sets.len() as u32;
        self.sets.push(InternedSet { member, last: set.last().unwrap_or(0) });
        self.set_ids.insert(set.vars().to_vec(), id);
        Ok(id)
    }

    #[inline]
    pub(crate) fn cache_lookup(&mut self, op: u32, a: u32, b: u32, c: u32) -> Option<u32> {
        let e = &self.cache[mix(a ^ (op << 24), b, c) as usize & self.cache_mask];
        if e.op == op && e.a == a && e.b == b && e.c == c {
            self.stats.cache_hits += 1;
            Some(e.res)
        } else {
            self.stats.cache_misses += 1;
            None
        }
    }

    #[inline]
    pub(crate) fn cache_insert(&mut self, op: u32, a: u32, b: u32, c: u32, res: u32) {
        let slot = mix(a ^ (op << 24), b, c) as usize & self.cache_mask;
        self.cache[slot] = CacheEntry { op, a, b, c, res };
    }

    /// Full-arena consistency check: orderedness, reducedness, unique-table
    /// membership, absence of duplicates and free-list accounting.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let mut seen = HashMap::new();
        let mut free = 0usize;
        for i in 2..self.capacity() {
            let n = self.nodes[i];
            if n.var == FREE_VAR {
                free += 1;
                if self.refs[i] != 0 {
                    return Err(format!("free slot {i} has refcount {}", self.refs[i]));
                }
                continue;
            }
            if n.var >= self.num_vars {
                return Err(format!("node {i} has invalid var {}", n.var));
            }
            if n.low == n.high {
                return Err(format!("node {i} is redundant (low == high)"));
            }
            for c in [n.low, n.high] {
                let cv = self.var_of(c);
                if cv == FREE_VAR {
                    return Err(format!("node {i} points at freed slot {c}"));
                }
                if cv <= n.var {
                    return Err(format!("node {i} (var {}) has child var {cv}", n.var));
                }
            }
            if let Some(j) = seen.insert((n.var, n.low, n.high), i) {
                return Err(format!("nodes {j} and {i} are duplicates"));
            }
            if self.unique_slot(n.var, n.low, n.high).1 != Some(i as u32) {
                return Err(format!("node {i} missing from unique table"));
            }
        }
        if free != self.free_count {
            return Err(format!("free count {} but {free} free slots", self.free_count));
        }
        let mut walked = 0usize;
        let mut p = self.free_head;
        while p != 0 {
            walked += 1;
            if walked > free {
                return Err("free list is cyclic".into());
            }
            p = self.nodes[p as usize].low;
        }
        if walked != free {
            return Err(format!("free list links {walked} of {free} free slots"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_arena_holds_only_terminals() {
        let m = BddManager::new(1024, 4).unwrap();
        assert_eq!(m.allocated(), 2);
        assert_eq!(m.free_slots(), 1022);
        m.audit().unwrap();
    }

    #[test]
    fn two_slot_pool_cannot_make_variables() {
        let mut m = BddManager::new(2, 1).unwrap();
        assert_eq!(m.mk_var(0), Err(BddError::PoolExhausted { capacity: 2 }));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(matches!(BddManager::new(1, 4), Err(BddError::Config(_))));
        assert!(matches!(BddManager::new(16, 0), Err(BddError::Config(_))));
    }

    #[test]
    fn huge_pool_reports_requested_bytes() {
        // 2e9 nodes are rejected up front by the 32-bit index guard or by the allocator.
        match BddManager::new(2_000_000_000, 8) {
            Err(BddError::Allocation { bytes }) => assert!(bytes > 0),
            Err(BddError::Config(_)) => {}
            Ok(m) => assert_eq!(m.capacity(), 2_000_000_000),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn ref_deref_and_double_free() {
        let mut m = BddManager::new(64, 2).unwrap();
        let x = m.mk_var(0).unwrap();
        assert_eq!(m.ref_count(x), 1);
        m.ref_node(x);
        m.deref_node(x).unwrap();
        assert_eq!(m.ref_count(x), 1);
        m.deref_node(x).unwrap();
        assert_eq!(m.deref_node(x), Err(BddError::DoubleFree { node: x.index() }));
        // Unreferenced, the node survives until the next sweep.
        assert_eq!(m.allocated(), 3);
        m.collect_garbage();
        assert_eq!(m.allocated(), 2);
        m.audit().unwrap();
    }

    #[test]
    fn sweep_keeps_referenced_descendants() {
        let mut m = BddManager::new(64, 3).unwrap();
        let a = m.mk_var(0).unwrap();
        let b = m.mk_var(1).unwrap();
        let f = m.and(a, b).unwrap();
        m.deref_node(a).unwrap();
        m.deref_node(b).unwrap();
        m.collect_garbage();
        // f = (x0, FALSE, x1) keeps the x1 node alive.
        assert_eq!(m.allocated(), 4);
        assert_eq!(m.node_count(f), 4);
        m.audit().unwrap();
        let b2 = m.mk_var(1).unwrap();
        assert_eq!(m.children(f).unwrap().1, b2);
    }
}
