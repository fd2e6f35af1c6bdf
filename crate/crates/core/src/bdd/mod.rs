//! Reduced ordered binary decision diagrams over a preallocated node pool.
//!
//! All nodes live in a single [`BddManager`] arena whose capacity is fixed at
//! construction. Nodes are hash-consed through a unique table, so two
//! [`NodeRef`]s in one manager are equal exactly when they denote the same
//! Boolean function.
//!
//! Memory is managed by hand: every operation that returns a [`NodeRef`] hands
//! the caller one external reference, which must eventually be given back with
//! [`BddManager::deref_node`]. Unreferenced nodes are swept back onto the free
//! list the next time the pool runs dry (or on an explicit
//! [`BddManager::collect_garbage`]).
//!
//! ```
//! use c4_core::bdd::{BddManager, VarSet};
//!
//! let mut m = BddManager::new(1 << 10, 4).unwrap();
//! let x0 = m.mk_var(0).unwrap();
//! let x1 = m.mk_var(1).unwrap();
//! let f = m.and(x0, x1).unwrap();
//! let g = m.exists(f, &VarSet::new([0]).unwrap()).unwrap();
//! assert_eq!(g, x1);
//! for r in [x0, x1, f, g] {
//!     m.deref_node(r).unwrap();
//! }
//! ```

mod count;
mod manager;
mod ops;
mod varset;

pub use manager::{BddManager, BddStats};
pub use ops::BinOp;
pub use varset::VarSet;

use thiserror::Error;

/// Variable identifier; doubles as the level in the (static) global order.
pub type Var = u32;

/// Handle to a node in a [`BddManager`] arena.
///
/// Indices 0 and 1 are reserved for the `FALSE` and `TRUE` terminals.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct NodeRef(pub(crate) u32);

impl NodeRef {
    pub const FALSE: NodeRef = NodeRef(0);
    pub const TRUE: NodeRef = NodeRef(1);

    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }

    pub fn is_false(self) -> bool {
        self.0 == 0
    }

    pub fn is_true(self) -> bool {
        self.0 == 1
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BddError {
    #[error("node pool exhausted: all {capacity} nodes are live")]
    PoolExhausted { capacity: usize },
    #[error("could not allocate node pool of {bytes} bytes")]
    Allocation { bytes: usize },
    #[error("deref of node {node} whose reference count is already zero")]
    DoubleFree { node: u32 },
    #[error("function depends on variable {var} outside the counted variable set")]
    DependsOutsideVarSet { var: Var },
    #[error("variable {var} out of range (manager has {num_vars} variables)")]
    InvalidVariable { var: Var, num_vars: u32 },
    #[error("variable set is not strictly increasing")]
    UnsortedVarSet,
    #[error("invalid manager configuration: {0}")]
    Config(&'static str),
}

pub type Result<T> = std::result::Result<T, BddError>;
