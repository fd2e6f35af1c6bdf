//! Strong solutions for ConnectFour on `w×h` boards.
//!
//! * [`bdd`]: the decision-diagram engine with a preallocated node pool.
//! * [`encoding`]: board-to-variable layouts, transition relations and
//!   four-in-a-row clauses.
//! * [`solver`]: forward reachability and retrograde win/draw/loss passes.
//! * [`store`]: on-disk per-ply BDD files and position look-up.
//! * [`search`]: bitboard alpha-beta search and the opening book.

pub mod bdd;
pub mod encoding;
pub mod search;
pub mod solver;
pub mod store;

pub use bdd::{BddError, BddManager, BinOp, NodeRef, VarSet};
pub use encoding::{BoardGeometry, EncodingKind, Player};
pub use search::{BestMove, Position, PositionError, Score, SearchConfig, SearchError, Searcher};
pub use solver::{CountReport, SolveBudget, SolveReport, SolverError};
pub use store::{StoreError, Wdl, WdlStore};
