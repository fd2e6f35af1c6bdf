//! Command-line grammar.
//!
//! `-h` is the board height, so help is only available as `--help`.

use std::path::PathBuf;

use c4_core::encoding::{BoardGeometry, EncodingKind};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Default node pool when neither `-n` nor `C4_NODE_CAPACITY` is given.
pub const DEFAULT_CAPACITY: &str = "16M";
/// Default store directory for `solve` output and for reading.
pub const DEFAULT_STORE: &str = "store";

#[derive(Debug, Parser)]
#[command(name = "c4", version, about = "Strongly solve ConnectFour with BDDs", disable_help_flag = true)]
pub struct Cli {
    #[arg(long, action = clap::ArgAction::Help, global = true, help = "Print help")]
    pub help: Option<bool>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count the reachable positions of every ply.
    Count(SymbolicArgs),
    /// Solve a board and write its win/draw/loss store.
    Solve(SymbolicArgs),
    /// Evaluate a position from a solved store.
    Query(QueryArgs),
    /// Build an opening book of exact scores at one ply.
    Book(BookArgs),
    /// Serve `/health` and `/eval` over HTTP.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    #[value(name = "standard-row")]
    StandardRow,
    #[value(name = "standard-col")]
    StandardCol,
    #[value(name = "compressed")]
    Compressed,
}

impl From<EncodingArg> for EncodingKind {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::StandardRow => EncodingKind::StandardRowWise,
            EncodingArg::StandardCol => EncodingKind::StandardColumnWise,
            EncodingArg::Compressed => EncodingKind::Compressed,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct BoardArgs {
    #[arg(short = 'w', long, value_parser = parse_dim)]
    pub width: u32,
    #[arg(short = 'h', long, value_parser = parse_dim)]
    pub height: u32,
}

impl BoardArgs {
    pub fn geometry(&self) -> BoardGeometry {
        BoardGeometry::new(self.width, self.height).expect("dimensions were range checked")
    }
}

/// Board selection for commands that read a store: optional, since the
/// store directory usually determines the board.
#[derive(Clone, Debug, Args)]
pub struct OptionalBoardArgs {
    #[arg(short = 'w', long, value_parser = parse_dim, requires = "height")]
    pub width: Option<u32>,
    #[arg(short = 'h', long, value_parser = parse_dim, requires = "width")]
    pub height: Option<u32>,
}

impl OptionalBoardArgs {
    pub fn geometry(&self) -> Option<BoardGeometry> {
        match (self.width, self.height) {
            (Some(w), Some(h)) => BoardGeometry::new(w, h).ok(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct SymbolicArgs {
    #[command(flatten)]
    pub board: BoardArgs,
    #[arg(short = 'e', long, value_enum, default_value = "compressed")]
    pub encoding: EncodingArg,
    /// Node pool size; accepts K, M and G suffixes (powers of 1024).
    #[arg(short = 'n', long = "nodes", env = "C4_NODE_CAPACITY", default_value = DEFAULT_CAPACITY, value_parser = parse_capacity)]
    pub nodes: usize,
    /// Store directory (`solve`); `count` ignores it.
    #[arg(short = 'o', long = "out", default_value = DEFAULT_STORE)]
    pub out: PathBuf,
    /// Stop counting after this ply.
    #[arg(long)]
    pub ply: Option<u32>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Debug, Args)]
pub struct QueryArgs {
    /// Moves as 1-based column digits, e.g. "4453".
    #[arg(default_value = "")]
    pub moves: String,
    #[command(flatten)]
    pub board: OptionalBoardArgs,
    /// Store directory: a board directory or the output root of `solve`.
    #[arg(long, default_value = DEFAULT_STORE)]
    pub db: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Debug, Args)]
pub struct BookArgs {
    #[command(flatten)]
    pub board: OptionalBoardArgs,
    #[arg(long, default_value = DEFAULT_STORE)]
    pub db: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub ply: u32,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Book file to write; defaults to `book_<ply>.bin` in the board directory.
    #[arg(short = 'o', long = "out")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub board: OptionalBoardArgs,
    #[arg(long, default_value = DEFAULT_STORE)]
    pub db: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Per-request search budget in milliseconds.
    #[arg(long, default_value_t = 5000)]
    pub search_ms: u64,
}

fn parse_dim(s: &str) -> Result<u32, String> {
    let v: u32 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    let max = c4_core::encoding::MAX_DIM as u32;
    if (1..=max).contains(&v) {
        Ok(v)
    } else {
        Err(format!("must be between 1 and {max}"))
    }
}

/// Parses a node count such as `4096`, `64K`, `16M` or `2G`.
pub fn parse_capacity(s: &str) -> Result<usize, String> {
    let t = s.trim();
    let (digits, shift) = match t.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&t[..t.len() - 1], 10),
        Some('M') => (&t[..t.len() - 1], 20),
        Some('G') => (&t[..t.len() - 1], 30),
        _ => (t, 0),
    };
    let n: usize = digits.parse().map_err(|_| format!("'{s}' is not a node count"))?;
    n.checked_shl(shift).filter(|v| v >> shift == n && *v > 0).ok_or_else(|| format!("'{s}' is out of range"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_suffixes() {
        assert_eq!(parse_capacity("4096"), Ok(4096));
        assert_eq!(parse_capacity("64K"), Ok(64 << 10));
        assert_eq!(parse_capacity("16m"), Ok(16 << 20));
        assert_eq!(parse_capacity("2G"), Ok(2 << 30));
        assert!(parse_capacity("0").is_err());
        assert!(parse_capacity("12Q").is_err());
        assert!(parse_capacity("").is_err());
    }

    #[test]
    fn short_h_is_height() {
        let cli = Cli::try_parse_from(["c4", "count", "-w", "4", "-h", "5"]).unwrap();
        let Command::Count(a) = cli.command else { panic!() };
        assert_eq!((a.board.width, a.board.height), (4, 5));
        assert_eq!(a.encoding, EncodingArg::Compressed);
    }

    #[test]
    fn zero_width_is_rejected() {
        let e = Cli::try_parse_from(["c4", "count", "-w", "0", "-h", "4"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
