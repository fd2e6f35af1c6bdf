use std::fmt::Write as _;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::bdd::BddStats;
use crate::encoding::{BoardGeometry, EncodingKind};
use crate::store::Wdl;

use super::{LayerCounts, WdlCounts};

/// `1234567` as `1,234,567`.
pub fn format_count(n: &BigUint) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() * 4 / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Run times; the only report fields that vary between identical runs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub gc_seconds: f64,
    pub gc_share: f64,
}

/// One ply of a report. Counts are decimal strings since they can exceed
/// 64 bits. Won, drawn and lost are from the first player's point of view.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerReport {
    pub ply: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub won: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub drawn: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lost: Option<String>,
    pub total: String,
    pub terminal: String,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub width: u32,
    pub height: u32,
    pub encoding: String,
    pub node_capacity: usize,
    pub layers: Vec<LayerReport>,
    pub total: String,
    pub peak_nodes: usize,
    pub gc_runs: u64,
    pub timing: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub width: u32,
    pub height: u32,
    pub encoding: String,
    pub node_capacity: usize,
    /// Value of the empty board for the first player.
    pub root_value: Wdl,
    pub layers: Vec<LayerReport>,
    pub total: String,
    pub peak_nodes: usize,
    pub gc_runs: u64,
    pub timing: Timing,
}

fn forward_rows(layers: &[LayerCounts]) -> Vec<LayerReport> {
    layers
        .iter()
        .map(|l| LayerReport {
            ply: l.ply,
            won: None,
            drawn: None,
            lost: None,
            total: l.total.to_string(),
            terminal: l.terminal.to_string(),
            nodes: l.nodes,
        })
        .collect()
}

fn grand_total(layers: &[LayerCounts]) -> String {
    layers.iter().map(|l| &l.total).sum::<BigUint>().to_string()
}

fn big(s: &str) -> BigUint {
    s.parse().unwrap_or_default()
}

fn render(layers: &[LayerReport], total: &str, with_wdl: bool) -> String {
    let mut out = String::new();
    if with_wdl {
        let _ = writeln!(
            out,
            "{:>4} {:>20} {:>20} {:>20} {:>22} {:>20} {:>12}",
            "ply", "won", "drawn", "lost", "total", "terminal", "nodes"
        );
    } else {
        let _ = writeln!(out, "{:>4} {:>22} {:>20} {:>12}", "ply", "total", "terminal", "nodes");
    }
    for l in layers {
        let f = |s: &Option<String>| s.as_deref().map(|v| format_count(&big(v))).unwrap_or_default();
        if with_wdl {
            let _ = writeln!(
                out,
                "{:>4} {:>20} {:>20} {:>20} {:>22} {:>20} {:>12}",
                l.ply,
                f(&l.won),
                f(&l.drawn),
                f(&l.lost),
                format_count(&big(&l.total)),
                format_count(&big(&l.terminal)),
                l.nodes
            );
        } else {
            let _ = writeln!(
                out,
                "{:>4} {:>22} {:>20} {:>12}",
                l.ply,
                format_count(&big(&l.total)),
                format_count(&big(&l.terminal)),
                l.nodes
            );
        }
    }
    let _ = writeln!(out, "total {}", big(total));
    out
}

fn footer(out: &mut String, peak: usize, capacity: usize, gc_runs: u64, t: &Timing) {
    let _ = writeln!(out, "peak nodes {peak} of {capacity}");
    let _ = writeln!(out, "gc runs {gc_runs}, gc share {:.2}%", 100.0 * t.gc_share);
    let _ = writeln!(out, "wall time {:.3} s", t.wall_seconds);
}

impl CountReport {
    pub fn new(
        geometry: BoardGeometry,
        kind: EncodingKind,
        node_capacity: usize,
        layers: &[LayerCounts],
        stats: &BddStats,
        timing: Timing,
    ) -> Self {
        CountReport {
            width: geometry.width(),
            height: geometry.height(),
            encoding: kind.name().to_string(),
            node_capacity,
            layers: forward_rows(layers),
            total: grand_total(layers),
            peak_nodes: stats.peak_allocated,
            gc_runs: stats.gc_runs,
            timing,
        }
    }

    pub fn total(&self) -> BigUint {
        big(&self.total)
    }

    /// Per-ply totals, in ply order.
    pub fn totals(&self) -> Vec<BigUint> {
        self.layers.iter().map(|l| big(&l.total)).collect()
    }

    pub fn terminals(&self) -> Vec<BigUint> {
        self.layers.iter().map(|l| big(&l.terminal)).collect()
    }

    /// Human-readable table; the grand total is on a line `total <n>`.
    pub fn render_table(&self) -> String {
        let mut out = format!("{}x{} {}\n", self.width, self.height, self.encoding);
        out += &render(&self.layers, &self.total, false);
        footer(&mut out, self.peak_nodes, self.node_capacity, self.gc_runs, &self.timing);
        out
    }
}

impl SolveReport {
    pub fn new(
        geometry: BoardGeometry,
        kind: EncodingKind,
        node_capacity: usize,
        forward: &[LayerCounts],
        wdl: &[WdlCounts],
        stats: &BddStats,
        timing: Timing,
    ) -> Self {
        let mut layers = forward_rows(forward);
        for c in wdl {
            let (won, drawn, lost) = c.first_player();
            if let Some(l) = layers.get_mut(c.ply as usize) {
                l.won = Some(won.to_string());
                l.drawn = Some(drawn.to_string());
                l.lost = Some(lost.to_string());
            } else {
                layers.push(LayerReport {
                    ply: c.ply,
                    won: Some(won.to_string()),
                    drawn: Some(drawn.to_string()),
                    lost: Some(lost.to_string()),
                    total: c.total.to_string(),
                    terminal: c.terminal.to_string(),
                    nodes: 1,
                });
            }
        }
        let root = &wdl[0];
        let root_value = if root.win > BigUint::default() {
            Wdl::Win
        } else if root.draw > BigUint::default() {
            Wdl::Draw
        } else {
            Wdl::Loss
        };
        SolveReport {
            width: geometry.width(),
            height: geometry.height(),
            encoding: kind.name().to_string(),
            node_capacity,
            root_value,
            layers,
            total: grand_total(forward),
            peak_nodes: stats.peak_allocated,
            gc_runs: stats.gc_runs,
            timing,
        }
    }

    pub fn total(&self) -> BigUint {
        big(&self.total)
    }

    /// The report without its timing fields, for comparing runs.
    pub fn without_timing(&self) -> SolveReport {
        SolveReport { timing: Timing::default(), ..self.clone() }
    }

    /// Per-ply table from the first player's point of view: at odd plies
    /// terminal positions are won for the first player, at even plies lost.
    pub fn render_table(&self) -> String {
        let mut out = format!("{}x{} {}: first player {}\n", self.width, self.height, self.encoding, self.root_value);
        out += &render(&self.layers, &self.total, true);
        footer(&mut out, self.peak_nodes, self.node_capacity, self.gc_runs, &self.timing);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousands_separators() {
        for (n, s) in [(0u64, "0"), (999, "999"), (1000, "1,000"), (161029, "161,029"), (1234567, "1,234,567")] {
            assert_eq!(format_count(&BigUint::from(n)), s);
        }
    }
}
