//! Benchmarks live in `benches/`; run them with `cargo bench -p c4-bench`.
