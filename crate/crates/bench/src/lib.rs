//! Criterion benchmarks for tubecert; see `benches/`.
