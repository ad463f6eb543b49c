//! Criterion benchmarks for `chronovec` live in `benches/`.
