//! Criterion benchmarks for the synthesis engine; see `benches/`.
