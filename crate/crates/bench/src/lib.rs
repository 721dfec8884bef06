//! Criterion benchmarks for idecomp live under `benches/`.
