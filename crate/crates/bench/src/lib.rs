//! Criterion benchmarks for the `becpro` core crate live under `benches/`.
