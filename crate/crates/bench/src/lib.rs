//! Criterion benchmarks for the design solvers live in `benches/`.
