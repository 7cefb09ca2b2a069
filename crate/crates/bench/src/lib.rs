//! Criterion benchmarks for the `wigner-flow` kernels; see `benches/`.
