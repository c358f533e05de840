//! Criterion benchmarks for `infogeo`; see `benches/`.
