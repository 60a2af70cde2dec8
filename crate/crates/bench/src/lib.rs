//! Criterion benchmarks for `polepid-core`; see `benches/core.rs`.
