//! Criterion benchmarks for the AQM hot path and the simulator; see `benches/`.
