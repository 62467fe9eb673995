//! Criterion benchmarks for the analytic and Monte Carlo engines; see `benches/`.
