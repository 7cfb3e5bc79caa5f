//! Benchmarks live in `benches/`; run them with `cargo bench -p pc2dae-bench`.
