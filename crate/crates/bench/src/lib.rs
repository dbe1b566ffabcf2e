//! Benchmark-only package; the measurements live in `benches/hot_paths.rs`.
//! Run them with `cargo bench -p stablelab-bench`.
