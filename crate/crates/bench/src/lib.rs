//! Benchmark-only crate; the benches in `benches/` exercise the hot paths
//! of `tfloc-core`. Nothing to export.
