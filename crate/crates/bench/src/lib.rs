//! Benchmarks (`cargo bench -p nsosc-perf`) and the acceptance run
//! (`cargo test -p nsosc-perf --test acceptance`).
