//! Plumbing behind the `nsosc` binary: run files, parallel sweeps and the
//! CSV/JSON formats.

pub mod config;
pub mod output;
pub mod runner;
