//! Frequency and waveform solvers for non-smooth oscillators.

pub mod asymptotics;
pub mod error;
pub mod hg_core;
pub mod hg_impact;
pub mod numkit;
pub mod systems;
pub mod table;
pub mod trigcalc;

pub use error::{Error, Result};
