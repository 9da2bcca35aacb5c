//! Experiment orchestration: configs, runs, sweeps, reports and record export.

pub mod config;
pub mod eval;
pub mod records;
pub mod run;
pub mod sweep;

pub use config::*;
pub use eval::*;
pub use records::*;
pub use run::*;
pub use sweep::*;
