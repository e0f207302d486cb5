//! Experiment runner for `gradlab-core`: TOML specs, seeded coefficient
//! fields, parallel sweeps, and JSON / CSV / MANIFEST artifacts.

pub mod experiments;
pub mod expr;
pub mod fields;
pub mod output;
pub mod random;
pub mod scan;
pub mod spec;

pub use experiments::{run_experiment, Check, Outcome, RunError, RunRecord};
pub use spec::{ConfigError, ExperimentKind, ExperimentSpec};

/// Name and version written into every report.
pub const TOOL: &str = concat!("gradlab ", env!("CARGO_PKG_VERSION"));
