//! Experiment orchestration: configuration parsing, execution over the
//! level grid, CSV/JSON emission, and reproducibility manifests.

pub mod config;
pub mod emit;
pub mod manifest;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, SymbolKind};
pub use manifest::RunManifest;
pub use run::run;
