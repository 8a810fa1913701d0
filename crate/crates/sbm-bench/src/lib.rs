//! Benchmark harness for spectral blockmodel clustering: config-driven
//! experiments over the built-in model presets, seeded replication, and CSV
//! table emission.

pub mod config;
pub mod presets;
pub mod runner;
pub mod tables;

pub use config::{ExperimentConfig, Family, Method, ModelSpec};
pub use presets::{builtin_presets, find_preset, Preset, PresetKind};
pub use runner::{resolve_model, run_experiment, ResolvedModel, RunLog};
pub use tables::{emit_tables, read_results_csv};
