//! Stage orchestration, artifacts and reports.

pub mod artifacts;
pub mod compute;
pub mod config;
pub mod plots;
pub mod run;

pub use compute::{compute_elasticity, compute_energetics, compute_regimes, ElasticityStage, RegimeStage};
pub use config::{RunConfig, Settings};
pub use run::{execute, run_synth, Manifest, RunSummary, Stage};
