//! Certification pipeline: configuration, checks, verdict and reports.

pub mod acceptance;
mod config;
mod pipeline;
mod plot;
mod report;

pub use config::{
    load_config, AdaptedConfig, ConjugacyConfig, FamilyName, ModelSpec, OutputConfig, PlissConfig, PlissPolicy, RunConfig,
    ShadowingConfig, SplittingConfig,
};
pub use pipeline::{emit_report, run_pipeline, PipelineOutput, TOOL};
pub use plot::{emit_lift_plot, emit_plot, emit_torus_plot};
pub use report::{derive_verdict, num, CertificationReport, CheckRecord, CheckStatus, Verdict, VerdictLine};
