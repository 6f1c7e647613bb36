//! Run configuration, synthetic corpora, end-to-end pipelines, sweeps and
//! report files.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod sweep;
pub mod synth;

pub use config::RunConfig;
pub use pipeline::{
    labeler, markers_from_reference, run_mixed, run_pipeline, run_supervised, tf_features, JudgeReport, LabelUse,
    MixedRunReport, PipelineReport, SupervisedReport,
};
pub use sweep::{sensitivity_sweep, Curve, CurvePoint, SweepAxis, SweepInput, SWEEP_SEEDS};
pub use synth::{gen_synthetic, gen_synthetic_documents, DomainSpec, SyntheticModel, SyntheticSpec};
