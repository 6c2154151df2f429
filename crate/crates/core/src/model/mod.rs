//! The per-iteration stage network, the selective cascade and attention
//! analysis.

mod attention;
mod cascade;
mod config;
mod gradcheck;
mod io;
mod mma;
mod params;
mod stage;

pub use attention::{attention_report, average_attention, PatchAttention};
pub use cascade::{
    run_cascade, run_cascade_batch, run_iteration, CascadeTrace, IterationOutput,
    IterationRecord, Thresholds,
};
pub use config::ModelConfig;
pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use mma::{cascade_mma, stage_mma, StageMma};
pub use params::{init_params, ModelParams, StageParams, HEAD_INIT_GAIN};
pub use gradcheck::StageFragment;
pub use stage::{
    crop_batch, extract_features, extract_patch_feature, local_patch_attention,
    local_patch_attention_batch, stage_backward, stage_forward, StageCache, StageInput,
    StageOutput,
};
