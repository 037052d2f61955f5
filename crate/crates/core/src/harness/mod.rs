//! Synthetic data, metrics, the inference pipeline and training drivers.

pub mod config;
pub mod dataset;
pub mod masks;
pub mod metrics;
pub mod pipeline;
pub mod sweep;
pub mod synth;
pub mod train_fgt;

pub use config::{apply_override, DataConfig, RunConfig, SweepConfig};
pub use masks::{generate_masks, MaskKind, MaskSpec};
pub use metrics::{evaluate_sequence, mse_to_psnr, psnr, sequence_psnr, ssim, QualityReport, PSNR_CAP};
pub use pipeline::{inpaint_pipeline, FloDirectory, FlowProvider, GivenFlows, PipelineConfig, PipelineOutput, StageReport, ZeroFlows};
pub use sweep::{interval_axis, number_axis, sweep_flow_window, write_sweep_csv, SweepRow, WindowSetting};
pub use synth::{generate_clip, random_clip_spec, top_sprite, GeneratedClip, SpriteShape, SpriteSpec, SyntheticClipSpec, Texture};
pub use train_fgt::{fgt_milestone, train_fgt, write_fgt_log, FgtLogRow, FgtSample, FgtSchedule, TrainedFgt};
