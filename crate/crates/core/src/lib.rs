//! RGB-D saliency: bottom-up color and depth cues, CNN-derived top-down
//! cues, 3D center bias, surface-normal rarity and map-based change
//! detection, fused into one map and scored with ROC/AUC.

pub mod depth;
pub mod depth_saliency;
pub mod error;
pub mod eval;
pub mod filter;
pub mod fusion;
pub mod geom;
pub mod imageio;
pub mod map;
pub mod pipeline;
pub mod pooling;
pub mod space;
pub mod stack_io;
pub mod tensor;
pub mod wavelet;

pub use depth::{depth_to_cloud, CameraIntrinsics, CloudPoint, DepthMap, OrganizedCloud};
pub use depth_saliency::{dct_patch_saliency, PatchParams};
pub use error::{Error, Result};
pub use eval::{evaluate_dataset, roc_auc, roc_auc_with, BenchmarkReport, RocCurve, DEFAULT_THRESHOLDS};
pub use fusion::{fuse_final, fuse_rgb, fuse_rgbd, FusionParams};
pub use geom::{center_bias, estimate_normals, normal_saliency, CenterBiasParams, NormalField, NormalSaliencyParams};
pub use map::{minmax_normalize, Grid, Mask, SalMap};
pub use pipeline::{run_pipeline, FrameInputs, FrameOutputs, PipelineParams, SpaceInputs, Variant};
pub use pooling::{GradientLayer, GradientStack, ScoreMapStack};
pub use space::{OccupancyGrid, SensorPose};
pub use tensor::{read_tensor, write_tensor, TensorFile};
pub use image::RgbImage;
