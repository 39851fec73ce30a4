//! 3D cues: adaptive center-bias weighting and surface-normal saliency.

mod center_bias;
mod normal_saliency;
mod normals;

pub use center_bias::{center_bias, CenterBiasParams};
pub use normal_saliency::{mahalanobis_scores, normal_saliency, NormalSaliency, NormalSaliencyParams, MAX_CONDITION};
pub use normals::{estimate_normals, NormalField, VoxelIndex};
