//! Plain-text TOML configuration. Every tunable constant of the pipeline
//! lives under a documented key; unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use salient_core::depth_saliency::PatchParams;
use salient_core::eval::DEFAULT_THRESHOLDS;
use salient_core::geom::{CenterBiasParams, NormalSaliencyParams};
use salient_core::imageio::DEFAULT_DEPTH_SCALE;
use salient_core::pooling::DEFAULT_GBP_GAIN;
use salient_core::space::{ChangeParams, ProjectionParams};
use salient_core::wavelet::DEFAULT_LEVELS;
use salient_core::{CameraIntrinsics, FusionParams, PipelineParams, Variant};
use serde::{Deserialize, Serialize};

/// Annotated configuration with every key at its default value.
pub const DEFAULT_CONFIG: &str = r#"# Top-down cue: "gbp", "objectness" or "non-objectness".
variant = "gbp"
# Add the map-based change cue; needs map/ and poses/ in the dataset.
space_saliency = false
# Meters per raw unit of the 16-bit depth PNGs.
depth_scale = 0.001
# Uniform thresholds swept over [0, 1] for ROC/AUC.
thresholds = 256
# Optional defaults for --dataset and --out.
# dataset = "data"
# out = "results"

[intrinsics]
fx = 525.0
fy = 525.0
cx = 319.5
cy = 239.5

[fusion]
# Weight of the first operand in both convex mixes (top-down over
# bottom-up color, color over depth).
alpha = 0.7
# Lower bound on the normal-saliency exponent; 0 disables the floor.
exponent_floor = 0.05

[pooling]
# Guided-backprop classes averaged into the top-down map.
top_k = 3
# Gain inside tanh when squashing per-layer gradient maps.
gbp_gain = 3.0

[wavelet]
levels = 4

[depth]
# Patch side in pixels and number of AC DCT coefficients per patch.
patch = 8
coeffs = 9
# Spatial falloff in pixels; omit for a quarter of the image diagonal.
# sigma_w = 200.0

[center_bias]
c_h = 0.5
c_v = 0.5
# Spread as a fraction of the farthest depth.
eta = 0.25
# Evaluate the linear, sign-asymmetric exponent instead.
literal = false

[normals]
# Neighborhood radius for normal estimation, meters.
radius = 0.05
median_window = 5
peak_threshold = 0.8
# Enhancement neighborhood radius, pixels.
enhance_radius = 9.0
enhance_factor = 0.8

[space]
# Height band (meters above the floor) of points that count as obstacles.
floor_height = 0.05
height_ceiling = 2.0
# Live points needed before a cell counts as occupied now.
min_points = 5
unknown_score = 0.5
# Gaussian smoothing of the change map, pixels.
smoothing_sigma = 3.0
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoolingConfig {
    pub top_k: usize,
    pub gbp_gain: f64,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        Self {
            top_k: 3,
            gbp_gain: DEFAULT_GBP_GAIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveletConfig {
    pub levels: usize,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self { levels: DEFAULT_LEVELS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalsConfig {
    pub radius: f64,
    pub median_window: usize,
    pub peak_threshold: f64,
    pub enhance_radius: f64,
    pub enhance_factor: f64,
}

impl Default for NormalsConfig {
    fn default() -> Self {
        let n = NormalSaliencyParams::default();
        Self {
            radius: PipelineParams::default().normal_radius,
            median_window: n.median_window,
            peak_threshold: n.peak_threshold,
            enhance_radius: n.enhance_radius,
            enhance_factor: n.enhance_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceConfig {
    pub floor_height: f64,
    pub height_ceiling: f64,
    pub min_points: usize,
    pub unknown_score: f64,
    pub smoothing_sigma: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        let (p, c) = (ProjectionParams::default(), ChangeParams::default());
        Self {
            floor_height: p.floor_height,
            height_ceiling: p.height_ceiling,
            min_points: c.min_points,
            unknown_score: c.unknown_score,
            smoothing_sigma: c.smoothing_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub variant: Variant,
    pub space_saliency: bool,
    pub depth_scale: f64,
    pub thresholds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub intrinsics: CameraIntrinsics,
    pub fusion: FusionParams,
    pub pooling: PoolingConfig,
    pub wavelet: WaveletConfig,
    pub depth: PatchParams,
    pub center_bias: CenterBiasParams,
    pub normals: NormalsConfig,
    pub space: SpaceConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            variant: Variant::Gbp,
            space_saliency: false,
            depth_scale: DEFAULT_DEPTH_SCALE,
            thresholds: DEFAULT_THRESHOLDS,
            dataset: None,
            out: None,
            intrinsics: CameraIntrinsics::default(),
            fusion: FusionParams::default(),
            pooling: PoolingConfig::default(),
            wavelet: WaveletConfig::default(),
            depth: PatchParams::default(),
            center_bias: CenterBiasParams::default(),
            normals: NormalsConfig::default(),
            space: SpaceConfig::default(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        // Relative paths in the file are relative to the file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(
            self.depth_scale > 0.0 && self.depth_scale.is_finite(),
            "depth_scale must be positive, got {}",
            self.depth_scale
        );
        anyhow::ensure!(self.thresholds >= 2, "thresholds must be at least 2, got {}", self.thresholds);
        self.intrinsics.validate()?;
        self.params().validate()?;
        Ok(())
    }

    /// Canonical serialization, used for hashing and provenance.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn params(&self) -> PipelineParams {
        PipelineParams {
            variant: self.variant,
            fusion: self.fusion,
            top_k: self.pooling.top_k,
            gbp_gain: self.pooling.gbp_gain,
            wavelet_levels: self.wavelet.levels,
            patch: self.depth,
            center_bias: self.center_bias,
            normal_radius: self.normals.radius,
            normal_saliency: NormalSaliencyParams {
                median_window: self.normals.median_window,
                peak_threshold: self.normals.peak_threshold,
                enhance_radius: self.normals.enhance_radius,
                enhance_factor: self.normals.enhance_factor,
            },
            projection: ProjectionParams {
                height_ceiling: self.space.height_ceiling,
                floor_height: self.space.floor_height,
            },
            change: ChangeParams {
                min_points: self.space.min_points,
                unknown_score: self.space.unknown_score,
                smoothing_sigma: self.space.smoothing_sigma,
            },
        }
    }
}
