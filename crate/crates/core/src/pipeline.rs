//! In-memory frame pipeline: every cue computed from one RGB-D frame and
//! fused into the final map.

use image::RgbImage;

use crate::depth::{depth_to_cloud, CameraIntrinsics, DepthMap, OrganizedCloud};
use crate::depth_saliency::{dct_patch_saliency, PatchParams};
use crate::error::{Error, Result};
use crate::fusion::{fuse_final, fuse_rgb, fuse_rgbd, FusionParams};
use crate::geom::{center_bias, estimate_normals, normal_saliency, CenterBiasParams, NormalSaliencyParams};
use crate::map::{ensure_same_extent, SalMap};
use crate::pooling::{
    gbp_saliency, nonobjectness_saliency, objectness_saliency, GradientStack, ScoreMapStack, DEFAULT_GBP_GAIN,
};
use crate::space::{change_map, project_cloud, space_saliency, ChangeParams, OccupancyGrid, ProjectionParams, SensorPose};
use crate::wavelet::{wt_saliency, DEFAULT_LEVELS};

/// Source of the top-down color cue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Objectness,
    NonObjectness,
    Gbp,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Objectness => "objectness",
            Variant::NonObjectness => "non-objectness",
            Variant::Gbp => "gbp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineParams {
    pub variant: Variant,
    pub fusion: FusionParams,
    /// Guided-backprop classes averaged into the top-down map.
    pub top_k: usize,
    pub gbp_gain: f64,
    pub wavelet_levels: usize,
    pub patch: PatchParams,
    pub center_bias: CenterBiasParams,
    /// Neighborhood radius for normal estimation, meters.
    pub normal_radius: f64,
    pub normal_saliency: NormalSaliencyParams,
    pub projection: ProjectionParams,
    pub change: ChangeParams,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            variant: Variant::Gbp,
            fusion: FusionParams::default(),
            top_k: 3,
            gbp_gain: DEFAULT_GBP_GAIN,
            wavelet_levels: DEFAULT_LEVELS,
            patch: PatchParams::default(),
            center_bias: CenterBiasParams::default(),
            normal_radius: 0.05,
            normal_saliency: NormalSaliencyParams::default(),
            projection: ProjectionParams::default(),
            change: ChangeParams::default(),
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        self.patch.validate()?;
        self.center_bias.validate()?;
        if self.top_k == 0 {
            return Err(Error::OutOfRange { what: "top_k", value: 0.0 });
        }
        if !(self.gbp_gain > 0.0 && self.gbp_gain.is_finite()) {
            return Err(Error::OutOfRange { what: "gbp_gain", value: self.gbp_gain });
        }
        if self.wavelet_levels == 0 {
            return Err(Error::OutOfRange { what: "wavelet_levels", value: 0.0 });
        }
        if !(self.normal_radius > 0.0 && self.normal_radius.is_finite()) {
            return Err(Error::OutOfRange {
                what: "normal_radius",
                value: self.normal_radius,
            });
        }
        let ns = &self.normal_saliency;
        if ns.median_window % 2 == 0 {
            return Err(Error::OutOfRange {
                what: "normal_saliency.median_window",
                value: ns.median_window as f64,
            });
        }
        for (what, v) in [
            ("normal_saliency.peak_threshold", ns.peak_threshold),
            ("normal_saliency.enhance_factor", ns.enhance_factor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfRange { what, value: v });
            }
        }
        if !(ns.enhance_radius >= 0.0) {
            return Err(Error::OutOfRange {
                what: "normal_saliency.enhance_radius",
                value: ns.enhance_radius,
            });
        }
        let pr = &self.projection;
        if !(pr.floor_height < pr.height_ceiling) {
            return Err(Error::InvalidArgument(format!(
                "projection.floor_height {} must be below projection.height_ceiling {}",
                pr.floor_height, pr.height_ceiling
            )));
        }
        let ch = &self.change;
        if ch.min_points == 0 {
            return Err(Error::OutOfRange { what: "change.min_points", value: 0.0 });
        }
        if !(0.0..=1.0).contains(&ch.unknown_score) {
            return Err(Error::OutOfRange {
                what: "change.unknown_score",
                value: ch.unknown_score,
            });
        }
        if !(ch.smoothing_sigma >= 0.0 && ch.smoothing_sigma.is_finite()) {
            return Err(Error::OutOfRange {
                what: "change.smoothing_sigma",
                value: ch.smoothing_sigma,
            });
        }
        Ok(())
    }
}

/// Prior map and where the sensor was when the frame was captured.
#[derive(Debug, Clone)]
pub struct SpaceInputs {
    pub grid: OccupancyGrid,
    pub pose: SensorPose,
}

#[derive(Debug, Clone)]
pub struct FrameInputs {
    pub rgb: RgbImage,
    /// Meters; zero marks missing measurements.
    pub depth: DepthMap,
    pub intrinsics: CameraIntrinsics,
    pub scores: Option<ScoreMapStack>,
    pub gradients: Option<GradientStack>,
    pub space: Option<SpaceInputs>,
}

#[derive(Debug, Clone)]
pub struct FrameOutputs {
    pub final_map: SalMap,
    pub top_down: SalMap,
    pub bottom_up: SalMap,
    pub rgb: SalMap,
    pub depth: SalMap,
    pub center_bias: SalMap,
    pub normals: SalMap,
    pub rgbd: SalMap,
    pub space: SalMap,
    /// The normal cue could not be computed and was replaced by ones.
    pub normals_degenerate: bool,
}

fn top_down(inputs: &FrameInputs, params: &PipelineParams, w: usize, h: usize) -> Result<SalMap> {
    match params.variant {
        Variant::Objectness | Variant::NonObjectness => {
            let s = inputs
                .scores
                .as_ref()
                .ok_or_else(|| Error::Missing(format!("{} variant needs a score map stack", params.variant.as_str())))?;
            ensure_same_extent(w, h, s.width(), s.height())?;
            if params.variant == Variant::Objectness {
                objectness_saliency(s)
            } else {
                nonobjectness_saliency(s)
            }
        }
        Variant::Gbp => {
            let g = inputs
                .gradients
                .as_ref()
                .ok_or_else(|| Error::Missing("gbp variant needs a gradient stack".into()))?;
            gbp_saliency(g, params.top_k.min(g.class_count()), params.gbp_gain, w, h)
        }
    }
}

fn geometry(cloud: &OrganizedCloud, params: &PipelineParams) -> Result<(SalMap, SalMap, bool)> {
    let (w, h) = (cloud.width(), cloud.height());
    let cb = center_bias(cloud, &params.center_bias)?;
    let normals = estimate_normals(cloud, params.normal_radius)
        .and_then(|nf| normal_saliency(&nf, &params.normal_saliency));
    let (sn, degenerate) = match normals {
        Ok(ns) if !ns.degenerate => (ns.map, false),
        Ok(_) => (SalMap::ones(w, h), true),
        Err(e) => {
            log::warn!("normal saliency unavailable: {e}");
            (SalMap::ones(w, h), true)
        }
    };
    Ok((cb, sn, degenerate))
}

fn space_cue(cloud: &OrganizedCloud, space: Option<&SpaceInputs>, params: &PipelineParams) -> Result<SalMap> {
    let Some(s) = space else {
        return Ok(SalMap::zeros(cloud.width(), cloud.height()));
    };
    let projected = project_cloud(cloud, &s.pose, &s.grid, &params.projection)?;
    let change = change_map(&projected, &s.grid, &params.change);
    space_saliency(&change, cloud, params.center_bias.eta)
}

/// Runs every stage on one frame. Independent stages run concurrently;
/// results do not depend on the thread count.
pub fn run_pipeline(inputs: &FrameInputs, params: &PipelineParams) -> Result<FrameOutputs> {
    params.validate()?;
    let (w, h) = (inputs.rgb.width() as usize, inputs.rgb.height() as usize);
    ensure_same_extent(w, h, inputs.depth.width(), inputs.depth.height())?;
    let cloud = depth_to_cloud(&inputs.depth, &inputs.intrinsics)?;

    let ((td, bu), (sd, (geom, sbs))) = rayon::join(
        || {
            rayon::join(
                || top_down(inputs, params, w, h),
                || wt_saliency(&inputs.rgb, params.wavelet_levels),
            )
        },
        || {
            rayon::join(
                || dct_patch_saliency(&inputs.depth, &params.patch),
                || {
                    rayon::join(
                        || geometry(&cloud, params),
                        || space_cue(&cloud, inputs.space.as_ref(), params),
                    )
                },
            )
        },
    );
    let (td, bu, sd, sbs) = (td?, bu?, sd?, sbs?);
    let (cb, sn, normals_degenerate) = geom?;

    let rgb = fuse_rgb(&td, &bu, params.fusion.alpha)?;
    let rgbd = fuse_rgbd(&rgb, &sd, &cb, &sn, &params.fusion)?;
    let final_map = fuse_final(&rgbd, &sbs)?;
    Ok(FrameOutputs {
        final_map,
        top_down: td,
        bottom_up: bu,
        rgb,
        depth: sd,
        center_bias: cb,
        normals: sn,
        rgbd,
        space: sbs,
        normals_degenerate,
    })
}
