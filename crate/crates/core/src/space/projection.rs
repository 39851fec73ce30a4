use nalgebra::Vector3;

use crate::depth::{CloudPoint, OrganizedCloud};
use crate::error::{Error, Result};
use crate::space::grid::OccupancyGrid;
use crate::space::pose::SensorPose;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectionParams {
    /// Points higher than this above the floor are ignored (meters).
    pub height_ceiling: f64,
    /// Points lower than this are treated as floor and ignored (meters).
    pub floor_height: f64,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        Self {
            height_ceiling: 2.0,
            floor_height: 0.05,
        }
    }
}

/// Where one pixel's point landed on the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelCell {
    /// Invalid depth, or filtered out by height.
    Unassigned,
    Cell { ix: usize, iy: usize },
    /// Valid point outside the mapped area.
    OutOfMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedCells {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<PixelCell>,
}

/// Camera-frame point to world frame; returns `(x, y, z)` with `z` the
/// height above the floor.
pub fn camera_to_world(p: &CloudPoint, pose: &SensorPose) -> Vector3<f64> {
    let (st, ct) = pose.sensor_tilt.sin_cos();
    // Robot frame: x forward, y left, z up.
    let forward = p.d * ct - p.h * st;
    let left = -p.v;
    let up = pose.sensor_height - p.d * st - p.h * ct;
    let (sh, ch) = pose.theta.sin_cos();
    Vector3::new(
        pose.x + forward * ch - left * sh,
        pose.y + forward * sh + left * ch,
        up,
    )
}

/// Bins every valid point onto the ground plane of the prior map.
pub fn project_cloud(
    cloud: &OrganizedCloud,
    pose: &SensorPose,
    grid: &OccupancyGrid,
    params: &ProjectionParams,
) -> Result<ProjectedCells> {
    if grid.locate(pose.x, pose.y).is_none() {
        return Err(Error::InvalidArgument(format!(
            "sensor pose ({}, {}) lies outside the map",
            pose.x, pose.y
        )));
    }
    let cells = cloud
        .points()
        .iter()
        .map(|p| {
            if !p.valid {
                return PixelCell::Unassigned;
            }
            let w = camera_to_world(p, pose);
            if w.z > params.height_ceiling || w.z < params.floor_height {
                return PixelCell::Unassigned;
            }
            match grid.locate(w.x, w.y) {
                Some((ix, iy)) => PixelCell::Cell { ix, iy },
                None => PixelCell::OutOfMap,
            }
        })
        .collect();
    Ok(ProjectedCells {
        width: cloud.width(),
        height: cloud.height(),
        cells,
    })
}
