//! Depth maps and their back-projection into organized point clouds.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::map::Grid;

/// Row-major depth in meters; `0` marks a missing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "depth map {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(&value) = data.iter().find(|&&v| v < 0.0) {
            return Err(Error::OutOfRange {
                what: "depth",
                value,
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn min_positive(&self) -> Option<f64> {
        self.data
            .iter()
            .copied()
            .filter(|&d| d > 0.0)
            .fold(None, |acc, d| Some(acc.map_or(d, |m: f64| m.min(d))))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Replaces every missing measurement with the smallest positive depth.
    pub fn with_zeros_filled(&self) -> Result<DepthMap> {
        let fill = self.min_positive().ok_or(Error::NoValidDepth)?;
        Ok(DepthMap {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&d| if d > 0.0 { d } else { fill })
                .collect(),
        })
    }

    pub fn to_grid(&self) -> Grid {
        Grid::new(self.width, self.height, self.data.clone()).expect("extent preserved")
    }
}

/// Pinhole camera intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [("fx", self.fx), ("fy", self.fy)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("focal length {what} must be positive, got {v}")));
            }
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidArgument("principal point must be finite".into()));
        }
        Ok(())
    }
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        // Kinect v1 color camera.
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 319.5,
            cy: 239.5,
        }
    }
}

/// One back-projected pixel. `h` is the vertical (image-down) offset, `v`
/// the horizontal (image-right) offset, `d` the depth along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CloudPoint {
    pub h: f64,
    pub v: f64,
    pub d: f64,
    pub valid: bool,
}

impl CloudPoint {
    /// Camera-frame position `(x right, y down, z forward)`.
    #[inline]
    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.v, self.h, self.d)
    }
}

/// Per-pixel 3D points kept in image order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrganizedCloud {
    width: usize,
    height: usize,
    points: Vec<CloudPoint>,
}

impl OrganizedCloud {
    pub fn new(width: usize, height: usize, points: Vec<CloudPoint>) -> Result<Self> {
        if points.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "cloud {width}x{height} needs {} points, got {}",
                width * height,
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.valid && !(p.d > 0.0)) {
            return Err(Error::OutOfRange {
                what: "valid point depth",
                value: p.d,
            });
        }
        Ok(Self { width, height, points })
    }

    /// Builds an unorganized cloud (a single row) from camera-frame positions.
    pub fn from_positions(positions: &[Vector3<f64>]) -> Result<Self> {
        let points = positions
            .iter()
            .map(|p| CloudPoint {
                v: p.x,
                h: p.y,
                d: p.z,
                valid: p.z > 0.0,
            })
            .collect();
        Self::new(positions.len(), 1, points)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn points(&self) -> &[CloudPoint] {
        &self.points
    }

    pub fn valid_count(&self) -> usize {
        self.points.iter().filter(|p| p.valid).count()
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        self.points.iter().map(|p| p.valid).collect()
    }

    pub fn min_valid_depth(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.valid)
            .map(|p| p.d)
            .fold(None, |acc, d| Some(acc.map_or(d, |m: f64| m.min(d))))
    }

    pub fn max_valid_depth(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.valid)
            .map(|p| p.d)
            .fold(None, |acc, d| Some(acc.map_or(d, |m: f64| m.max(d))))
    }
}

/// Back-projects every pixel through the pinhole model.
pub fn depth_to_cloud(depth: &DepthMap, k: &CameraIntrinsics) -> Result<OrganizedCloud> {
    k.validate()?;
    let mut points = Vec::with_capacity(depth.data.len());
    for y in 0..depth.height {
        for x in 0..depth.width {
            let d = depth.get(x, y);
            points.push(if d > 0.0 {
                CloudPoint {
                    v: (x as f64 - k.cx) * d / k.fx,
                    h: (y as f64 - k.cy) * d / k.fy,
                    d,
                    valid: true,
                }
            } else {
                CloudPoint::default()
            });
        }
    }
    Ok(OrganizedCloud {
        width: depth.width,
        height: depth.height,
        points,
    })
}
