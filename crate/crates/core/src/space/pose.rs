use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Robot pose in the map frame plus the depth sensor's mounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPose {
    pub x: f64,
    pub y: f64,
    /// Heading in `(-pi, pi]`.
    pub theta: f64,
    pub sensor_height: f64,
    /// Downward pitch of the optical axis, radians.
    pub sensor_tilt: f64,
}

impl SensorPose {
    pub fn new(x: f64, y: f64, theta: f64, sensor_height: f64, sensor_tilt: f64) -> Result<Self> {
        for (what, v) in [
            ("x", x),
            ("y", y),
            ("theta", theta),
            ("sensor_height", sensor_height),
            ("sensor_tilt", sensor_tilt),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("pose {what} must be finite, got {v}")));
            }
        }
        Ok(Self {
            x,
            y,
            theta: normalize_angle(theta),
            sensor_height,
            sensor_tilt,
        })
    }
}

fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Reads `frame_id x y theta sensor_height sensor_tilt` records.
pub fn read_poses(path: impl AsRef<Path>) -> Result<BTreeMap<String, SensorPose>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 6 {
            return Err(Error::malformed("pose", path, format!("line {}: expected 6 fields", ln + 1)));
        }
        let nums: Vec<f64> = toks[1..]
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::malformed("pose", path, format!("line {}: bad number", ln + 1)))?;
        let pose = SensorPose::new(nums[0], nums[1], nums[2], nums[3], nums[4])?;
        out.insert(toks[0].to_string(), pose);
    }
    Ok(out)
}
