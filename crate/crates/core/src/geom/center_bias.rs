use crate::depth::OrganizedCloud;
use crate::error::{Error, Result};
use crate::map::{Grid, SalMap};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CenterBiasParams {
    /// Weight of the vertical offset.
    pub c_h: f64,
    /// Weight of the horizontal offset.
    pub c_v: f64,
    /// Spread as a fraction of the farthest depth.
    pub eta: f64,
    /// Evaluate the linear, sign-asymmetric exponent
    /// `(c_h*h - c_v*v - (d - d_min)) / (2 sigma^2)` instead of the
    /// symmetric quadratic one.
    pub literal: bool,
}

impl Default for CenterBiasParams {
    fn default() -> Self {
        Self {
            c_h: 0.5,
            c_v: 0.5,
            eta: 0.25,
            literal: false,
        }
    }
}

impl CenterBiasParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.c_h >= 0.0 && self.c_v >= 0.0) {
            return Err(Error::InvalidArgument("c_h and c_v must be non-negative".into()));
        }
        Ok(())
    }
}

/// Adaptive 3D center-bias weight of every pixel, in `(0, 1]`.
///
/// Invalid points are evaluated at the nearest valid depth.
pub fn center_bias(cloud: &OrganizedCloud, params: &CenterBiasParams) -> Result<SalMap> {
    params.validate()?;
    let d_min = cloud
        .min_valid_depth()
        .ok_or_else(|| Error::InvalidArgument("center bias needs at least one valid point".into()))?;
    let d_max = cloud.max_valid_depth().expect("a valid point exists");
    let sigma = params.eta * d_max;
    let denom = 2.0 * sigma * sigma;
    let data = cloud
        .points()
        .iter()
        .map(|p| {
            let d = if p.valid { p.d } else { d_min };
            let exponent = if params.literal {
                (params.c_h * p.h - params.c_v * p.v - (d - d_min)) / denom
            } else {
                -(params.c_h * p.h * p.h + params.c_v * p.v * p.v + (d - d_min)) / denom
            };
            exponent.exp().clamp(f64::MIN_POSITIVE, 1.0)
        })
        .collect();
    Ok(SalMap::from_grid_unchecked(Grid::new(cloud.width(), cloud.height(), data)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::CloudPoint;

    fn cloud(points: &[(f64, f64, f64)]) -> OrganizedCloud {
        OrganizedCloud::new(
            points.len(),
            1,
            points
                .iter()
                .map(|&(h, v, d)| CloudPoint { h, v, d, valid: d > 0.0 })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn nearest_centered_point_has_unit_weight() {
        let c = cloud(&[(0.0, 0.0, 1.0), (0.3, -0.2, 2.5)]);
        let w = center_bias(&c, &CenterBiasParams::default()).unwrap();
        assert_eq!(w.as_slice()[0], 1.0);
        assert!(w.as_slice()[1] < 1.0);
    }

    #[test]
    fn depth_only_case() {
        let c = cloud(&[(0.0, 0.0, 1.0), (0.0, 0.0, 2.0)]);
        let p = CenterBiasParams {
            c_h: 0.0,
            c_v: 0.0,
            ..Default::default()
        };
        let w = center_bias(&c, &p).unwrap();
        assert!((w.as_slice()[1] - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn literal_form_is_clipped_to_one() {
        let c = cloud(&[(1.0, 0.0, 1.0), (-1.0, 0.0, 1.0)]);
        let p = CenterBiasParams {
            literal: true,
            ..Default::default()
        };
        let w = center_bias(&c, &p).unwrap();
        assert_eq!(w.as_slice()[0], 1.0);
        assert!(w.as_slice()[1] < 1.0 && w.as_slice()[1] > 0.0);
    }

    #[test]
    fn invalid_points_use_nearest_depth() {
        let c = cloud(&[(0.0, 0.0, 0.0), (0.0, 0.0, 2.0), (0.0, 0.0, 3.0)]);
        let w = center_bias(&c, &CenterBiasParams::default()).unwrap();
        assert_eq!(w.as_slice()[0], w.as_slice()[1]);
    }

    #[test]
    fn empty_cloud_rejected() {
        let c = cloud(&[(0.0, 0.0, 0.0)]);
        assert!(center_bias(&c, &CenterBiasParams::default()).is_err());
        let bad = CenterBiasParams { eta: 0.0, ..Default::default() };
        assert!(center_bias(&cloud(&[(0.0, 0.0, 1.0)]), &bad).is_err());
    }
}
