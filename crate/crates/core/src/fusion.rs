//! Integration cascade from the individual cues to the final map.

use crate::error::{Error, Result};
use crate::map::{ensure_same_extent, minmax_normalize, Grid, SalMap};
use crate::pooling::pow_zero_suppressed;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionParams {
    /// Weight of the first operand in both convex mixes.
    pub alpha: f64,
    /// Lower bound on the normal-saliency exponent. Zero gives the unfloored form.
    pub exponent_floor: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            exponent_floor: 0.05,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::OutOfRange { what: "alpha", value: self.alpha });
        }
        if !(0.0..=1.0).contains(&self.exponent_floor) {
            return Err(Error::OutOfRange {
                what: "exponent_floor",
                value: self.exponent_floor,
            });
        }
        Ok(())
    }
}

fn check(a: &SalMap, b: &SalMap) -> Result<()> {
    ensure_same_extent(a.width(), a.height(), b.width(), b.height())
}

/// `alpha * td + (1 - alpha) * bu`.
pub fn fuse_rgb(td: &SalMap, bu: &SalMap, alpha: f64) -> Result<SalMap> {
    check(td, bu)?;
    let g = td.grid().zip_with(bu.grid(), |t, b| alpha * t + (1.0 - alpha) * b)?;
    // Convex combinations of [0,1] values can still overshoot by an ulp.
    Ok(SalMap::clamped(g))
}

pub fn fuse_rgbd(
    s_rgb: &SalMap,
    s_d: &SalMap,
    w_cb: &SalMap,
    s_n: &SalMap,
    params: &FusionParams,
) -> Result<SalMap> {
    check(s_rgb, s_d)?;
    check(s_rgb, w_cb)?;
    check(s_rgb, s_n)?;
    let a = params.alpha;
    let pre: Vec<f64> = s_rgb
        .as_slice()
        .iter()
        .zip(s_d.as_slice())
        .zip(w_cb.as_slice())
        .map(|((&r, &d), &w)| (a * r + (1.0 - a) * d) * w)
        .collect();
    let base = minmax_normalize(&Grid::new(s_rgb.width(), s_rgb.height(), pre)?)?;
    let out: Vec<f64> = base
        .as_slice()
        .iter()
        .zip(s_n.as_slice())
        .map(|(&b, &n)| pow_zero_suppressed(b, n.max(params.exponent_floor)))
        .collect();
    Ok(SalMap::clamped(Grid::new(s_rgb.width(), s_rgb.height(), out)?))
}

pub fn fuse_final(s_rgbd: &SalMap, s_sbs: &SalMap) -> Result<SalMap> {
    check(s_rgbd, s_sbs)?;
    minmax_normalize(&s_rgbd.grid().zip_with(s_sbs.grid(), |a, b| a + b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sal(v: &[f64]) -> SalMap {
        SalMap::try_from_grid(Grid::new(v.len(), 1, v.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn rgb_mix_examples() {
        let s = fuse_rgb(&sal(&[0.2, 0.8]), &sal(&[0.6, 0.0]), 0.7).unwrap();
        assert!((s.as_slice()[0] - 0.32).abs() < 1e-12);
        assert!((s.as_slice()[1] - 0.56).abs() < 1e-12);
        let td = sal(&[0.1, 0.9]);
        assert_eq!(fuse_rgb(&td, &sal(&[0.5, 0.5]), 1.0).unwrap(), td);
        let c = fuse_rgb(&sal(&[1.0; 3]), &sal(&[0.0; 3]), 0.7).unwrap();
        assert!(c.as_slice().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn rgbd_examples() {
        let p = FusionParams::default();
        let s = fuse_rgbd(&sal(&[1.0, 0.0]), &sal(&[1.0, 0.0]), &sal(&[1.0, 0.5]), &sal(&[1.0, 1.0]), &p).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 0.0]);
        let literal = FusionParams { exponent_floor: 0.0, ..p };
        let z = fuse_rgbd(&sal(&[0.0, 1.0]), &sal(&[0.0, 1.0]), &sal(&[1.0, 1.0]), &sal(&[0.0, 0.0]), &literal).unwrap();
        assert_eq!(z.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn neutral_weights_reduce_to_normalized_mix() {
        let rgb = sal(&[0.2, 0.9, 0.4]);
        let d = sal(&[0.5, 0.1, 1.0]);
        let ones = sal(&[1.0; 3]);
        let s = fuse_rgbd(&rgb, &d, &ones, &ones, &FusionParams::default()).unwrap();
        let mix = Grid::new(3, 1, vec![0.7 * 0.2 + 0.3 * 0.5, 0.7 * 0.9 + 0.3 * 0.1, 0.7 * 0.4 + 0.3]).unwrap();
        let want = minmax_normalize(&mix).unwrap();
        for (a, b) in s.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn final_examples() {
        assert_eq!(fuse_final(&sal(&[0.5, 0.5]), &sal(&[0.0, 1.0])).unwrap().as_slice(), &[0.0, 1.0]);
        let s = sal(&[0.0, 0.3, 1.0]);
        assert_eq!(fuse_final(&s, &sal(&[0.0; 3])).unwrap(), s);
        assert_eq!(fuse_final(&sal(&[0.4; 2]), &sal(&[0.2; 2])).unwrap().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn extent_mismatch() {
        assert!(fuse_rgb(&sal(&[0.0]), &sal(&[0.0, 1.0]), 0.5).is_err());
        assert!(fuse_final(&sal(&[0.0]), &sal(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn params_validated() {
        assert!(FusionParams { alpha: 1.2, ..Default::default() }.validate().is_err());
        assert!(FusionParams::default().validate().is_ok());
    }
}
