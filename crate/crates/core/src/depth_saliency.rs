//! Bottom-up depth saliency from DCT patch dissimilarity.
//!
//! The depth map is tiled into `p x p` patches. Each patch is described by
//! its first `T` AC coefficients of an orthonormal 2D DCT-II in zig-zag
//! order. A patch's saliency is the sum, over all other patches, of the L1
//! descriptor distance weighted by `exp(-center_distance / sigma_w)`.

use rayon::prelude::*;

use crate::depth::DepthMap;
use crate::error::{Error, Result};
use crate::filter::upsample_cells;
use crate::map::{minmax_normalize, Grid, SalMap};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatchParams {
    pub patch: usize,
    pub coeffs: usize,
    /// Spatial falloff in pixels; `None` selects a quarter of the image diagonal.
    pub sigma_w: Option<f64>,
}

impl Default for PatchParams {
    fn default() -> Self {
        Self {
            patch: 8,
            coeffs: 9,
            sigma_w: None,
        }
    }
}

impl PatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.patch < 2 {
            return Err(Error::InvalidArgument(format!("patch size must be at least 2, got {}", self.patch)));
        }
        if self.coeffs == 0 || self.coeffs > self.patch * self.patch - 1 {
            return Err(Error::InvalidArgument(format!(
                "coefficient count {} must lie in 1..={} for {}x{} patches",
                self.coeffs,
                self.patch * self.patch - 1,
                self.patch,
                self.patch
            )));
        }
        if let Some(s) = self.sigma_w {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("sigma_w must be positive, got {s}")));
            }
        }
        Ok(())
    }

    pub fn sigma_for(&self, width: usize, height: usize) -> f64 {
        self.sigma_w
            .unwrap_or_else(|| 0.25 * ((width * width + height * height) as f64).sqrt())
    }
}

/// JPEG zig-zag scan of a `p x p` block as `(row, col)` pairs.
pub fn zigzag(p: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(p * p);
    for s in 0..(2 * p - 1) {
        let rows: Vec<usize> = (s.saturating_sub(p - 1)..=s.min(p - 1)).collect();
        if s % 2 == 0 {
            order.extend(rows.iter().rev().map(|&r| (r, s - r)));
        } else {
            order.extend(rows.iter().map(|&r| (r, s - r)));
        }
    }
    order
}

/// Orthonormal DCT-II basis; row `k` holds the `k`-th cosine.
fn dct_basis(p: usize) -> Vec<f64> {
    let mut m = vec![0.0; p * p];
    for k in 0..p {
        let scale = if k == 0 { (1.0 / p as f64).sqrt() } else { (2.0 / p as f64).sqrt() };
        for n in 0..p {
            m[k * p + n] = scale * (std::f64::consts::PI * (2 * n + 1) as f64 * k as f64 / (2 * p) as f64).cos();
        }
    }
    m
}

/// Tiled patch descriptors with their pixel-space centers.
#[derive(Debug, Clone)]
pub struct PatchGrid {
    pub patch: usize,
    pub cols: usize,
    pub rows: usize,
    pub descriptors: Vec<Vec<f64>>,
    pub centers: Vec<(f64, f64)>,
}

impl PatchGrid {
    pub fn build(depth: &DepthMap, params: &PatchParams) -> Result<Self> {
        params.validate()?;
        let filled = depth.with_zeros_filled()?;
        let p = params.patch;
        let (w, h) = (filled.width(), filled.height());
        let (cols, rows) = (w.div_ceil(p), h.div_ceil(p));
        let basis = dct_basis(p);
        let scan: Vec<(usize, usize)> = zigzag(p).into_iter().skip(1).take(params.coeffs).collect();

        let mut descriptors = Vec::with_capacity(cols * rows);
        let mut centers = Vec::with_capacity(cols * rows);
        let mut block = vec![0.0; p * p];
        let mut tmp = vec![0.0; p * p];
        for py in 0..rows {
            for px in 0..cols {
                let sample = |x: usize, y: usize| filled.get((px * p + x).min(w - 1), (py * p + y).min(h - 1));
                // Subtracting a reference sample only moves the DC term and
                // makes flat patches exactly zero.
                let reference = sample(0, 0);
                for y in 0..p {
                    for x in 0..p {
                        block[y * p + x] = sample(x, y) - reference;
                    }
                }
                // tmp = C * block, then coefficients = tmp * C^T.
                for k in 0..p {
                    for x in 0..p {
                        tmp[k * p + x] = (0..p).map(|n| basis[k * p + n] * block[n * p + x]).sum();
                    }
                }
                let desc = scan
                    .iter()
                    .map(|&(r, c)| (0..p).map(|n| tmp[r * p + n] * basis[c * p + n]).sum())
                    .collect();
                descriptors.push(desc);
                let half = (p as f64 - 1.0) / 2.0;
                centers.push(((px * p) as f64 + half, (py * p) as f64 + half));
            }
        }
        Ok(Self {
            patch: p,
            cols,
            rows,
            descriptors,
            centers,
        })
    }

    /// Unnormalized distance-weighted dissimilarity of every patch.
    pub fn scores(&self, sigma_w: f64) -> Grid {
        let n = self.descriptors.len();
        let scores: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let (cj, dj) = (self.centers[j], &self.descriptors[j]);
                let mut acc = 0.0;
                for l in 0..n {
                    if l == j {
                        continue;
                    }
                    let (cl, dl) = (self.centers[l], &self.descriptors[l]);
                    let dist = ((cj.0 - cl.0).powi(2) + (cj.1 - cl.1).powi(2)).sqrt();
                    let l1: f64 = dj.iter().zip(dl).map(|(a, b)| (a - b).abs()).sum();
                    acc += (-dist / sigma_w).exp() * l1;
                }
                acc
            })
            .collect();
        Grid::new(self.cols, self.rows, scores).expect("one score per patch")
    }
}

/// Patch-level scores before normalization and upsampling.
pub fn patch_scores(depth: &DepthMap, params: &PatchParams) -> Result<Grid> {
    let grid = PatchGrid::build(depth, params)?;
    Ok(grid.scores(params.sigma_for(depth.width(), depth.height())))
}

/// Depth saliency at pixel resolution.
pub fn dct_patch_saliency(depth: &DepthMap, params: &PatchParams) -> Result<SalMap> {
    let scores = patch_scores(depth, params)?;
    let normalized = minmax_normalize(&scores)?;
    let p = params.patch;
    let up = upsample_cells(normalized.grid(), scores.width() * p, scores.height() * p);
    let (w, h) = (depth.width(), depth.height());
    let cropped = Grid::from_fn(w, h, |x, y| up.get(x, y));
    Ok(SalMap::clamped(cropped))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_matches_jpeg_prefix() {
        let z = zigzag(8);
        assert_eq!(&z[..10], &[(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2), (2, 1), (3, 0)]);
        assert_eq!(z.len(), 64);
        assert_eq!(z[63], (7, 7));
    }

    #[test]
    fn constant_depth_is_zero() {
        let d = DepthMap::new(40, 24, vec![2.37; 40 * 24]).unwrap();
        let s = dct_patch_saliency(&d, &PatchParams::default()).unwrap();
        assert!(s.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn all_zero_depth_rejected() {
        let d = DepthMap::new(16, 16, vec![0.0; 256]).unwrap();
        assert!(matches!(dct_patch_saliency(&d, &PatchParams::default()), Err(Error::NoValidDepth)));
    }

    #[test]
    fn parameter_validation() {
        let d = DepthMap::new(16, 16, vec![1.0; 256]).unwrap();
        let bad = PatchParams { coeffs: 64, ..PatchParams::default() };
        assert!(dct_patch_saliency(&d, &bad).is_err());
        let bad = PatchParams { sigma_w: Some(0.0), ..PatchParams::default() };
        assert!(dct_patch_saliency(&d, &bad).is_err());
    }

    #[test]
    fn non_multiple_extents_are_padded() {
        let d = DepthMap::new(21, 13, (0..21 * 13).map(|i| 1.0 + (i % 5) as f64 * 0.1).collect()).unwrap();
        let s = dct_patch_saliency(&d, &PatchParams::default()).unwrap();
        assert_eq!((s.width(), s.height()), (21, 13));
    }
}
