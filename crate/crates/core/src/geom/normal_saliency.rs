use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::filter::median_filter;
use crate::geom::normals::NormalField;
use crate::map::{minmax_normalize_masked, Grid, SalMap};

/// Normal covariances at or above this condition number are singular.
pub const MAX_CONDITION: f64 = 1e8;

const MIN_NORMALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalSaliencyParams {
    pub median_window: usize,
    /// Pixels above this value seed the peak enhancement.
    pub peak_threshold: f64,
    /// Enhancement neighborhood radius in pixels.
    pub enhance_radius: f64,
    /// Neighbors of a peak are raised to at least this fraction of it.
    pub enhance_factor: f64,
}

impl Default for NormalSaliencyParams {
    fn default() -> Self {
        Self {
            median_window: 5,
            peak_threshold: 0.8,
            enhance_radius: 9.0,
            enhance_factor: 0.8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormalSaliency {
    pub map: SalMap,
    /// Set when the normal covariance was singular and the map is all zero.
    pub degenerate: bool,
}

/// Squared Mahalanobis distance of every valid normal to the normal
/// distribution; `None` when the covariance is singular.
pub fn mahalanobis_scores(nf: &NormalField) -> Result<Option<Vec<f64>>> {
    let valid: Vec<Vector3<f64>> = nf.normals.iter().flatten().copied().collect();
    if valid.len() < MIN_NORMALS {
        return Err(Error::InvalidArgument(format!(
            "normal saliency needs at least {MIN_NORMALS} valid normals, got {}",
            valid.len()
        )));
    }
    let n = valid.len() as f64;
    let mean = valid.iter().fold(Vector3::zeros(), |a, v| a + v) / n;
    let cov = valid.iter().fold(Matrix3::zeros(), |a, v| {
        let d = v - mean;
        a + d * d.transpose()
    }) / n;
    let eig = cov.symmetric_eigen();
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > 0.0) || hi / lo >= MAX_CONDITION {
        return Ok(None);
    }
    let Some(inv) = cov.try_inverse() else {
        return Ok(None);
    };
    Ok(Some(
        valid
            .iter()
            .map(|v| {
                let d = v - mean;
                d.dot(&(inv * d))
            })
            .collect(),
    ))
}

/// Surface-normal distribution saliency with median denoising and peak
/// enhancement.
pub fn normal_saliency(nf: &NormalField, params: &NormalSaliencyParams) -> Result<NormalSaliency> {
    let Some(scores) = mahalanobis_scores(nf)? else {
        return Ok(NormalSaliency {
            map: SalMap::zeros(nf.width, nf.height),
            degenerate: true,
        });
    };
    let valid: Vec<bool> = nf.normals.iter().map(Option::is_some).collect();
    let mut raw = Grid::zeros(nf.width, nf.height);
    for (slot, s) in raw
        .as_mut_slice()
        .iter_mut()
        .zip(&valid)
        .filter_map(|(slot, &ok)| ok.then_some(slot))
        .zip(scores)
    {
        *slot = s;
    }
    let scaled = minmax_normalize_masked(&raw, &valid)?;
    let filtered = median_filter(scaled.grid(), params.median_window);
    let mut out = enhance_peaks(&filtered, params);
    for (v, &ok) in out.as_mut_slice().iter_mut().zip(&valid) {
        if !ok {
            *v = 0.0;
        }
    }
    Ok(NormalSaliency {
        map: SalMap::clamped(out),
        degenerate: false,
    })
}

fn enhance_peaks(src: &Grid, params: &NormalSaliencyParams) -> Grid {
    let r = params.enhance_radius.max(0.0);
    let ri = r.floor() as isize;
    let disk: Vec<(isize, isize)> = (-ri..=ri)
        .flat_map(|dy| (-ri..=ri).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= r * r)
        .collect();
    let (w, h) = (src.width() as isize, src.height() as isize);
    let mut out = src.clone();
    for y in 0..h {
        for x in 0..w {
            let peak = src.get(x as usize, y as usize);
            if peak <= params.peak_threshold {
                continue;
            }
            let lift = params.enhance_factor * peak;
            for &(dx, dy) in &disk {
                let (qx, qy) = (x + dx, y + dy);
                if qx >= 0 && qy >= 0 && qx < w && qy < h {
                    let v = out.get(qx as usize, qy as usize);
                    if v < lift {
                        out.set(qx as usize, qy as usize, lift);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(normals: Vec<Option<Vector3<f64>>>, width: usize) -> NormalField {
        NormalField {
            width,
            height: normals.len() / width,
            radius: 0.05,
            normals,
        }
    }

    #[test]
    fn identical_normals_are_degenerate() {
        let nf = field(vec![Some(Vector3::new(0.0, 0.0, -1.0)); 64], 8);
        let s = normal_saliency(&nf, &NormalSaliencyParams::default()).unwrap();
        assert!(s.degenerate);
        assert!(s.map.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn too_few_normals_rejected() {
        let nf = field(vec![Some(Vector3::new(0.0, 0.0, 1.0)); 9], 3);
        assert!(normal_saliency(&nf, &NormalSaliencyParams::default()).is_err());
    }

    #[test]
    fn isotropic_axes_flatten_to_ones() {
        let axes = [
            Vector3::x(),
            -Vector3::x(),
            Vector3::y(),
            -Vector3::y(),
            Vector3::z(),
            -Vector3::z(),
        ];
        let normals: Vec<_> = (0..36).map(|i| Some(axes[i % 6])).collect();
        let nf = field(normals, 6);
        let scores = mahalanobis_scores(&nf).unwrap().unwrap();
        assert!(scores.iter().all(|&s| (s - 3.0).abs() < 1e-12));
        let s = normal_saliency(&nf, &NormalSaliencyParams::default()).unwrap();
        assert!(!s.degenerate);
        assert!(s.map.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn invalid_pixels_are_zero() {
        let axes = [Vector3::x(), Vector3::y(), Vector3::z(), -Vector3::x()];
        let mut normals: Vec<_> = (0..40).map(|i| Some(axes[i % 4])).collect();
        normals[7] = None;
        let s = normal_saliency(&field(normals, 8), &NormalSaliencyParams::default()).unwrap();
        assert_eq!(s.map.as_slice()[7], 0.0);
    }

    #[test]
    fn enhancement_lifts_neighbors_of_peaks() {
        let mut g = Grid::zeros(30, 30);
        g.set(15, 15, 1.0);
        let out = enhance_peaks(&g, &NormalSaliencyParams::default());
        assert_eq!(out.get(15, 15), 1.0);
        assert!((out.get(15 + 9, 15) - 0.8).abs() < 1e-15);
        assert_eq!(out.get(15 + 10, 15), 0.0);
        assert_eq!(out.get(15 + 7, 15 + 7), 0.0);
    }
}
