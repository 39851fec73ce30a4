use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::depth::OrganizedCloud;
use crate::error::{Error, Result};

/// Minimum neighborhood size (including the query point) for a normal.
const MIN_NEIGHBORS: usize = 3;

/// Uniform voxel hash over valid cloud points.
#[derive(Debug)]
pub struct VoxelIndex {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl VoxelIndex {
    pub fn build(positions: &[Option<Vector3<f64>>], cell: f64) -> Self {
        let mut cells: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            if let Some(p) = p {
                cells.entry(Self::key(p, cell)).or_default().push(i as u32);
            }
        }
        Self { cell, cells }
    }

    fn key(p: &Vector3<f64>, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    /// Indices of all points within `radius` (inclusive) of `q`.
    /// `radius` must not exceed the cell size.
    pub fn within(&self, positions: &[Option<Vector3<f64>>], q: &Vector3<f64>, radius: f64, out: &mut Vec<u32>) {
        debug_assert!(radius <= self.cell * (1.0 + 1e-12));
        out.clear();
        let (kx, ky, kz) = Self::key(q, self.cell);
        let r2 = radius * radius;
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(ids) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) {
                        out.extend(ids.iter().copied().filter(|&i| {
                            positions[i as usize].is_some_and(|p| (p - q).norm_squared() <= r2)
                        }));
                    }
                }
            }
        }
    }
}

/// Unit normals per pixel; `None` where no normal could be estimated.
#[derive(Debug, Clone)]
pub struct NormalField {
    pub width: usize,
    pub height: usize,
    pub radius: f64,
    pub normals: Vec<Option<Vector3<f64>>>,
}

impl NormalField {
    pub fn valid_count(&self) -> usize {
        self.normals.iter().filter(|n| n.is_some()).count()
    }
}

/// Smallest-eigenvector normal of each point's radius neighborhood,
/// oriented toward the sensor at the origin. Neighbors are weighted by
/// `(1 - (dist / radius)^2)^2`.
pub fn estimate_normals(cloud: &OrganizedCloud, radius: f64) -> Result<NormalField> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("normal radius must be positive, got {radius}")));
    }
    let positions: Vec<Option<Vector3<f64>>> = cloud
        .points()
        .iter()
        .map(|p| p.valid.then(|| p.position()))
        .collect();
    let index = VoxelIndex::build(&positions, radius);
    let normals = positions
        .par_iter()
        .map_init(Vec::new, |scratch, p| {
            let p = p.as_ref()?;
            index.within(&positions, p, radius, scratch);
            if scratch.len() < MIN_NEIGHBORS {
                return None;
            }
            // Weights fall smoothly to zero at the radius so points crossing
            // the boundary do not tilt the fit.
            let weight = |q: &Vector3<f64>| {
                let t = (q - p).norm_squared() / (radius * radius);
                (1.0 - t).max(0.0).powi(2)
            };
            let mut total = 0.0;
            let mut mean = Vector3::zeros();
            for &i in scratch.iter() {
                let q = positions[i as usize].as_ref().unwrap();
                let w = weight(q);
                total += w;
                mean += q * w;
            }
            mean /= total;
            let cov = scratch.iter().fold(Matrix3::zeros(), |acc, &i| {
                let q = positions[i as usize].as_ref().unwrap();
                let d = q - mean;
                acc + d * d.transpose() * weight(q)
            }) / total;
            let eig = cov.symmetric_eigen();
            let k = eig.eigenvalues.imin();
            let mut normal: Vector3<f64> = eig.eigenvectors.column(k).into_owned();
            let len = normal.norm();
            if !(len > 0.0) {
                return None;
            }
            normal /= len;
            if normal.dot(p) > 0.0 {
                normal = -normal;
            }
            Some(normal)
        })
        .collect();
    Ok(NormalField {
        width: cloud.width(),
        height: cloud.height(),
        radius,
        normals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_normals_face_sensor() {
        let mut pts = Vec::new();
        for y in 0..20 {
            for x in 0..20 {
                pts.push(Vector3::new(x as f64 * 0.01 - 0.1, y as f64 * 0.01 - 0.1, 2.0));
            }
        }
        let cloud = OrganizedCloud::from_positions(&pts).unwrap();
        let nf = estimate_normals(&cloud, 0.03).unwrap();
        assert_eq!(nf.valid_count(), 400);
        for n in nf.normals.iter().flatten() {
            assert!((n - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-4);
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn isolated_point_is_invalid() {
        let pts = vec![
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.01, 0.0, 1.0),
            Vector3::new(0.0, 0.01, 1.0),
            Vector3::new(0.5, 0.5, 3.0),
        ];
        let cloud = OrganizedCloud::from_positions(&pts).unwrap();
        let nf = estimate_normals(&cloud, 0.05).unwrap();
        assert!(nf.normals[0].is_some());
        assert!(nf.normals[3].is_none());
    }

    #[test]
    fn radius_validated() {
        let cloud = OrganizedCloud::from_positions(&[Vector3::new(0.0, 0.0, 1.0)]).unwrap();
        assert!(estimate_normals(&cloud, 0.0).is_err());
    }

    #[test]
    fn radius_search_is_exact() {
        let pts: Vec<Option<Vector3<f64>>> = (0..200)
            .map(|i| Some(Vector3::new((i % 10) as f64 * 0.013, ((i / 10) % 5) as f64 * 0.017, 1.0 + (i / 50) as f64 * 0.011)))
            .collect();
        let index = VoxelIndex::build(&pts, 0.02);
        let mut got = Vec::new();
        for q in pts.iter().flatten() {
            index.within(&pts, q, 0.02, &mut got);
            got.sort_unstable();
            let want: Vec<u32> = (0..pts.len() as u32)
                .filter(|&i| (pts[i as usize].unwrap() - q).norm_squared() <= 0.02 * 0.02)
                .collect();
            assert_eq!(got, want);
        }
    }
}
