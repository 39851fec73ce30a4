use nalgebra::{Rotation3, Unit, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salient_core::geom::{estimate_normals, mahalanobis_scores, normal_saliency, NormalField, NormalSaliencyParams};
use salient_core::{depth_to_cloud, CameraIntrinsics, DepthMap, OrganizedCloud};

fn angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

#[test]
fn plane_normals() {
    let k = CameraIntrinsics::default();
    let depth = DepthMap::new(64, 48, vec![2.0; 64 * 48]).unwrap();
    let cloud = depth_to_cloud(&depth, &k).unwrap();
    let nf = estimate_normals(&cloud, 0.03).unwrap();
    assert_eq!(nf.valid_count(), 64 * 48);
    let want = Vector3::new(0.0, 0.0, -1.0);
    for n in nf.normals.iter().flatten() {
        assert!((n - want).norm() < 1e-4);
    }
}

#[test]
fn noisy_plane_normals() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Tilted plane through (0, 0, 2).
    let normal = Vector3::new(0.2, -0.3, -1.0).normalize();
    let u = normal.cross(&Vector3::x()).normalize();
    let v = normal.cross(&u);
    let mut pts = Vec::new();
    for i in 0..40 {
        for j in 0..40 {
            let p = Vector3::new(0.0, 0.0, 2.0)
                + u * (i as f64 * 0.005 - 0.1)
                + v * (j as f64 * 0.005 - 0.1)
                + normal * rng.gen_range(-1e-6..1e-6);
            pts.push(p);
        }
    }
    let nf = estimate_normals(&OrganizedCloud::from_positions(&pts).unwrap(), 0.02).unwrap();
    for (n, p) in nf.normals.iter().zip(&pts) {
        let n = n.expect("dense plane has neighbors everywhere");
        assert!(angle(&n, &normal) < 1e-3);
        assert!(n.dot(p) < 0.0);
    }
}

fn fibonacci_sphere(n: usize, center: Vector3<f64>, radius: f64) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let t = golden * i as f64;
            center + Vector3::new(r * t.cos(), y, r * t.sin()) * radius
        })
        .collect()
}

#[test]
fn sphere_normals_match_analytic() {
    let center = Vector3::new(0.0, 0.0, 3.0);
    let pts = fibonacci_sphere(5000, center, 1.0);
    let nf = estimate_normals(&OrganizedCloud::from_positions(&pts).unwrap(), 0.1).unwrap();
    let mut good = 0;
    for (n, p) in nf.normals.iter().zip(&pts) {
        let Some(n) = n else { continue };
        let radial = p - center;
        if angle(n, &radial).min(angle(&-n, &radial)) < 1e-2 {
            good += 1;
        }
        assert!(n.dot(p) <= 0.0);
    }
    assert!(good * 100 >= 99 * pts.len(), "{good} of {}", pts.len());
}

#[test]
fn sensor_inside_sphere_gives_inward_normals() {
    let pts: Vec<_> = fibonacci_sphere(5000, Vector3::zeros(), 1.0)
        .into_iter()
        .filter(|p| p.z > 0.05)
        .collect();
    let nf = estimate_normals(&OrganizedCloud::from_positions(&pts).unwrap(), 0.1).unwrap();
    let mut good = 0;
    let mut total = 0;
    for (n, p) in nf.normals.iter().zip(&pts) {
        // Skip the cut rim, where neighborhoods are one-sided.
        if p.z < 0.2 {
            continue;
        }
        total += 1;
        if angle(&n.unwrap(), &-p) < 1e-2 {
            good += 1;
        }
    }
    assert!(good * 100 >= 99 * total, "{good} of {total}");
}

fn field(normals: Vec<Vector3<f64>>) -> NormalField {
    NormalField {
        width: normals.len(),
        height: 1,
        radius: 0.05,
        normals: normals.into_iter().map(Some).collect(),
    }
}

/// Squared Mahalanobis distances via an explicit adjugate inverse.
fn oracle(normals: &[Vector3<f64>]) -> Vec<f64> {
    let n = normals.len() as f64;
    let mut mean = [0.0; 3];
    for v in normals {
        for k in 0..3 {
            mean[k] += v[k] / n;
        }
    }
    let mut c = [[0.0; 3]; 3];
    for v in normals {
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] += (v[i] - mean[i]) * (v[j] - mean[j]) / n;
            }
        }
    }
    let det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
        + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| c[r0][c0] * c[r1][c1] - c[r0][c1] * c[r1][c0];
    let inv = [
        [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
        [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
        [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
    ];
    normals
        .iter()
        .map(|v| {
            let d = [v[0] - mean[0], v[1] - mean[1], v[2] - mean[2]];
            (0..3).map(|i| (0..3).map(|j| d[i] * inv[i][j] * d[j]).sum::<f64>()).sum()
        })
        .collect()
}

fn ninety_ten(seed: u64) -> Vec<Vector3<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |base: Vector3<f64>| {
        (base + Vector3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)))
            .normalize()
    };
    let mut out: Vec<_> = (0..90).map(|_| jitter(Vector3::z())).collect();
    out.extend((0..10).map(|_| jitter(Vector3::x())));
    out
}

#[test]
fn minority_cluster_scores_higher() {
    let normals = ninety_ten(1);
    let got = mahalanobis_scores(&field(normals.clone())).unwrap().unwrap();
    let want = oracle(&normals);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-9, "{g} vs {w}");
    }
    let majority_max = got[..90].iter().cloned().fold(f64::MIN, f64::max);
    let minority_min = got[90..].iter().cloned().fold(f64::MAX, f64::min);
    assert!(minority_min > majority_max);
}

#[test]
fn parallel_normals_are_degenerate() {
    let nf = field(vec![Vector3::z(); 50]);
    assert_eq!(mahalanobis_scores(&nf).unwrap(), None);
    let s = normal_saliency(&nf, &NormalSaliencyParams::default()).unwrap();
    assert!(s.degenerate);
    assert!(s.map.as_slice().iter().all(|&v| v == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotation_leaves_scores_unchanged(seed in any::<u64>(), ax in -1.0f64..1.0, ay in -1.0f64..1.0, ang in 0.0f64..6.28) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normals: Vec<Vector3<f64>> = (0..40)
            .map(|_| Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize())
            .collect();
        let axis = Unit::new_normalize(Vector3::new(ax, ay, 0.7));
        let r = Rotation3::from_axis_angle(&axis, ang);
        let rotated: Vec<_> = normals.iter().map(|n| r * n).collect();
        let a = mahalanobis_scores(&field(normals)).unwrap().unwrap();
        let b = mahalanobis_scores(&field(rotated)).unwrap().unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }
    }
}

#[test]
fn saliency_map_highlights_minority_pixels() {
    // 20x20 field: a 4x4 patch of sideways normals on a frontal wall.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut normals = Vec::new();
    for y in 0..20 {
        for x in 0..20 {
            let base = if (8..12).contains(&x) && (8..12).contains(&y) { Vector3::x() } else { -Vector3::z() };
            let j = Vector3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
            normals.push(Some((base + j).normalize()));
        }
    }
    let nf = NormalField {
        width: 20,
        height: 20,
        radius: 0.05,
        normals,
    };
    let params = NormalSaliencyParams {
        enhance_radius: 0.0,
        ..Default::default()
    };
    let s = normal_saliency(&nf, &params).unwrap();
    assert!(!s.degenerate);
    assert!(s.map.get(10, 10) > 0.5);
    assert!(s.map.get(2, 2) < 0.1 * s.map.get(10, 10));
}
