use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salient_core::depth_saliency::{dct_patch_saliency, patch_scores, PatchParams};
use salient_core::{minmax_normalize, DepthMap, Grid};

const JPEG_ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21,
    28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61,
    54, 47, 55, 62, 63,
];

/// Direct double-sum DCT-II coefficient `(u, v)` of the patch whose
/// top-left pixel is `(x0, y0)`, with replicated borders.
fn dct_coeff(depth: &[f64], w: usize, h: usize, x0: usize, y0: usize, u: usize, v: usize) -> f64 {
    let p = 8usize;
    let a = |k: usize| if k == 0 { (1.0 / p as f64).sqrt() } else { (2.0 / p as f64).sqrt() };
    let mut acc = 0.0;
    for y in 0..p {
        for x in 0..p {
            let f = depth[(y0 + y).min(h - 1) * w + (x0 + x).min(w - 1)];
            acc += f
                * (std::f64::consts::PI * (2 * y + 1) as f64 * u as f64 / 16.0).cos()
                * (std::f64::consts::PI * (2 * x + 1) as f64 * v as f64 / 16.0).cos();
        }
    }
    a(u) * a(v) * acc
}

fn oracle_scores(depth: &[f64], w: usize, h: usize, coeffs: usize, sigma: f64) -> Vec<f64> {
    let min_pos = depth.iter().cloned().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    let filled: Vec<f64> = depth.iter().map(|&d| if d > 0.0 { d } else { min_pos }).collect();
    let (cols, rows) = (w.div_ceil(8), h.div_ceil(8));
    let mut desc = Vec::new();
    let mut centers = Vec::new();
    for py in 0..rows {
        for px in 0..cols {
            let d: Vec<f64> = JPEG_ZIGZAG[1..=coeffs]
                .iter()
                .map(|&k| dct_coeff(&filled, w, h, px * 8, py * 8, k / 8, k % 8))
                .collect();
            desc.push(d);
            centers.push((px as f64 * 8.0 + 3.5, py as f64 * 8.0 + 3.5));
        }
    }
    let n = desc.len();
    let mut out = vec![0.0; n];
    for j in 0..n {
        for l in 0..n {
            if l == j {
                continue;
            }
            let dist = ((centers[j].0 - centers[l].0).powi(2) + (centers[j].1 - centers[l].1).powi(2)).sqrt();
            let l1: f64 = desc[j].iter().zip(&desc[l]).map(|(a, b)| (a - b).abs()).sum();
            out[j] += (-dist / sigma).exp() * l1;
        }
    }
    out
}

fn random_depth(w: usize, h: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..w * h)
        .map(|_| if rng.gen_bool(0.03) { 0.0 } else { rng.gen_range(0.5..4.0) })
        .collect()
}

#[test]
fn brute_force_oracle_on_16x16_patch_grid() {
    let (w, h) = (128, 128);
    let depth = random_depth(w, h, 7);
    let dm = DepthMap::new(w, h, depth.clone()).unwrap();
    let params = PatchParams::default();
    let got = patch_scores(&dm, &params).unwrap();
    let sigma = 0.25 * ((w * w + h * h) as f64).sqrt();
    let want = oracle_scores(&depth, w, h, 9, sigma);
    assert_eq!((got.width(), got.height()), (16, 16));
    for (g, o) in got.as_slice().iter().zip(&want) {
        assert!((g - o).abs() <= 1e-9, "{g} vs {o}");
    }
    let gn = minmax_normalize(&got).unwrap();
    let on = minmax_normalize(&Grid::new(16, 16, want).unwrap()).unwrap();
    for (g, o) in gn.as_slice().iter().zip(on.as_slice()) {
        assert!((g - o).abs() <= 1e-9);
    }
}

#[test]
fn brute_force_oracle_with_padding_and_more_coefficients() {
    let (w, h) = (61, 45);
    let depth = random_depth(w, h, 11);
    let dm = DepthMap::new(w, h, depth.clone()).unwrap();
    let params = PatchParams {
        coeffs: 20,
        sigma_w: Some(12.0),
        ..Default::default()
    };
    let got = patch_scores(&dm, &params).unwrap();
    let want = oracle_scores(&depth, w, h, 20, 12.0);
    for (g, o) in got.as_slice().iter().zip(&want) {
        assert!((g - o).abs() <= 1e-9, "{g} vs {o}");
    }
}

#[test]
fn constant_depth_gives_zero_map() {
    let dm = DepthMap::new(64, 48, vec![2.37; 64 * 48]).unwrap();
    let s = dct_patch_saliency(&dm, &PatchParams::default()).unwrap();
    assert!(s.as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn offset_invariance() {
    let (w, h) = (64, 64);
    let depth = random_depth(w, h, 3).into_iter().map(|d| d.max(0.5)).collect::<Vec<_>>();
    let shifted: Vec<f64> = depth.iter().map(|d| d + 1.25).collect();
    let a = dct_patch_saliency(&DepthMap::new(w, h, depth).unwrap(), &PatchParams::default()).unwrap();
    let b = dct_patch_saliency(&DepthMap::new(w, h, shifted).unwrap(), &PatchParams::default()).unwrap();
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        assert!((x - y).abs() < 1e-9);
    }
}

/// Flat scene with a dome-shaped bump confined to patch `(px, py)`.
fn bump_scene(w: usize, h: usize, bumps: &[(usize, usize)]) -> Vec<f64> {
    let mut d = vec![3.0; w * h];
    for &(px, py) in bumps {
        for y in 0..8 {
            for x in 0..8 {
                let (dx, dy) = (x as f64 - 3.5, y as f64 - 3.5);
                d[(py * 8 + y) * w + px * 8 + x] -= 0.4 * (-(dx * dx + dy * dy) / 8.0).exp();
            }
        }
    }
    d
}

#[test]
fn distinct_patch_holds_the_argmax() {
    let (w, h) = (128, 96);
    let depth = bump_scene(w, h, &[(5, 7)]);
    let s = dct_patch_saliency(&DepthMap::new(w, h, depth).unwrap(), &PatchParams::default()).unwrap();
    let (x, y) = s.grid().argmax().unwrap();
    assert_eq!((x / 8, y / 8), (5, 7));
}

#[test]
fn symmetric_anomalies_score_equally() {
    let (w, h) = (128, 128);
    let depth = bump_scene(w, h, &[(2, 3), (13, 12)]);
    let dm = DepthMap::new(w, h, depth).unwrap();
    let scores = minmax_normalize(&patch_scores(&dm, &PatchParams::default()).unwrap()).unwrap();
    let (a, b) = (scores.get(2, 3), scores.get(13, 12));
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    assert!(a.min(b) > 1.0 - 1e-6);
}

#[test]
fn all_zero_depth_rejected() {
    let dm = DepthMap::new(16, 16, vec![0.0; 256]).unwrap();
    assert!(dct_patch_saliency(&dm, &PatchParams::default()).is_err());
}
