//! Deterministic inputs for the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salient_core::{CameraIntrinsics, DepthMap, Grid, Mask, RgbImage, SalMap};

/// Tilted floor with a box-shaped bump and a little noise, in meters.
pub fn depth_scene(w: usize, h: usize, seed: u64) -> DepthMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 / w as f64, (i / w) as f64 / h as f64);
            let floor = 3.5 - 2.0 * y;
            let bump = if (0.4..0.6).contains(&x) && (0.5..0.8).contains(&y) { -0.4 } else { 0.0 };
            floor + bump + rng.gen_range(-0.002..0.002)
        })
        .collect();
    DepthMap::new(w, h, data).expect("sized depth")
}

pub fn rgb_scene(w: usize, h: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let inside = (x as usize * 5 / w == 2) && (y as usize * 5 / h == 2);
        let base: [u8; 3] = if inside { [210, 40, 40] } else { [120, 120, 110] };
        image::Rgb(base.map(|c| c.saturating_add(rng.gen_range(0..8))))
    })
}

pub fn intrinsics(w: usize, h: usize) -> CameraIntrinsics {
    let f = 525.0 * w as f64 / 640.0;
    CameraIntrinsics {
        fx: f,
        fy: f,
        cx: (w as f64 - 1.0) / 2.0,
        cy: (h as f64 - 1.0) / 2.0,
    }
}

/// Saliency map correlated with a centered square mask.
pub fn scored_mask(w: usize, h: usize, seed: u64) -> (SalMap, Mask) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gt: Vec<bool> = (0..w * h)
        .map(|i| ((i % w) * 3 / w == 1) && ((i / w) * 3 / h == 1))
        .collect();
    let s: Vec<f64> = gt
        .iter()
        .map(|&g| rng.gen_range(0.0..0.8) + if g { 0.2 } else { 0.0 })
        .collect();
    (
        SalMap::try_from_grid(Grid::new(w, h, s).expect("sized map")).expect("values in range"),
        Mask::new(w, h, gt).expect("sized mask"),
    )
}
