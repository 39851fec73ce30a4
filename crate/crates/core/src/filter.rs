//! Resampling and smoothing kernels shared by the saliency stages.

use crate::error::{Error, Result};
use crate::map::Grid;

/// Bilinear upsampling with corner alignment: source corners land exactly
/// on target corners. Only enlargement (or identity) is supported.
pub fn upsample_bilinear(src: &Grid, width: usize, height: usize) -> Result<Grid> {
    if width < src.width() || height < src.height() {
        return Err(Error::InvalidArgument(format!(
            "upsampling target {width}x{height} is smaller than source {}x{}",
            src.width(),
            src.height()
        )));
    }
    if src.is_empty() {
        return Err(Error::InvalidArgument("cannot upsample an empty grid".into()));
    }
    if width == src.width() && height == src.height() {
        return Ok(src.clone());
    }
    let xs = axis_weights(src.width(), width, true);
    let ys = axis_weights(src.height(), height, true);
    Ok(sample(src, &xs, &ys))
}

/// Bilinear upsampling with cell-centered alignment, for grids whose cells
/// each cover `scale` x `scale` target pixels. Borders are clamped.
pub fn upsample_cells(src: &Grid, width: usize, height: usize) -> Grid {
    let xs = axis_weights(src.width(), width, false);
    let ys = axis_weights(src.height(), height, false);
    sample(src, &xs, &ys)
}

#[derive(Clone, Copy)]
struct Tap {
    i0: usize,
    i1: usize,
    t: f64,
}

fn axis_weights(n_src: usize, n_dst: usize, align_corners: bool) -> Vec<Tap> {
    (0..n_dst)
        .map(|i| {
            let pos = if align_corners {
                if n_dst > 1 {
                    i as f64 * (n_src - 1) as f64 / (n_dst - 1) as f64
                } else {
                    0.0
                }
            } else {
                ((i as f64 + 0.5) * n_src as f64 / n_dst as f64 - 0.5).clamp(0.0, (n_src - 1) as f64)
            };
            let i0 = (pos.floor() as usize).min(n_src - 1);
            let i1 = (i0 + 1).min(n_src - 1);
            Tap { i0, i1, t: pos - i0 as f64 }
        })
        .collect()
}

fn sample(src: &Grid, xs: &[Tap], ys: &[Tap]) -> Grid {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for ty in ys {
        for tx in xs {
            let a = src.get(tx.i0, ty.i0);
            let b = src.get(tx.i1, ty.i0);
            let c = src.get(tx.i0, ty.i1);
            let d = src.get(tx.i1, ty.i1);
            let top = a + (b - a) * tx.t;
            let bottom = c + (d - c) * tx.t;
            out.push(top + (bottom - top) * ty.t);
        }
    }
    Grid::new(xs.len(), ys.len(), out).expect("sized from taps")
}

/// Separable Gaussian smoothing truncated at three standard deviations,
/// with replicated borders.
pub fn gaussian_blur(src: &Grid, sigma: f64) -> Grid {
    if sigma <= 0.0 || src.is_empty() {
        return src.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, h) = (src.width() as isize, src.height() as isize);
    let clamp = |i: isize, n: isize| i.clamp(0, n - 1) as usize;
    let mut tmp = Grid::zeros(src.width(), src.height());
    for y in 0..h {
        for x in 0..w {
            let acc: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, &wk)| wk * src.get(clamp(x + k as isize - radius, w), y as usize))
                .sum();
            tmp.set(x as usize, y as usize, acc);
        }
    }
    let mut out = Grid::zeros(src.width(), src.height());
    for y in 0..h {
        for x in 0..w {
            let acc: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, &wk)| wk * tmp.get(x as usize, clamp(y + k as isize - radius, h)))
                .sum();
            out.set(x as usize, y as usize, acc);
        }
    }
    out
}

/// Square median filter of odd side `window`, replicated borders.
pub fn median_filter(src: &Grid, window: usize) -> Grid {
    assert!(window % 2 == 1, "median window must be odd");
    let r = (window / 2) as isize;
    let (w, h) = (src.width() as isize, src.height() as isize);
    let mut buf = Vec::with_capacity(window * window);
    Grid::from_fn(src.width(), src.height(), |x, y| {
        buf.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                let sx = (x as isize + dx).clamp(0, w - 1) as usize;
                let sy = (y as isize + dy).clamp(0, h - 1) as usize;
                buf.push(src.get(sx, sy));
            }
        }
        let mid = buf.len() / 2;
        *buf.select_nth_unstable_by(mid, |a, b| a.total_cmp(b)).1
    })
}
