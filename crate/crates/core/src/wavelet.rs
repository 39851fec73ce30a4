//! Bottom-up color saliency from multi-scale wavelet detail energy.
//!
//! Each opponent-color channel (CIE L*, a*, b*) is decomposed with an
//! undecimated Daubechies-4 transform using half-sample symmetric extension.
//! For every level, the detail bands of that level alone are inverted back
//! to full resolution. Analysis followed by synthesis is convolution with
//! the filters' autocorrelation, so these detail images are zero-phase and
//! shift with the input. The squared sum across channels is the level's
//! feature energy. The local map sums the energies over levels. The global map
//! scores each pixel by the negative log-likelihood of its energy under a
//! per-level 64-bin histogram, summed over levels (the log of a product of
//! per-level probabilities). The output is `F(F(local) * exp(F(global)))`.
//!
//! [`WaveletPyramid`] is the decimated counterpart, for callers that want
//! the dyadic bands themselves.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::{minmax_normalize, Grid, SalMap};

pub use image::RgbImage;

pub const DEFAULT_LEVELS: usize = 4;
pub const HISTOGRAM_BINS: usize = 64;

/// Feature energies below this are treated as exactly zero.
const ENERGY_FLOOR: f64 = 1e-12;

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn d4_lowpass() -> [f64; 4] {
    let norm = 4.0 * std::f64::consts::SQRT_2;
    [
        (1.0 + SQRT3) / norm,
        (3.0 + SQRT3) / norm,
        (3.0 - SQRT3) / norm,
        (1.0 - SQRT3) / norm,
    ]
}

fn d4_highpass() -> [f64; 4] {
    let h = d4_lowpass();
    [h[3], -h[2], h[1], -h[0]]
}

/// Half-sample symmetric extension index.
#[inline]
fn reflect(j: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = j.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

#[inline]
fn half(n: usize) -> usize {
    n.div_ceil(2)
}

/// One-dimensional analysis over a strided line.
fn analyze_line(x: &[f64], lo: &mut [f64], hi: &mut [f64]) {
    let (h, g) = (d4_lowpass(), d4_highpass());
    let n = x.len();
    for i in 0..lo.len() {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..4 {
            let v = x[reflect(2 * i as isize + k as isize - 1, n)];
            a += h[k] * v;
            d += g[k] * v;
        }
        lo[i] = a;
        hi[i] = d;
    }
}

/// Adjoint of [`analyze_line`]; exact inverse away from the borders.
fn synthesize_line(lo: &[f64], hi: &[f64], x: &mut [f64]) {
    let (h, g) = (d4_lowpass(), d4_highpass());
    let n = x.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..lo.len() {
        for k in 0..4 {
            x[reflect(2 * i as isize + k as isize - 1, n)] += h[k] * lo[i] + g[k] * hi[i];
        }
    }
}

/// Bands produced by one decomposition level.
#[derive(Debug, Clone)]
pub struct WaveletLevel {
    /// Extent of the plane this level decomposed.
    pub width: usize,
    pub height: usize,
    /// Low in x, high in y.
    pub horizontal: Vec<f64>,
    /// High in x, low in y.
    pub vertical: Vec<f64>,
    pub diagonal: Vec<f64>,
}

impl WaveletLevel {
    pub fn band_extent(&self) -> (usize, usize) {
        (half(self.width), half(self.height))
    }
}

/// Dyadic decomposition of one channel.
#[derive(Debug, Clone)]
pub struct WaveletPyramid {
    pub levels: Vec<WaveletLevel>,
    pub approximation: Vec<f64>,
}

fn analyze_2d(plane: &[f64], w: usize, h: usize) -> (Vec<f64>, WaveletLevel) {
    let (mw, mh) = (half(w), half(h));
    let mut row_lo = vec![0.0; mw * h];
    let mut row_hi = vec![0.0; mw * h];
    for y in 0..h {
        analyze_line(
            &plane[y * w..(y + 1) * w],
            &mut row_lo[y * mw..(y + 1) * mw],
            &mut row_hi[y * mw..(y + 1) * mw],
        );
    }
    let split_columns = |src: &[f64]| {
        let mut lo = vec![0.0; mw * mh];
        let mut hi = vec![0.0; mw * mh];
        let mut col = vec![0.0; h];
        let (mut cl, mut ch) = (vec![0.0; mh], vec![0.0; mh]);
        for x in 0..mw {
            for y in 0..h {
                col[y] = src[y * mw + x];
            }
            analyze_line(&col, &mut cl, &mut ch);
            for y in 0..mh {
                lo[y * mw + x] = cl[y];
                hi[y * mw + x] = ch[y];
            }
        }
        (lo, hi)
    };
    let (ll, lh) = split_columns(&row_lo);
    let (hl, hh) = split_columns(&row_hi);
    (
        ll,
        WaveletLevel {
            width: w,
            height: h,
            horizontal: lh,
            vertical: hl,
            diagonal: hh,
        },
    )
}

fn synthesize_2d(ll: &[f64], lh: &[f64], hl: &[f64], hh: &[f64], w: usize, h: usize) -> Vec<f64> {
    let (mw, mh) = (half(w), half(h));
    let merge_columns = |lo: &[f64], hi: &[f64]| {
        let mut out = vec![0.0; mw * h];
        let (mut cl, mut ch) = (vec![0.0; mh], vec![0.0; mh]);
        let mut col = vec![0.0; h];
        for x in 0..mw {
            for y in 0..mh {
                cl[y] = lo[y * mw + x];
                ch[y] = hi[y * mw + x];
            }
            synthesize_line(&cl, &ch, &mut col);
            for y in 0..h {
                out[y * mw + x] = col[y];
            }
        }
        out
    };
    let row_lo = merge_columns(ll, lh);
    let row_hi = merge_columns(hl, hh);
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        synthesize_line(
            &row_lo[y * mw..(y + 1) * mw],
            &row_hi[y * mw..(y + 1) * mw],
            &mut out[y * w..(y + 1) * w],
        );
    }
    out
}

impl WaveletPyramid {
    pub fn decompose(plane: &[f64], width: usize, height: usize, levels: usize) -> Self {
        let mut current = plane.to_vec();
        let (mut w, mut h) = (width, height);
        let mut out = Vec::with_capacity(levels);
        for _ in 0..levels {
            let (ll, level) = analyze_2d(&current, w, h);
            current = ll;
            w = half(w);
            h = half(h);
            out.push(level);
        }
        Self {
            levels: out,
            approximation: current,
        }
    }

    /// Full reconstruction from every band.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut current = self.approximation.clone();
        for level in self.levels.iter().rev() {
            current = synthesize_2d(
                &current,
                &level.horizontal,
                &level.vertical,
                &level.diagonal,
                level.width,
                level.height,
            );
        }
        current
    }

    /// Full-resolution image rebuilt from the detail bands of one level
    /// (zero-based), with every other band zeroed.
    pub fn reconstruct_detail(&self, level: usize) -> Vec<f64> {
        let l = &self.levels[level];
        let zeros = vec![0.0; l.horizontal.len()];
        let mut current = synthesize_2d(&zeros, &l.horizontal, &l.vertical, &l.diagonal, l.width, l.height);
        for finer in self.levels[..level].iter().rev() {
            let z = vec![0.0; finer.horizontal.len()];
            current = synthesize_2d(&current, &z, &z, &z, finer.width, finer.height);
        }
        current
    }
}

/// Autocorrelation of the Daubechies-4 low-pass filter at offsets 0..=3.
/// Analysis followed by synthesis with an orthonormal filter is convolution
/// with this symmetric kernel; the high-pass counterpart alternates signs.
const D4_LOW_AUTOCORR: [f64; 4] = [1.0, 9.0 / 16.0, 0.0, -1.0 / 16.0];

fn autocorr(high: bool) -> [f64; 4] {
    let mut r = D4_LOW_AUTOCORR;
    if high {
        r[1] = -r[1];
        r[3] = -r[3];
    }
    r
}

/// Symmetric-kernel convolution along one axis with taps `dilation` apart.
fn convolve_axis(src: &[f64], w: usize, h: usize, kernel: &[f64; 4], dilation: usize, along_x: bool) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    let (n, lines) = if along_x { (w, h) } else { (h, w) };
    let at = |line: usize, i: usize| if along_x { line * w + i } else { i * w + line };
    for line in 0..lines {
        for i in 0..n {
            let mut acc = kernel[0] * src[at(line, i)];
            for (k, &t) in kernel.iter().enumerate().skip(1) {
                if t != 0.0 {
                    let off = (k * dilation) as isize;
                    let (a, b) = (reflect(i as isize - off, n), reflect(i as isize + off, n));
                    acc += t * (src[at(line, a)] + src[at(line, b)]);
                }
            }
            out[at(line, i)] = 0.5 * acc;
        }
    }
    out
}

fn band(src: &[f64], w: usize, h: usize, high_x: bool, high_y: bool, dilation: usize) -> Vec<f64> {
    let rows = convolve_axis(src, w, h, &autocorr(high_x), dilation, true);
    convolve_axis(&rows, w, h, &autocorr(high_y), dilation, false)
}

/// Undecimated Daubechies-4 decomposition of one plane into per-level
/// detail images at full resolution, plus the coarsest approximation.
///
/// Each detail image equals the detail-only reconstruction of the
/// stationary transform. The detail images and the approximation sum to
/// the input, and mirroring the input mirrors every output.
pub fn stationary_details(plane: &[f64], width: usize, height: usize, levels: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (w, h) = (width, height);
    let mut smooth = plane.to_vec();
    let mut details = Vec::with_capacity(levels);
    for level in 0..levels {
        let dil = 1 << level;
        let mut d = band(&smooth, w, h, false, true, dil);
        for (hx, hy) in [(true, false), (true, true)] {
            d.iter_mut().zip(band(&smooth, w, h, hx, hy, dil)).for_each(|(a, b)| *a += b);
        }
        details.push(d);
        smooth = band(&smooth, w, h, false, false, dil);
    }
    (details, smooth)
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// CIE L*a*b* (D65) planes of an 8-bit sRGB image.
pub fn rgb_to_lab_planes(img: &RgbImage) -> [Vec<f64>; 3] {
    let n = (img.width() * img.height()) as usize;
    let mut planes = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for px in img.pixels() {
        let [r, g, b] = px.0.map(srgb_to_linear);
        let x = (0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b) / 0.950_47;
        let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
        let z = (0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b) / 1.088_83;
        let (fx, fy, fz) = (lab_f(x), lab_f(y), lab_f(z));
        planes[0].push(116.0 * fy - 16.0);
        planes[1].push(500.0 * (fx - fy));
        planes[2].push(200.0 * (fy - fz));
    }
    planes
}

/// Per-level feature energy maps, summed over channels.
pub fn level_energies(planes: &[Vec<f64>], width: usize, height: usize, levels: usize) -> Vec<Vec<f64>> {
    let per_channel: Vec<Vec<Vec<f64>>> = planes
        .par_iter()
        .map(|p| stationary_details(p, width, height, levels).0)
        .collect();
    (0..levels)
        .map(|s| {
            let mut e = vec![0.0; width * height];
            for channel in &per_channel {
                for (acc, v) in e.iter_mut().zip(&channel[s]) {
                    *acc += v * v;
                }
            }
            e.iter_mut().for_each(|v| {
                if *v < ENERGY_FLOOR {
                    *v = 0.0
                }
            });
            e
        })
        .collect()
}

fn histogram_surprise(energy: &[f64], out: &mut [f64]) {
    let (lo, hi) = energy
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        return;
    }
    let bin = |v: f64| (((v - lo) / (hi - lo) * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &v in energy {
        counts[bin(v)] += 1;
    }
    let n = energy.len() as f64;
    for (o, &v) in out.iter_mut().zip(energy) {
        *o -= (counts[bin(v)] as f64 / n).ln();
    }
}

/// Wavelet bottom-up saliency of an RGB image.
pub fn wt_saliency(img: &RgbImage, levels: usize) -> Result<SalMap> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if levels == 0 {
        return Err(Error::InvalidArgument("wavelet level count must be at least 1".into()));
    }
    if levels >= usize::BITS as usize || (1usize << levels) > w.min(h) {
        return Err(Error::InvalidArgument(format!(
            "image {w}x{h} is too small for {levels} dyadic levels"
        )));
    }
    let planes = rgb_to_lab_planes(img);
    let energies = level_energies(&planes, w, h, levels);

    let mut local = vec![0.0; w * h];
    let mut global = vec![0.0; w * h];
    for e in &energies {
        for (l, v) in local.iter_mut().zip(e) {
            *l += v;
        }
        histogram_surprise(e, &mut global);
    }
    let local = minmax_normalize(&Grid::new(w, h, local)?)?;
    let global = minmax_normalize(&Grid::new(w, h, global)?)?;
    let combined = local.grid().zip_with(global.grid(), |l, g| l * g.exp())?;
    minmax_normalize(&combined)
}
