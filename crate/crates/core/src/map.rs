//! Scalar grids, saliency maps and min-max normalization.

use crate::error::{Error, Result};

/// A row-major scalar grid with unbounded values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "grid {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two grids of equal extent.
    pub fn zip_with(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        ensure_same_extent(self.width, self.height, other.width, other.height)?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.data.iter().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Index of the first maximal element as `(x, y)`.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.data.iter().enumerate() {
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| (i % self.width, i / self.width))
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }
}

pub(crate) fn ensure_same_extent(w: usize, h: usize, ow: usize, oh: usize) -> Result<()> {
    if w != ow || h != oh {
        return Err(Error::ExtentMismatch {
            expected_w: w,
            expected_h: h,
            got_w: ow,
            got_h: oh,
        });
    }
    Ok(())
}

/// A saliency map: a grid whose values all lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SalMap(Grid);

impl SalMap {
    /// Wraps a grid, rejecting any value outside `[0, 1]`.
    pub fn try_from_grid(grid: Grid) -> Result<Self> {
        grid.check_finite()?;
        if let Some(&v) = grid.data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRange {
                what: "saliency value",
                value: v,
            });
        }
        Ok(SalMap(grid))
    }

    /// Wraps a grid after clamping into `[0, 1]`.
    pub fn clamped(grid: Grid) -> Self {
        SalMap(grid.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }))
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        SalMap(Grid::zeros(width, height))
    }

    pub fn ones(width: usize, height: usize) -> Self {
        SalMap(Grid::filled(width, height, 1.0))
    }

    pub(crate) fn from_grid_unchecked(grid: Grid) -> Self {
        debug_assert!(grid.data.iter().all(|v| (0.0..=1.0).contains(v)));
        SalMap(grid)
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0.data
    }
}

impl AsRef<Grid> for SalMap {
    fn as_ref(&self) -> &Grid {
        &self.0
    }
}

/// Min-max normalization into `[0, 1]`.
///
/// A constant grid maps to all ones when its value is positive and to all
/// zeros otherwise.
pub fn minmax_normalize(m: &Grid) -> Result<SalMap> {
    m.check_finite()?;
    let Some((lo, hi)) = m.min_max() else {
        return Ok(SalMap(m.clone()));
    };
    if hi > lo {
        let range = hi - lo;
        Ok(SalMap(m.map(|v| ((v - lo) / range).clamp(0.0, 1.0))))
    } else if hi > 0.0 {
        Ok(SalMap::ones(m.width, m.height))
    } else {
        Ok(SalMap::zeros(m.width, m.height))
    }
}

/// Min-max normalization restricted to the entries where `valid` is set;
/// every other entry becomes zero.
pub fn minmax_normalize_masked(m: &Grid, valid: &[bool]) -> Result<SalMap> {
    if valid.len() != m.len() {
        return Err(Error::InvalidArgument("mask length differs from grid".into()));
    }
    let mut bounds: Option<(f64, f64)> = None;
    for (i, (&v, &ok)) in m.data.iter().zip(valid).enumerate() {
        if !ok {
            continue;
        }
        if !v.is_finite() {
            return Err(Error::NonFinite { index: i });
        }
        bounds = Some(match bounds {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
    }
    let Some((lo, hi)) = bounds else {
        return Ok(SalMap::zeros(m.width, m.height));
    };
    let scale = |v: f64| {
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else if hi > 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let data = m
        .data
        .iter()
        .zip(valid)
        .map(|(&v, &ok)| if ok { scale(v) } else { 0.0 })
        .collect();
    Ok(SalMap(Grid {
        width: m.width,
        height: m.height,
        data,
    }))
}

/// A binary ground-truth mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "mask {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Binarizes 8-bit gray levels: values above 127 are foreground.
    pub fn from_gray8(width: usize, height: usize, levels: &[u8]) -> Result<Self> {
        Self::new(width, height, levels.iter().map(|&v| v > 127).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count_positive(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}
