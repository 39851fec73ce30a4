//! ROC/AUC benchmarking against binary ground truth.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::{ensure_same_extent, Mask, SalMap};

pub const DEFAULT_THRESHOLDS: usize = 256;

/// Points ordered from `(0, 0)` to `(1, 1)`. `thresholds[i]` produced
/// `points[i]`; the two sentinel endpoints carry `+inf` and `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
}

impl RocCurve {
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
            .sum()
    }
}

/// Number of thresholds `i / (n - 1)` that are `<= s`, minus one.
fn bin_of(s: f64, n: usize) -> usize {
    let last = n - 1;
    let t = |i: usize| i as f64 / last as f64;
    let mut k = ((s * last as f64).floor().max(0.0) as usize).min(last);
    while k < last && t(k + 1) <= s {
        k += 1;
    }
    while k > 0 && t(k) > s {
        k -= 1;
    }
    k
}

/// Sweeps `thresholds` uniform thresholds over `[0, 1]`, predicting positive
/// where `s >= t`.
pub fn roc_auc_with(s: &SalMap, gt: &Mask, thresholds: usize) -> Result<(RocCurve, f64)> {
    ensure_same_extent(gt.width(), gt.height(), s.width(), s.height())?;
    if thresholds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 thresholds, got {thresholds}")));
    }
    let pos = gt.count_positive();
    let neg = gt.as_slice().len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassMask(format!(
            "ground truth has {pos} positive and {neg} negative pixels"
        )));
    }
    let mut pos_hist = vec![0usize; thresholds];
    let mut neg_hist = vec![0usize; thresholds];
    for (&v, &g) in s.as_slice().iter().zip(gt.as_slice()) {
        let k = bin_of(v, thresholds);
        if g {
            pos_hist[k] += 1;
        } else {
            neg_hist[k] += 1;
        }
    }
    let mut points = Vec::with_capacity(thresholds + 2);
    let mut ts = Vec::with_capacity(thresholds + 2);
    points.push((0.0, 0.0));
    ts.push(f64::INFINITY);
    let (mut tp, mut fp) = (0usize, 0usize);
    for i in (0..thresholds).rev() {
        tp += pos_hist[i];
        fp += neg_hist[i];
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        ts.push(i as f64 / (thresholds - 1) as f64);
    }
    points.push((1.0, 1.0));
    ts.push(f64::NEG_INFINITY);
    let curve = RocCurve { points, thresholds: ts };
    let auc = curve.area();
    Ok((curve, auc))
}

pub fn roc_auc(s: &SalMap, gt: &Mask) -> Result<(RocCurve, f64)> {
    roc_auc_with(s, gt, DEFAULT_THRESHOLDS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageScore {
    pub image_id: String,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedImage {
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkReport {
    /// Sorted by image id.
    pub scores: Vec<ImageScore>,
    pub skipped: Vec<SkippedImage>,
    /// Wall-clock seconds per processed frame, when known.
    pub runtimes: Vec<f64>,
}

impl BenchmarkReport {
    pub fn mean_auc(&self) -> Option<f64> {
        if self.scores.is_empty() {
            return None;
        }
        Some(self.scores.iter().map(|s| s.auc).sum::<f64>() / self.scores.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,auc\n");
        for s in &self.scores {
            let _ = writeln!(out, "{},{}", s.image_id, s.auc);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "images evaluated: {}", self.scores.len());
        let _ = writeln!(out, "images skipped: {}", self.skipped.len());
        match self.mean_auc() {
            Some(m) => {
                let _ = writeln!(out, "mean AUC: {m:.4}");
            }
            None => out.push_str("mean AUC: n/a\n"),
        }
        if !self.runtimes.is_empty() {
            let total: f64 = self.runtimes.iter().sum();
            let max = self.runtimes.iter().cloned().fold(0.0, f64::max);
            let _ = writeln!(
                out,
                "runtime per frame: mean {:.3} s, max {:.3} s",
                total / self.runtimes.len() as f64,
                max
            );
        }
        for s in &self.skipped {
            let _ = writeln!(out, "skipped {}: {}", s.image_id, s.reason);
        }
        out
    }
}

/// Scores every `(id, map, mask)` triple. Pairs that cannot be scored are
/// listed in `skipped`.
pub fn evaluate_dataset(pairs: &[(String, SalMap, Mask)], thresholds: usize) -> Result<BenchmarkReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no image pairs to evaluate".into()));
    }
    let results: Vec<(String, Result<f64>)> = pairs
        .par_iter()
        .map(|(id, s, m)| (id.clone(), roc_auc_with(s, m, thresholds).map(|(_, a)| a)))
        .collect();
    let mut report = BenchmarkReport::default();
    for (image_id, r) in results {
        match r {
            Ok(auc) => report.scores.push(ImageScore { image_id, auc }),
            Err(e) => report.skipped.push(SkippedImage {
                image_id,
                reason: e.to_string(),
            }),
        }
    }
    report.scores.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    report.skipped.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    Ok(report)
}
