//! Top-down color saliency pooled from segmentation score maps and
//! guided-backprop gradient tensors.

use crate::error::{Error, Result};
use crate::filter::upsample_bilinear;
use crate::map::{ensure_same_extent, minmax_normalize, Grid, SalMap};

/// Standard deviations below this are treated as a flat score map.
pub const SIGMA_GUARD: f64 = 1e-12;

/// Default gain applied before the `tanh` squashing of gradient maps.
pub const DEFAULT_GBP_GAIN: f64 = 3.0;

/// Per-class objectness score maps with an optional background map.
#[derive(Debug, Clone)]
pub struct ScoreMapStack {
    classes: Vec<Grid>,
    background: Option<Grid>,
    stats: Vec<ClassStats>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
}

impl ClassStats {
    fn of(g: &Grid) -> Self {
        let n = g.len() as f64;
        let mean = g.as_slice().iter().sum::<f64>() / n;
        let var = g.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std_dev: var.sqrt(),
        }
    }
}

impl ScoreMapStack {
    pub fn new(classes: Vec<Grid>, background: Option<Grid>) -> Result<Self> {
        let first = classes
            .first()
            .ok_or_else(|| Error::InvalidArgument("score stack needs at least one class".into()))?;
        let (w, h) = (first.width(), first.height());
        if w * h == 0 {
            return Err(Error::InvalidArgument("score maps must be non-empty".into()));
        }
        for g in classes.iter().chain(background.iter()) {
            ensure_same_extent(w, h, g.width(), g.height())?;
            g.check_finite()?;
        }
        let stats = classes.iter().map(ClassStats::of).collect();
        Ok(Self {
            classes,
            background,
            stats,
        })
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn width(&self) -> usize {
        self.classes[0].width()
    }

    pub fn height(&self) -> usize {
        self.classes[0].height()
    }

    pub fn class_map(&self, c: usize) -> &Grid {
        &self.classes[c]
    }

    pub fn background(&self) -> Option<&Grid> {
        self.background.as_ref()
    }

    pub fn stats(&self) -> &[ClassStats] {
        &self.stats
    }
}

/// `x^e` on `[0, 1]` with `0^0` defined as `0`.
#[inline]
pub(crate) fn pow_zero_suppressed(base: f64, exponent: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        base.powf(exponent)
    }
}

/// Per-pixel amplification exponent: the square root of the normalized
/// maximum squared z-score across classes.
pub fn objectness_lambda(s: &ScoreMapStack) -> Result<SalMap> {
    let mut best = Grid::zeros(s.width(), s.height());
    for (g, st) in s.classes.iter().zip(&s.stats) {
        if st.std_dev < SIGMA_GUARD {
            continue;
        }
        for (b, &o) in best.as_mut_slice().iter_mut().zip(g.as_slice()) {
            let z = (o - st.mean) / st.std_dev;
            *b = b.max(z * z);
        }
    }
    let normalized = minmax_normalize(&best)?;
    Ok(SalMap::from_grid_unchecked(normalized.into_grid().map(f64::sqrt)))
}

/// Objectness saliency: the normalized class-mean score map raised to the
/// per-pixel amplification exponent.
pub fn objectness_saliency(s: &ScoreMapStack) -> Result<SalMap> {
    let lambda = objectness_lambda(s)?;
    let mut mean = Grid::zeros(s.width(), s.height());
    for g in &s.classes {
        for (m, &o) in mean.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *m += o;
        }
    }
    let c = s.class_count() as f64;
    mean.as_mut_slice().iter_mut().for_each(|m| *m /= c);
    let base = minmax_normalize(&mean)?;
    let out = base.grid().zip_with(lambda.grid(), pow_zero_suppressed)?;
    Ok(SalMap::from_grid_unchecked(out))
}

/// Non-objectness saliency: the negated background likelihood, rescaled.
pub fn nonobjectness_saliency(s: &ScoreMapStack) -> Result<SalMap> {
    let bg = s
        .background
        .as_ref()
        .ok_or_else(|| Error::Missing("background (non-objectness) score map".into()))?;
    minmax_normalize(&bg.map(|v| -v))
}

/// A `channels x height x width` tensor, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ChannelTensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "gradient tensor extents must be positive, got [{channels}, {height}, {width}]"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::InvalidArgument(format!(
                "gradient tensor [{channels}, {height}, {width}] needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channel(&self, k: usize) -> Grid {
        let n = self.height * self.width;
        Grid::new(self.width, self.height, self.data[k * n..(k + 1) * n].to_vec()).expect("channel slice")
    }
}

/// Gradients of one network layer, one tensor per top-ranked class.
#[derive(Debug, Clone)]
pub struct GradientLayer {
    pub id: u32,
    pub per_class: Vec<ChannelTensor>,
}

/// Guided-backprop gradient magnitudes for the top-ranked classes.
#[derive(Debug, Clone)]
pub struct GradientStack {
    class_labels: Vec<String>,
    layers: Vec<GradientLayer>,
}

impl GradientStack {
    /// Builds a stack; signed gradients are rectified to magnitudes.
    pub fn new(class_labels: Vec<String>, mut layers: Vec<GradientLayer>) -> Result<Self> {
        for layer in &mut layers {
            if layer.per_class.len() != class_labels.len() {
                return Err(Error::InvalidArgument(format!(
                    "layer {} holds {} class tensors for {} classes",
                    layer.id,
                    layer.per_class.len(),
                    class_labels.len()
                )));
            }
            if let Some(first) = layer.per_class.first() {
                let (k, h, w) = (first.channels, first.height, first.width);
                if layer.per_class.iter().any(|t| (t.channels, t.height, t.width) != (k, h, w)) {
                    return Err(Error::InvalidArgument(format!(
                        "layer {} has inconsistent tensor extents across classes",
                        layer.id
                    )));
                }
            }
            for t in &mut layer.per_class {
                t.data.iter_mut().for_each(|v| *v = v.abs());
            }
        }
        let mut ids: Vec<u32> = layers.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != layers.len() {
            return Err(Error::InvalidArgument("duplicate layer id in gradient stack".into()));
        }
        Ok(Self { class_labels, layers })
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn class_count(&self) -> usize {
        self.class_labels.len()
    }

    pub fn layers(&self) -> &[GradientLayer] {
        &self.layers
    }

    pub fn layer(&self, id: u32) -> Option<&GradientLayer> {
        self.layers.iter().find(|l| l.id == id)
    }
}

/// Upsamples every channel of one (layer, class) tensor to the target
/// extent and keeps the per-pixel channel maximum.
pub fn gbp_upsample_max(g: &GradientStack, layer: u32, class: usize, width: usize, height: usize) -> Result<Grid> {
    let l = g
        .layer(layer)
        .ok_or_else(|| Error::Missing(format!("gradient layer {layer}")))?;
    let t = l
        .per_class
        .get(class)
        .ok_or_else(|| Error::Missing(format!("class rank {class} in gradient layer {layer}")))?;
    let mut best: Option<Grid> = None;
    for k in 0..t.channels {
        let up = upsample_bilinear(&t.channel(k), width, height)?;
        best = Some(match best {
            None => up,
            Some(b) => b.zip_with(&up, f64::max)?,
        });
    }
    Ok(best.expect("channel count is positive"))
}

/// Class map: the mean over layers of `tanh(gain * m)`.
pub fn gbp_class_map(g: &GradientStack, class: usize, gain: f64, width: usize, height: usize) -> Result<Grid> {
    if g.layers.is_empty() {
        return Err(Error::InvalidArgument("gradient stack has no layers".into()));
    }
    let mut acc = Grid::zeros(width, height);
    for layer in &g.layers {
        let m = gbp_upsample_max(g, layer.id, class, width, height)?;
        for (a, &v) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *a += (gain * v).tanh();
        }
    }
    let n = g.layers.len() as f64;
    acc.as_mut_slice().iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Mean of the top-`k` class maps, normalized to `[0, 1]`.
pub fn gbp_saliency(g: &GradientStack, k: usize, gain: f64, width: usize, height: usize) -> Result<SalMap> {
    if k == 0 {
        return Err(Error::InvalidArgument("top-class count must be at least 1".into()));
    }
    if g.class_count() < k {
        return Err(Error::InvalidArgument(format!(
            "gradient stack holds {} classes, {k} requested",
            g.class_count()
        )));
    }
    let mut acc = Grid::zeros(width, height);
    for c in 0..k {
        let m = gbp_class_map(g, c, gain, width, height)?;
        for (a, &v) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *a += v;
        }
    }
    acc.as_mut_slice().iter_mut().for_each(|a| *a /= k as f64);
    minmax_normalize(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(v: &[f64]) -> Grid {
        Grid::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn lambda_uniform_single_class_is_zero() {
        let s = ScoreMapStack::new(vec![row(&[3.0, 3.0, 3.0])], None).unwrap();
        assert_eq!(objectness_lambda(&s).unwrap().as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn lambda_two_equal_classes() {
        let s = ScoreMapStack::new(vec![row(&[1.0, 0.0]), row(&[1.0, 0.0])], None).unwrap();
        assert_eq!(objectness_lambda(&s).unwrap().as_slice(), &[1.0, 1.0]);
        assert_eq!(objectness_saliency(&s).unwrap().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn lambda_ramp_and_zero_exponent() {
        let s = ScoreMapStack::new(vec![row(&[0.0, 1.0, 2.0])], None).unwrap();
        let st = s.stats()[0];
        assert!((st.std_dev - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let l = objectness_lambda(&s).unwrap();
        for (a, b) in l.as_slice().iter().zip([1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-9);
        }
        let o = objectness_saliency(&s).unwrap();
        for (a, b) in o.as_slice().iter().zip([0.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_constant_classes_give_constant_map() {
        let s = ScoreMapStack::new(vec![row(&[2.0, 2.0]), row(&[2.0, 2.0])], None).unwrap();
        let o = objectness_saliency(&s).unwrap();
        assert_eq!(o.as_slice()[0], o.as_slice()[1]);
    }

    #[test]
    fn mismatched_extents_rejected() {
        assert!(ScoreMapStack::new(vec![row(&[1.0, 2.0]), row(&[1.0])], None).is_err());
        assert!(ScoreMapStack::new(vec![], None).is_err());
    }

    #[test]
    fn nonobjectness_examples() {
        let s = ScoreMapStack::new(vec![row(&[0.0, 0.0])], Some(row(&[0.2, 0.9]))).unwrap();
        assert_eq!(nonobjectness_saliency(&s).unwrap().as_slice(), &[1.0, 0.0]);
        let s = ScoreMapStack::new(vec![row(&[0.0, 0.0])], Some(row(&[0.0, 1.0]))).unwrap();
        assert_eq!(nonobjectness_saliency(&s).unwrap().as_slice(), &[1.0, 0.0]);
        let s = ScoreMapStack::new(vec![row(&[0.0, 0.0])], Some(row(&[-0.5, -0.5]))).unwrap();
        assert_eq!(nonobjectness_saliency(&s).unwrap().as_slice(), &[1.0, 1.0]);
        let s = ScoreMapStack::new(vec![row(&[0.0, 0.0])], Some(row(&[0.5, 0.5]))).unwrap();
        assert_eq!(nonobjectness_saliency(&s).unwrap().as_slice(), &[0.0, 0.0]);
        let s = ScoreMapStack::new(vec![row(&[0.0, 0.0])], None).unwrap();
        assert!(matches!(nonobjectness_saliency(&s), Err(Error::Missing(_))));
    }

    fn stack(layers: Vec<(u32, Vec<ChannelTensor>)>, labels: usize) -> GradientStack {
        GradientStack::new(
            (0..labels).map(|i| format!("c{i}")).collect(),
            layers
                .into_iter()
                .map(|(id, per_class)| GradientLayer { id, per_class })
                .collect(),
        )
        .unwrap()
    }

    fn constant(k: usize, v: f64, h: usize, w: usize) -> ChannelTensor {
        ChannelTensor::new(k, h, w, vec![v; k * h * w]).unwrap()
    }

    #[test]
    fn upsample_max_of_constants() {
        let t = ChannelTensor::new(3, 1, 1, vec![0.1, 0.5, 0.3]).unwrap();
        let g = stack(vec![(3, vec![t])], 1);
        let m = gbp_upsample_max(&g, 3, 0, 4, 4).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn upsample_identity_and_bilinear_center() {
        let t = ChannelTensor::new(1, 2, 2, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let g = stack(vec![(3, vec![t])], 1);
        let same = gbp_upsample_max(&g, 3, 0, 2, 2).unwrap();
        assert_eq!(same.as_slice(), &[0.0, 0.0, 0.0, 1.0]);
        let up = gbp_upsample_max(&g, 3, 0, 3, 3).unwrap();
        assert!((up.get(1, 1) - 0.25).abs() < 1e-12);
        assert!(gbp_upsample_max(&g, 3, 0, 1, 1).is_err());
        assert!(gbp_upsample_max(&g, 4, 0, 2, 2).is_err());
    }

    #[test]
    fn class_map_tanh_values() {
        let g = stack(vec![(3, vec![constant(2, 0.0, 2, 2)])], 1);
        assert!(gbp_class_map(&g, 0, 3.0, 2, 2).unwrap().as_slice().iter().all(|&v| v == 0.0));

        let g = stack(vec![(5, vec![constant(1, 1.0, 2, 2)])], 1);
        let one = gbp_class_map(&g, 0, 3.0, 2, 2).unwrap();
        assert!(one.as_slice().iter().all(|&v| (v - 0.995054753686730).abs() < 1e-12));

        let g = stack(vec![(3, vec![constant(1, 1.0, 2, 2)]), (4, vec![constant(1, 0.0, 2, 2)])], 1);
        let half = gbp_class_map(&g, 0, 3.0, 2, 2).unwrap();
        assert!(half.as_slice().iter().all(|&v| (v - 0.497527376843365).abs() < 1e-12));

        let empty = GradientStack::new(vec!["a".into()], vec![]).unwrap();
        assert!(gbp_class_map(&empty, 0, 3.0, 2, 2).is_err());
    }

    #[test]
    fn saliency_of_two_opposite_classes_is_degenerate() {
        let a = ChannelTensor::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let b = ChannelTensor::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
        let g = stack(vec![(3, vec![a, b])], 2);
        let s = gbp_saliency(&g, 2, 3.0, 2, 1).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 1.0]);
        assert!(gbp_saliency(&g, 0, 3.0, 2, 1).is_err());
        assert!(gbp_saliency(&g, 3, 3.0, 2, 1).is_err());
    }

    #[test]
    fn signed_gradients_are_rectified() {
        let t = ChannelTensor::new(1, 1, 2, vec![-0.5, 0.25]).unwrap();
        let g = stack(vec![(3, vec![t])], 1);
        let m = gbp_upsample_max(&g, 3, 0, 2, 1).unwrap();
        assert_eq!(m.as_slice(), &[0.5, 0.25]);
    }

    proptest! {
        #[test]
        fn lambda_invariant_under_per_class_affine(
            a in prop::collection::vec(-3.0f64..3.0, 6),
            b in prop::collection::vec(-3.0f64..3.0, 6),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let s1 = ScoreMapStack::new(vec![Grid::new(3, 2, a.clone()).unwrap(), Grid::new(3, 2, b.clone()).unwrap()], None).unwrap();
            let a2: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
            let s2 = ScoreMapStack::new(vec![Grid::new(3, 2, a2).unwrap(), Grid::new(3, 2, b).unwrap()], None).unwrap();
            let l1 = objectness_lambda(&s1).unwrap();
            let l2 = objectness_lambda(&s2).unwrap();
            for (x, y) in l1.as_slice().iter().zip(l2.as_slice()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn outputs_in_unit_interval(a in prop::collection::vec(-50.0f64..50.0, 8), bg in prop::collection::vec(-5.0f64..5.0, 8)) {
            let s = ScoreMapStack::new(vec![Grid::new(4, 2, a).unwrap()], Some(Grid::new(4, 2, bg).unwrap())).unwrap();
            for m in [objectness_lambda(&s).unwrap(), objectness_saliency(&s).unwrap(), nonobjectness_saliency(&s).unwrap()] {
                prop_assert!(m.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn class_map_is_monotone(m in prop::collection::vec(0.0f64..2.0, 4), bump in prop::collection::vec(0.0f64..1.0, 4)) {
            let hi: Vec<f64> = m.iter().zip(&bump).map(|(a, b)| a + b).collect();
            let lo = stack(vec![(3, vec![ChannelTensor::new(1, 2, 2, m).unwrap()])], 1);
            let up = stack(vec![(3, vec![ChannelTensor::new(1, 2, 2, hi).unwrap()])], 1);
            let g_lo = gbp_class_map(&lo, 0, 3.0, 3, 3).unwrap();
            let g_hi = gbp_class_map(&up, 0, 3.0, 3, 3).unwrap();
            for (a, b) in g_lo.as_slice().iter().zip(g_hi.as_slice()) {
                prop_assert!(a <= b);
            }
        }

        #[test]
        fn channel_permutation_does_not_matter(data in prop::collection::vec(0.0f64..1.0, 12)) {
            let mut swapped = data[4..8].to_vec();
            swapped.extend_from_slice(&data[8..12]);
            swapped.extend_from_slice(&data[0..4]);
            let a = stack(vec![(3, vec![ChannelTensor::new(3, 2, 2, data).unwrap()])], 1);
            let b = stack(vec![(3, vec![ChannelTensor::new(3, 2, 2, swapped).unwrap()])], 1);
            prop_assert_eq!(gbp_upsample_max(&a, 3, 0, 5, 4).unwrap(), gbp_upsample_max(&b, 3, 0, 5, 4).unwrap());
        }
    }
}
