use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use salient_core::eval::{evaluate_dataset, roc_auc, roc_auc_with};
use salient_core::{Grid, Mask, SalMap};

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
fn mann_whitney(s: &[f64], gt: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &a) in s.iter().enumerate() {
        if !gt[i] {
            continue;
        }
        for (j, &b) in s.iter().enumerate() {
            if gt[j] {
                continue;
            }
            pairs += 1.0;
            if a > b {
                wins += 1.0;
            } else if a == b {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn instance(rng: &mut ChaCha8Rng, side: usize) -> (SalMap, Mask) {
    loop {
        let gt: Vec<bool> = (0..side * side).map(|_| rng.gen_bool(0.4)).collect();
        if gt.iter().any(|&g| g) && gt.iter().any(|&g| !g) {
            let s: Vec<f64> = gt
                .iter()
                .map(|&g| (rng.gen_range(0.0f64..1.0) + if g { 0.3 } else { 0.0 }).min(1.0))
                .collect();
            let map = SalMap::try_from_grid(Grid::new(side, side, s).unwrap()).unwrap();
            return (map, Mask::new(side, side, gt).unwrap());
        }
    }
}

#[test]
fn sweep_matches_pairwise_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let (s, gt) = instance(&mut rng, 8);
        let (_, auc) = roc_auc(&s, &gt).unwrap();
        let mw = mann_whitney(s.as_slice(), gt.as_slice());
        assert!((auc - mw).abs() <= 1.0 / 256.0, "{auc} vs {mw}");
    }
}

#[test]
fn fine_sweep_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let (s, gt) = instance(&mut rng, 32);
        let (_, auc) = roc_auc_with(&s, &gt, 4096).unwrap();
        let mw = mann_whitney(s.as_slice(), gt.as_slice());
        assert!((auc - mw).abs() <= 1e-3, "{auc} vs {mw}");
    }
}

#[test]
fn eight_bit_maps_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let (s, gt) = instance(&mut rng, 8);
        let q = SalMap::try_from_grid(s.grid().map(|v| (v * 255.0).round() / 255.0)).unwrap();
        let (_, auc) = roc_auc(&q, &gt).unwrap();
        assert!((auc - mann_whitney(q.as_slice(), gt.as_slice())).abs() < 1e-12);
    }
}

#[test]
fn perfect_and_constant_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (_, gt) = instance(&mut rng, 8);
    let perfect = SalMap::try_from_grid(Grid::new(8, 8, gt.as_slice().iter().map(|&g| g as u8 as f64).collect()).unwrap())
        .unwrap();
    assert_eq!(roc_auc(&perfect, &gt).unwrap().1, 1.0);
    for c in [0.0, 0.37, 1.0] {
        let flat = SalMap::try_from_grid(Grid::filled(8, 8, c)).unwrap();
        assert_eq!(roc_auc(&flat, &gt).unwrap().1, 0.5);
    }
}

#[test]
fn report_order_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut pairs: Vec<(String, SalMap, Mask)> = (0..12)
        .map(|i| {
            let (s, m) = instance(&mut rng, 8);
            (format!("{i:04}"), s, m)
        })
        .collect();
    let a = evaluate_dataset(&pairs, 256).unwrap();
    pairs.reverse();
    pairs.swap(2, 7);
    let b = evaluate_dataset(&pairs, 256).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.mean_auc(), b.mean_auc());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_transform_changes_little(seed in any::<u64>(), gamma in 0.3f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, gt) = instance(&mut rng, 8);
        let t = SalMap::try_from_grid(s.grid().map(|v| v.powf(gamma))).unwrap();
        let (_, a) = roc_auc(&s, &gt).unwrap();
        let (_, b) = roc_auc(&t, &gt).unwrap();
        prop_assert!((a - b).abs() <= 1.0 / 256.0, "{} vs {}", a, b);
    }

    #[test]
    fn auc_is_bounded_and_curve_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s, gt) = instance(&mut rng, 8);
        let (c, auc) = roc_auc(&s, &gt).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc));
        prop_assert!(c.points.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    }
}
