use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texkd::contourlet::{cdm_forward, dfb_decompose, flatten_structural, lp_decompose, lp_reconstruct};
use texkd::statexture::{
    heuristic_levels, quantize, sample_regions, uniform_levels, SamplerConfig, SimilarityMap,
};
use texkd::FeatureMap;

fn map_strategy(max_c: usize, max_side: usize) -> impl Strategy<Value = FeatureMap> {
    (1..=max_c, 2..=max_side, 2..=max_side).prop_flat_map(|(c, h, w)| {
        prop::collection::vec(-10.0f32..10.0, c * h * w)
            .prop_map(move |data| FeatureMap::new(c, h, w, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pyramid_reconstructs(x in map_strategy(3, 64), p in 2usize..=3) {
        prop_assume!(x.height() >= p && x.width() >= p);
        let pair = lp_decompose(&x, p).unwrap();
        let back = lp_reconstruct(&pair, p).unwrap();
        let err = x.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        prop_assert!(err < 1e-5, "error {err}");
    }

    #[test]
    fn directional_bank_is_linear(
        x in map_strategy(2, 12),
        a in -3.0f32..3.0,
        b in -3.0f32..3.0,
        m in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, h, w) = x.shape();
        let y = FeatureMap::from_fn(c, h, w, |_, _, _| rng.random_range(-10.0..10.0)).unwrap();
        let mix = FeatureMap::new(
            c, h, w,
            x.data().iter().zip(y.data()).map(|(&u, &v)| a * u + b * v).collect(),
        ).unwrap();
        let bx = dfb_decompose(&x, m).unwrap();
        let by = dfb_decompose(&y, m).unwrap();
        let bm = dfb_decompose(&mix, m).unwrap();
        for ((u, v), z) in bx.bands.iter().zip(&by.bands).zip(&bm.bands) {
            for ((&p, &q), &r) in u.data().iter().zip(v.data()).zip(z.data()) {
                prop_assert!((a * p + b * q - r).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn full_decomposition_inverts(x in map_strategy(2, 40)) {
        prop_assume!(x.height() >= 4 && x.width() >= 4);
        let set = cdm_forward(&x, &[3, 2], 2).unwrap();
        let back = set.reconstruct().unwrap();
        for (&a, &b) in x.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() < 1e-4);
        }
    }
}

#[test]
fn decomposition_shape_grid() {
    for c in [1, 3] {
        for h in 4..=13 {
            for w in 4..=13 {
                let x = FeatureMap::from_fn(c, h, w, |k, r, col| (k + 3 * r + 7 * col) as f32 % 5.0).unwrap();
                for levels in [vec![1], vec![2, 1], vec![4, 3], vec![3, 3, 1]] {
                    let smallest = (h.min(w) - 1) >> (levels.len() - 1);
                    let result = cdm_forward(&x, &levels, 2);
                    if smallest == 0 {
                        assert!(result.is_err(), "{h}x{w} {levels:?} should be too small");
                        continue;
                    }
                    let set = result.unwrap();
                    let (mut eh, mut ew) = (h, w);
                    for (level, &m) in set.levels.iter().zip(&levels) {
                        assert_eq!(level.bands.bands.len(), 1 << m);
                        for band in &level.bands.bands {
                            assert_eq!(band.shape(), (c, eh, ew), "{h}x{w} {levels:?}");
                        }
                        eh = eh.div_ceil(2);
                        ew = ew.div_ceil(2);
                        assert_eq!(level.lp.low.shape(), (c, eh, ew));
                    }
                    let total: usize = levels.iter().map(|&m| 1 << m).sum();
                    assert_eq!(flatten_structural(&set).unwrap().shape(), (c * total, h, w));
                }
            }
        }
    }
}

fn random_similarity(rng: &mut ChaCha8Rng, h: usize, w: usize) -> SimilarityMap {
    SimilarityMap::new(h, w, (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect())
}

#[test]
fn sampler_count_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in [2, 3] {
        for m in [8, 16] {
            for beta in [0.5, 0.75] {
                for seed in 0..5 {
                    let s = random_similarity(&mut rng, 24, 20);
                    let cfg = SamplerConfig { k, m_total: m, beta, seed, ..SamplerConfig::default() };
                    let set = sample_regions(&s, &cfg).unwrap();
                    let imp = (beta * m as f64).floor() as usize;
                    assert_eq!(set.candidates, k * m);
                    assert_eq!(set.importance.len(), imp);
                    assert_eq!(set.coverage.len(), m - imp);
                    let unique: HashSet<usize> = set.points().map(|p| p.index).collect();
                    assert_eq!(unique.len(), m);
                    assert!(set.points().all(|p| p.index < 24 * 20));
                }
            }
        }
    }
}

/// Similarity map that is constant except for random values in the top-left quadrant.
fn quadrant_map(seed: u64, side: usize) -> SimilarityMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let half = side / 2;
    let values = (0..side * side)
        .map(|i| if i / side < half && i % side < half { rng.random_range(-1.0..1.0) } else { 0.5 })
        .collect();
    SimilarityMap::new(side, side, values)
}

#[test]
fn importance_concentrates_in_busy_quadrant() {
    let side = 64;
    let (mut inside, mut total) = (0usize, 0usize);
    for seed in 0..100 {
        let cfg = SamplerConfig { seed, ..SamplerConfig::default() };
        let set = sample_regions(&quadrant_map(seed, side), &cfg).unwrap();
        for p in &set.importance {
            total += 1;
            if p.index / side < side / 2 && p.index % side < side / 2 {
                inside += 1;
            }
        }
    }
    let share = inside as f64 / total as f64;
    assert!(share >= 0.8, "share {share}");
}

fn bimodal(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let centre = if rng.random_bool(0.5) { 0.15 } else { 0.85 };
            centre + rng.random_range(-0.01..0.01)
        })
        .collect()
}

#[test]
fn heuristic_levels_leave_fewer_pixels_unquantized() {
    let n = 50;
    let mut wins = 0;
    for seed in 0..20 {
        let values = bimodal(seed, 2000);
        let u = quantize(&values, &uniform_levels(&values, n).unwrap()).unquantized();
        let h = quantize(&values, &heuristic_levels(&values, n, 0.3, 1.0 / (2.0 * n as f64), 1).unwrap()).unquantized();
        if h < u {
            wins += 1;
        }
    }
    assert!(wins >= 19, "{wins}/20");
}
