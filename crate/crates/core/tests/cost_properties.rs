use proptest::prelude::*;
use wkmeans::points::{
    assign, nearest_center, parallel_axis_rhs, squared_distance, weighted_centroid, weighted_cost,
    CenterSet, WeightedPointSet,
};
use wkmeans::sampling::{
    d2_weights, d2_weights_from_cache, empty_cache, incremental_min_dist_update, RandomSource,
};

fn point_set(max_n: usize, max_d: usize, coord: f64) -> impl Strategy<Value = WeightedPointSet> {
    (1..=max_d).prop_flat_map(move |d| {
        prop::collection::vec(
            (prop::collection::vec(-coord..coord, d), 0.1f64..100.0),
            1..=max_n,
        )
        .prop_map(move |rows| {
            let coords = rows.iter().flat_map(|(p, _)| p.clone()).collect();
            let weights = rows.iter().map(|(_, w)| *w).collect();
            WeightedPointSet::from_parts(d, coords, weights).unwrap()
        })
    })
}

fn with_centers(
    max_n: usize,
    max_d: usize,
    max_k: usize,
) -> impl Strategy<Value = (WeightedPointSet, CenterSet)> {
    point_set(max_n, max_d, 100.0).prop_flat_map(move |p| {
        let d = p.dim();
        prop::collection::vec(prop::collection::vec(-100.0f64..100.0, d), 1..=max_k)
            .prop_map(move |cs| (p.clone(), CenterSet::new(&cs).unwrap()))
    })
}

/// Plain left-to-right sum, independent of the library's accumulation.
fn naive_cost(p: &WeightedPointSet, centers: &CenterSet) -> f64 {
    p.iter()
        .map(|(x, w)| {
            w * centers
                .iter()
                .map(|c| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

proptest! {
    #[test]
    fn parallel_axis_identity(p in point_set(50, 5, 100.0), seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed, 0);
        let c: Vec<f64> = (0..p.dim()).map(|_| rng.next_f64() * 300.0 - 150.0).collect();
        let lhs = weighted_cost(&p, &CenterSet::new(&[c.clone()]).unwrap()).unwrap();
        let rhs = parallel_axis_rhs(&p, &c).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs), "lhs={lhs} rhs={rhs}");
    }

    #[test]
    fn cost_matches_naive_sum((p, c) in with_centers(40, 4, 5)) {
        let cost = weighted_cost(&p, &c).unwrap();
        let naive = naive_cost(&p, &c);
        prop_assert!((cost - naive).abs() <= 1e-12 * naive.max(1.0));
    }

    #[test]
    fn centroid_is_optimal(p in point_set(30, 4, 100.0), seed in any::<u64>()) {
        let g = weighted_centroid(&p).unwrap();
        let at_g = weighted_cost(&p, &CenterSet::new(&[g]).unwrap()).unwrap();
        let mut rng = RandomSource::new(seed, 0);
        for _ in 0..200 {
            let i = rng.below(p.len());
            // Candidates near the data, including points close to the centroid.
            let c: Vec<f64> = p.point(i).iter().map(|x| x + (rng.next_f64() - 0.5) * 2.0).collect();
            let cost = weighted_cost(&p, &CenterSet::new(&[c]).unwrap()).unwrap();
            prop_assert!(at_g <= cost * (1.0 + 1e-12));
        }
    }

    #[test]
    fn weight_scaling_equivariance((p, c) in with_centers(30, 4, 4), lambda in 1e-3f64..1e3) {
        let scaled = p.with_weights(p.weights().iter().map(|w| w * lambda).collect()).unwrap();
        let a = weighted_cost(&p, &c).unwrap();
        let b = weighted_cost(&scaled, &c).unwrap();
        prop_assert!((b - lambda * a).abs() <= 1e-12 * (lambda * a).max(f64::MIN_POSITIVE));
        let g = weighted_centroid(&p).unwrap();
        let gs = weighted_centroid(&scaled).unwrap();
        for (x, y) in g.iter().zip(&gs) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
        prop_assert_eq!(assign(&p, &c).unwrap().0, assign(&scaled, &c).unwrap().0);
        for (x, _) in p.iter() {
            prop_assert_eq!(nearest_center(x, &c).unwrap().0, nearest_center(x, &c).unwrap().0);
        }
    }

    #[test]
    fn translation_invariance((p, c) in with_centers(30, 4, 4), seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed, 0);
        let t: Vec<f64> = (0..p.dim()).map(|_| rng.next_f64() * 2000.0 - 1000.0).collect();
        let shift = |x: &[f64]| x.iter().zip(&t).map(|(a, b)| a + b).collect::<Vec<f64>>();
        let coords = p.iter().flat_map(|(x, _)| shift(x)).collect();
        let moved = WeightedPointSet::from_parts(p.dim(), coords, p.weights().to_vec()).unwrap();
        let moved_c = CenterSet::new(&c.iter().map(shift).collect::<Vec<_>>()).unwrap();
        let a = weighted_cost(&p, &c).unwrap();
        let b = weighted_cost(&moved, &moved_c).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a, "a={a} b={b}");
    }

    #[test]
    fn d2_probabilities_are_scale_invariant(
        (p, c) in with_centers(20, 3, 3),
        lambda in 1e-3f64..1e3,
        s in 1e-2f64..1e2,
    ) {
        let base = d2_weights(&p, &c).unwrap();
        prop_assume!(!base.is_degenerate());
        let base = base.probabilities().unwrap();
        let heavy = p.with_weights(p.weights().iter().map(|w| w * lambda).collect()).unwrap();
        let coords = p.coords().iter().map(|x| x * s).collect();
        let stretched = WeightedPointSet::from_parts(p.dim(), coords, p.weights().to_vec()).unwrap();
        let stretched_c = CenterSet::new(
            &c.iter().map(|x| x.iter().map(|v| v * s).collect()).collect::<Vec<Vec<f64>>>(),
        )
        .unwrap();
        for other in [
            d2_weights(&heavy, &c).unwrap().probabilities().unwrap(),
            d2_weights(&stretched, &stretched_c).unwrap().probabilities().unwrap(),
        ] {
            for (a, b) in base.iter().zip(&other) {
                prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn same_seed_same_draws(seed in any::<u64>(), stream in any::<u64>()) {
        let mut a = RandomSource::new(seed, stream);
        let mut b = RandomSource::new(seed, stream);
        for _ in 0..64 {
            prop_assert_eq!(a.next_f64().to_bits(), b.next_f64().to_bits());
            prop_assert_eq!(a.below(1000), b.below(1000));
        }
        let (mut fa, mut fb) = (a.fork(5), b.fork(5));
        prop_assert_eq!(fa.below(usize::MAX), fb.below(usize::MAX));
    }

    #[test]
    fn cache_matches_direct_recomputation((p, c) in with_centers(40, 4, 6)) {
        let mut cache = empty_cache(p.len());
        let mut so_far = CenterSet::empty(p.dim());
        for center in c.iter() {
            incremental_min_dist_update(&mut cache, center, &p);
            so_far.push(center).unwrap();
            for (i, (x, _)) in p.iter().enumerate() {
                let direct = so_far.iter().map(|y| squared_distance(x, y)).fold(f64::INFINITY, f64::min);
                prop_assert_eq!(cache[i].to_bits(), direct.to_bits());
            }
            let from_cache = d2_weights_from_cache(&p, &cache).unwrap();
            let direct = d2_weights(&p, &so_far).unwrap();
            prop_assert_eq!(from_cache.entries(), direct.entries());
        }
    }
}
