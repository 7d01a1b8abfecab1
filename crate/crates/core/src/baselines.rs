//! Weighted k-means++ seeding and weighted Lloyd descent.

use crate::error::{Error, Result};
use crate::points::{
    centroid_of_iter, nearest_unchecked, ClusteringResult, CenterSet, CompensatedSum, RunMeta,
    WeightedPointSet,
};
use crate::sampling::{
    d2_weights_from_cache, empty_cache, incremental_min_dist_update, sample_index, RandomSource,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LloydParams {
    pub max_iters: usize,
    /// Stop once `(prev - cost) / prev` drops below this.
    pub rel_improvement_tol: f64,
}

impl Default for LloydParams {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_improvement_tol: 1e-9,
        }
    }
}

/// k centers chosen by weighted D²-sampling, the first proportionally to
/// weight. Centers are input points. If the points run out of mass (fewer
/// distinct points than `k`), the remaining slots repeat existing centers.
pub fn kmeanspp_seed(
    points: &WeightedPointSet,
    k: usize,
    rng: &mut RandomSource,
) -> Result<CenterSet> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let mut centers = CenterSet::empty(points.dim());
    let mut cache = empty_cache(points.len());
    while centers.len() < k {
        let weights = d2_weights_from_cache(points, &cache)?;
        let idx = match sample_index(&weights, rng) {
            Ok(i) => i,
            Err(Error::DegenerateDistribution) => break,
            Err(e) => return Err(e),
        };
        let c = points.point(idx).to_vec();
        incremental_min_dist_update(&mut cache, &c, points);
        centers.push(&c)?;
    }
    let chosen = centers.len();
    for i in chosen..k {
        let copy = centers.center(i % chosen).to_vec();
        centers.push(&copy)?;
    }
    Ok(centers)
}

fn assign_all(points: &WeightedPointSet, centers: &CenterSet, out: &mut [usize]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (slot, (p, w)) in out.iter_mut().zip(points.iter()) {
        let (i, d) = nearest_unchecked(p, centers);
        *slot = i;
        acc.add(w * d);
    }
    acc.value()
}

/// Weighted Lloyd iterations from `init`. Returns the result and the cost
/// after every assignment step, starting with the cost of `init`.
pub fn lloyd_descend_traced(
    points: &WeightedPointSet,
    init: &CenterSet,
    params: &LloydParams,
) -> Result<(ClusteringResult, Vec<f64>)> {
    if init.is_empty() {
        return Err(Error::NoCenters);
    }
    if init.dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: init.dim(),
        });
    }
    let k = init.len();
    let mut centers = init.clone();
    let mut assignment = vec![0usize; points.len()];
    let mut cost = assign_all(points, &centers, &mut assignment);
    let mut trace = vec![cost];
    let mut iterations = 0;

    while iterations < params.max_iters && cost > 0.0 {
        iterations += 1;
        let mut updated = CenterSet::empty(points.dim());
        for c in 0..k {
            let members = assignment
                .iter()
                .enumerate()
                .filter(|(_, &a)| a == c)
                .map(|(i, _)| (points.point(i), points.weight(i)));
            match centroid_of_iter(points.dim(), members) {
                Ok(g) => updated.push(&g)?,
                // Empty cluster keeps its previous center.
                Err(Error::EmptySubset) => updated.push(centers.center(c))?,
                Err(e) => return Err(e),
            }
        }
        let mut next_assignment = vec![0usize; points.len()];
        let next_cost = assign_all(points, &updated, &mut next_assignment);
        let unchanged = next_assignment == assignment && updated == centers;
        let improvement = (cost - next_cost) / cost;
        centers = updated;
        assignment = next_assignment;
        cost = next_cost;
        trace.push(cost);
        if unchanged || improvement < params.rel_improvement_tol {
            break;
        }
    }

    let meta = RunMeta {
        solver: "lloyd".into(),
        seed: None,
        params: vec![
            ("max_iters".into(), params.max_iters.to_string()),
            ("tol".into(), params.rel_improvement_tol.to_string()),
        ],
        iterations: Some(iterations),
    };
    Ok((
        ClusteringResult {
            centers,
            assignment,
            cost,
            meta,
        },
        trace,
    ))
}

pub fn lloyd_descend(
    points: &WeightedPointSet,
    init: &CenterSet,
    params: &LloydParams,
) -> Result<ClusteringResult> {
    lloyd_descend_traced(points, init, params).map(|(r, _)| r)
}

/// k-means++ seeding followed by Lloyd descent.
pub fn kmeanspp_lloyd(
    points: &WeightedPointSet,
    k: usize,
    params: &LloydParams,
    seed: u64,
) -> Result<ClusteringResult> {
    let mut rng = RandomSource::new(seed, 0);
    let init = kmeanspp_seed(points, k, &mut rng)?;
    let mut result = lloyd_descend(points, &init, params)?;
    result.meta.solver = "kmeanspp-lloyd".into();
    result.meta.seed = Some(seed);
    result.meta.params.insert(0, ("k".into(), k.to_string()));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{weighted_cost, WeightedPoint};

    fn line(xs: &[f64]) -> WeightedPointSet {
        WeightedPointSet::new(xs.iter().map(|&x| WeightedPoint::new(vec![x], 1.0)).collect())
            .unwrap()
    }

    #[test]
    fn first_seed_follows_weights() {
        let p = line(&[0.0, 4.0]).with_weights(vec![1.0, 3.0]).unwrap();
        let hits = (0..100_000u64)
            .filter(|&s| {
                let c = kmeanspp_seed(&p, 1, &mut RandomSource::new(s, 0)).unwrap();
                c.center(0)[0] == 4.0
            })
            .count();
        let f = hits as f64 / 1e5;
        assert!((0.743..=0.757).contains(&f), "{f}");
    }

    #[test]
    fn seeding_covers_all_distinct_points() {
        let p = line(&[0.0, 3.0, 7.0]);
        for s in 0..50 {
            let c = kmeanspp_seed(&p, 3, &mut RandomSource::new(s, 0)).unwrap();
            let mut xs: Vec<f64> = c.iter().map(|x| x[0]).collect();
            xs.sort_by(f64::total_cmp);
            assert_eq!(xs, vec![0.0, 3.0, 7.0]);
            assert_eq!(weighted_cost(&p, &c).unwrap(), 0.0);
        }
    }

    #[test]
    fn seeding_pads_when_points_run_out() {
        let p = line(&[1.0, 1.0]);
        let c = kmeanspp_seed(&p, 3, &mut RandomSource::new(0, 0)).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|x| x == [1.0]));
        assert_eq!(kmeanspp_seed(&p, 0, &mut RandomSource::new(0, 0)), Err(Error::InvalidK));
    }

    #[test]
    fn lloyd_examples() {
        let p = line(&[0.0, 1.0, 4.0, 5.0]);
        let init = CenterSet::new(&[vec![0.0], vec![5.0]]).unwrap();
        let r = lloyd_descend(&p, &init, &LloydParams::default()).unwrap();
        assert_eq!(r.centers.to_vecs(), vec![vec![0.5], vec![4.5]]);
        assert_eq!(r.cost, 1.0);
        assert_eq!(r.assignment, vec![0, 0, 1, 1]);

        let again = lloyd_descend(&p, &r.centers, &LloydParams::default()).unwrap();
        assert_eq!(again.cost, 1.0);
        assert_eq!(again.centers, r.centers);
        assert_eq!(again.meta.iterations, Some(1));

        let pair = WeightedPointSet::new(vec![
            WeightedPoint::new(vec![0.0, 0.0], 9.0),
            WeightedPoint::new(vec![1.0, 0.0], 1.0),
        ])
        .unwrap();
        let init = CenterSet::new(&[vec![-3.0, 2.0]]).unwrap();
        let r = lloyd_descend(&pair, &init, &LloydParams::default()).unwrap();
        assert!((r.centers.center(0)[0] - 0.1).abs() < 1e-15);
        assert_eq!(r.centers.center(0)[1], 0.0);
        assert!((r.cost - 0.9).abs() < 1e-12);
    }

    #[test]
    fn empty_cluster_keeps_center() {
        let p = line(&[0.0, 1.0]);
        let init = CenterSet::new(&[vec![0.5], vec![100.0]]).unwrap();
        let r = lloyd_descend(&p, &init, &LloydParams::default()).unwrap();
        assert_eq!(r.centers.center(1), &[100.0]);
    }

    #[test]
    fn lloyd_rejects_bad_init() {
        let p = line(&[0.0]);
        assert_eq!(
            lloyd_descend(&p, &CenterSet::empty(1), &LloydParams::default()),
            Err(Error::NoCenters)
        );
    }

    #[test]
    fn kmeanspp_lloyd_on_line_reaches_optimum() {
        let p = line(&[0.0, 1.0, 4.0, 5.0]);
        for seed in 0..100 {
            let r = kmeanspp_lloyd(&p, 2, &LloydParams::default(), seed).unwrap();
            assert_eq!(r.cost, 1.0, "seed {seed}");
        }
    }
}
