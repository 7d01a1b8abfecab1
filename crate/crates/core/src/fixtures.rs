//! Small fixed instances with known optima, shared by the verification
//! suite, the benchmark and the tests.

use crate::points::{CenterSet, WeightedPoint, WeightedPointSet};
use crate::sampling::RandomSource;

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub points: WeightedPointSet,
    pub k: usize,
    /// Optimal cost, worked out by hand.
    pub opt: f64,
}

fn set(rows: &[(&[f64], f64)]) -> WeightedPointSet {
    WeightedPointSet::new(rows.iter().map(|(p, w)| WeightedPoint::new(p.to_vec(), *w)).collect())
        .expect("fixture points are valid")
}

/// Four unit points `0, 1, 4, 5` on a line.
pub fn line4() -> WeightedPointSet {
    set(&[(&[0.0], 1.0), (&[1.0], 1.0), (&[4.0], 1.0), (&[5.0], 1.0)])
}

/// The oracle instances. Every optimal cluster is far from the others, so
/// the optimum is the obvious grouping:
///
/// * `line4`, k=2: `{0,1}` and `{4,5}`, each costing 1/2.
/// * `heavy-pair`, k=1: centroid `(0.1, 0)`, cost `9 * 0.01 + 0.81`.
/// * `weighted-line`, k=2: `{0,1,2}` around 1 costs 2, `{100 (w 3), 104}`
///   around 101 costs `3 + 9`.
/// * `three-bars`, k=3: bars of weights `4,8,4`, `1,2,1` and `0.5,1,0.5`
///   with unit spacing cost 8, 2 and 1.
/// * `three-squares`, k=3: square corners at distance 1, 1 and 1/2 per axis
///   from their centers with weights 6, 1, 1 cost 48, 8 and 2.
pub fn oracle_instances() -> Vec<Fixture> {
    let mut squares = Vec::new();
    for (center, half, w) in [([0.0, 0.0], 1.0, 6.0), ([15.0, 0.0], 1.0, 1.0), ([0.0, 25.0], 0.5, 1.0)] {
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            squares.push(WeightedPoint::new(vec![center[0] + sx * half, center[1] + sy * half], w));
        }
    }
    vec![
        Fixture {
            name: "line4",
            points: line4(),
            k: 2,
            opt: 1.0,
        },
        Fixture {
            name: "heavy-pair",
            points: set(&[(&[0.0, 0.0], 9.0), (&[1.0, 0.0], 1.0)]),
            k: 1,
            opt: 0.9,
        },
        Fixture {
            name: "weighted-line",
            points: set(&[
                (&[0.0], 1.0),
                (&[1.0], 2.0),
                (&[2.0], 1.0),
                (&[100.0], 3.0),
                (&[104.0], 1.0),
            ]),
            k: 2,
            opt: 14.0,
        },
        Fixture {
            name: "three-bars",
            points: set(&[
                (&[-1.0, 0.0], 4.0),
                (&[0.0, 0.0], 8.0),
                (&[1.0, 0.0], 4.0),
                (&[20.0, -1.0], 1.0),
                (&[20.0, 0.0], 2.0),
                (&[20.0, 1.0], 1.0),
                (&[-1.0, 12.0], 0.5),
                (&[0.0, 12.0], 1.0),
                (&[1.0, 12.0], 0.5),
            ]),
            k: 3,
            opt: 11.0,
        },
        Fixture {
            name: "three-squares",
            points: WeightedPointSet::new(squares).expect("fixture points are valid"),
            k: 3,
            opt: 58.0,
        },
    ]
}

/// Six points with unequal weights and a single center at `(0.5, 0.5)`, for
/// the D²-distribution goodness-of-fit test.
pub fn d2_instance() -> (WeightedPointSet, CenterSet) {
    let points = set(&[
        (&[0.0, 0.0], 1.0),
        (&[1.0, 0.0], 2.0),
        (&[0.0, 2.0], 0.5),
        (&[3.0, 1.0], 1.5),
        (&[-1.0, -1.0], 3.0),
        (&[2.0, 2.0], 1.0),
    ]);
    let centers = CenterSet::new(&[vec![0.5, 0.5]]).expect("valid center");
    (points, centers)
}

/// Two points `0` and `4` with weights 1 and 3: the first D² draw picks the
/// heavier one with probability 3/4.
pub fn first_draw_instance() -> WeightedPointSet {
    set(&[(&[0.0], 1.0), (&[4.0], 3.0)])
}

/// Ten planar points with integer weights (29 unit copies).
pub fn inaba_instance() -> WeightedPointSet {
    set(&[
        (&[0.0, 0.0], 1.0),
        (&[1.0, 0.0], 2.0),
        (&[0.0, 1.0], 3.0),
        (&[2.0, 3.0], 1.0),
        (&[-1.0, 2.0], 4.0),
        (&[3.0, -1.0], 2.0),
        (&[5.0, 5.0], 1.0),
        (&[-2.0, -3.0], 5.0),
        (&[4.0, 0.5], 3.0),
        (&[0.5, 4.0], 7.0),
    ])
}

/// Twenty unit points in three clusters 50 apart: a 3x3 cross-and-corner
/// pattern without two corners around `(0,0)` and `(50,0)` (cost 8 each),
/// and `(+-1,0), (0,+-1), (+-2,0)` around `(0,50)` (cost 12). OPT for k=3 is
/// 28; the clusters are too far apart for any other grouping to compete.
pub fn kmeanspp_instance() -> (WeightedPointSet, f64) {
    let mut rows = Vec::new();
    for o in [[0.0, 0.0], [50.0, 0.0]] {
        for d in [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0], [-1.0, -1.0]] {
            rows.push(vec![o[0] + d[0], o[1] + d[1]]);
        }
    }
    for d in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [2.0, 0.0], [-2.0, 0.0]] {
        rows.push(vec![d[0], 50.0 + d[1]]);
    }
    (WeightedPointSet::unweighted(&rows).expect("valid points"), 28.0)
}

/// Random instance: `n` points in `[-10, 10]^d` with weights in `[0.1, 10)`.
pub fn random_instance(rng: &mut RandomSource, n: usize, d: usize) -> WeightedPointSet {
    let mut coords = Vec::with_capacity(n * d);
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..d {
            coords.push(rng.next_f64() * 20.0 - 10.0);
        }
        weights.push(0.1 + rng.next_f64() * 9.9);
    }
    WeightedPointSet::from_parts(d, coords, weights).expect("random instance is valid")
}
