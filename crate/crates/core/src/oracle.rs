//! Exact optimum for small instances, and Monte-Carlo checks of the two
//! sampling lemmas the approximation scheme rests on.

use crate::error::{Error, Result};
use crate::points::{
    squared_distance, weighted_centroid, weighted_cost, CenterSet, CompensatedSum,
    WeightedPointSet,
};
use crate::sampling::RandomSource;

/// Largest instance the exact oracle accepts.
pub const ORACLE_MAX_POINTS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub cost: f64,
    /// Point indices of each nonempty group, groups ordered by first member.
    pub groups: Vec<Vec<usize>>,
    /// Weighted centroid of each group.
    pub centers: CenterSet,
    pub partitions_evaluated: u64,
}

#[derive(Clone)]
struct GroupStats {
    weight: f64,
    first: Vec<f64>,
    second: f64,
}

impl GroupStats {
    fn new(dim: usize) -> Self {
        Self {
            weight: 0.0,
            first: vec![0.0; dim],
            second: 0.0,
        }
    }

    fn add(&mut self, p: &[f64], w: f64, sign: f64) {
        self.weight += sign * w;
        for (s, x) in self.first.iter_mut().zip(p) {
            *s += sign * w * x;
        }
        self.second += sign * w * p.iter().map(|x| x * x).sum::<f64>();
    }

    fn cost(&self) -> f64 {
        let norm: f64 = self.first.iter().map(|s| s * s).sum();
        (self.second - norm / self.weight).max(0.0)
    }
}

struct Enumerator<'a> {
    coords: &'a [Vec<f64>],
    weights: &'a [f64],
    k: usize,
    labels: Vec<usize>,
    groups: Vec<GroupStats>,
    used: usize,
    best_cost: f64,
    best_labels: Vec<usize>,
    evaluated: u64,
}

impl Enumerator<'_> {
    // Restricted-growth strings: point i joins an existing group or opens
    // group `used` (while fewer than k are open).
    fn walk(&mut self, i: usize) {
        if i == self.coords.len() {
            self.evaluated += 1;
            let cost: f64 = self.groups[..self.used].iter().map(GroupStats::cost).sum();
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best_labels.clone_from(&self.labels);
            }
            return;
        }
        let limit = (self.used + 1).min(self.k);
        for g in 0..limit {
            let opened = g == self.used;
            if opened {
                self.used += 1;
            }
            self.labels[i] = g;
            self.groups[g].add(&self.coords[i], self.weights[i], 1.0);
            self.walk(i + 1);
            self.groups[g].add(&self.coords[i], self.weights[i], -1.0);
            if opened {
                self.used -= 1;
                // Float residue from add/remove; an empty group restarts clean.
                self.groups[g] = GroupStats::new(self.coords[i].len());
            }
        }
    }
}

fn exact_from_groups(points: &WeightedPointSet, groups: Vec<Vec<usize>>, evaluated: u64) -> Result<ExactResult> {
    let mut centers = CenterSet::empty(points.dim());
    let mut acc = CompensatedSum::new();
    for g in &groups {
        let c = crate::points::weighted_centroid_of(points, g)?;
        for &i in g {
            acc.add(points.weight(i) * squared_distance(points.point(i), &c));
        }
        centers.push(&c)?;
    }
    Ok(ExactResult {
        cost: acc.value(),
        groups,
        centers,
        partitions_evaluated: evaluated,
    })
}

/// Optimal weighted k-means by enumerating every partition of the points
/// into at most `k` nonempty groups.
pub fn brute_force_opt(points: &WeightedPointSet, k: usize) -> Result<ExactResult> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let n = points.len();
    if n > ORACLE_MAX_POINTS {
        return Err(Error::InstanceTooLarge {
            n,
            limit: ORACLE_MAX_POINTS,
        });
    }
    if k >= n {
        return exact_from_groups(points, (0..n).map(|i| vec![i]).collect(), 1);
    }
    // Centering at the global centroid keeps the moment formula well scaled.
    let g = weighted_centroid(points)?;
    let coords: Vec<Vec<f64>> = points
        .iter()
        .map(|(p, _)| p.iter().zip(&g).map(|(x, c)| x - c).collect())
        .collect();
    let mut e = Enumerator {
        coords: &coords,
        weights: points.weights(),
        k,
        labels: vec![0; n],
        groups: vec![GroupStats::new(points.dim()); k],
        used: 0,
        best_cost: f64::INFINITY,
        best_labels: vec![0; n],
        evaluated: 0,
    };
    e.walk(0);
    let used = e.best_labels.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); used];
    for (i, &l) in e.best_labels.iter().enumerate() {
        groups[l].push(i);
    }
    exact_from_groups(points, groups, e.evaluated)
}

/// Number of partitions of `n` items into at most `k` nonempty groups, the
/// sum of Stirling numbers of the second kind `S(n, 1..=k)`.
pub fn partition_count(n: usize, k: usize) -> u64 {
    // row[j] = S(i, j)
    let mut row = vec![0u64; k + 1];
    row[0] = 1;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] = j as u64 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[1..].iter().sum()
}

/// Weight `W_i` and average cost `r_i` of each optimal cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub weight: f64,
    pub radius: f64,
}

pub fn cluster_stats(points: &WeightedPointSet, exact: &ExactResult) -> Vec<ClusterStats> {
    exact
        .groups
        .iter()
        .zip(exact.centers.iter())
        .map(|(g, c)| {
            let weight: f64 = g.iter().map(|&i| points.weight(i)).sum();
            let cost: f64 = g
                .iter()
                .map(|&i| points.weight(i) * squared_distance(points.point(i), c))
                .sum();
            ClusterStats {
                weight,
                radius: cost / weight,
            }
        })
        .collect()
}

/// Whether the optimal (k-1)-clustering costs at least `(1 + eps)` times the
/// optimal k-clustering.
pub fn is_irreducible(points: &WeightedPointSet, k: usize, epsilon: f64) -> Result<bool> {
    if k < 2 {
        return Err(Error::InvalidParameter("irreducibility needs k >= 2".into()));
    }
    let fewer = brute_force_opt(points, k - 1)?.cost;
    let exact = brute_force_opt(points, k)?.cost;
    Ok(fewer >= (1.0 + epsilon) * exact)
}

fn expand_integer_weights(points: &WeightedPointSet) -> Result<Vec<usize>> {
    let mut copies = Vec::new();
    for (i, &w) in points.weights().iter().enumerate() {
        if w.fract() != 0.0 || w > 1e7 {
            return Err(Error::NonIntegerWeights);
        }
        copies.extend(std::iter::repeat_n(i, w as usize));
    }
    Ok(copies)
}

fn unit_mean(points: &WeightedPointSet, members: &[usize]) -> Vec<f64> {
    let mut sums = vec![CompensatedSum::new(); points.dim()];
    for &i in members {
        for (s, x) in sums.iter_mut().zip(points.point(i)) {
            s.add(*x);
        }
    }
    sums.iter().map(|s| s.value() / members.len() as f64).collect()
}

fn single_center_cost(points: &WeightedPointSet, c: Vec<f64>) -> Result<f64> {
    weighted_cost(points, &CenterSet::new(&[c])?)
}

/// Outcome of a repeated Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct InabaReport {
    pub repetitions: usize,
    pub successes: usize,
    pub delta: f64,
    pub sample_size: usize,
    /// `1 - delta - 3 sigma` with `sigma` the binomial standard deviation.
    pub threshold: f64,
}

impl InabaReport {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.repetitions as f64
    }

    pub fn passed(&self) -> bool {
        self.rate() >= self.threshold
    }
}

/// Uniform sampling of `sample_size` unit copies (each point expanded into
/// `w_p` copies) and the test `cost(G(S)) <= (1 + 1/(delta M)) cost(G(P))`.
pub fn verify_inaba(
    points: &WeightedPointSet,
    sample_size: usize,
    delta: f64,
    repetitions: usize,
    rng: &mut RandomSource,
) -> Result<InabaReport> {
    if sample_size == 0 || repetitions == 0 {
        return Err(Error::InvalidParameter("sample size and repetitions must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let copies = expand_integer_weights(points)?;
    let optimum = single_center_cost(points, weighted_centroid(points)?)?;
    let bound = (1.0 + 1.0 / (delta * sample_size as f64)) * optimum;
    let mut members = vec![0usize; sample_size];
    let mut successes = 0;
    for _ in 0..repetitions {
        for m in members.iter_mut() {
            *m = copies[rng.below(copies.len())];
        }
        let cost = single_center_cost(points, unit_mean(points, &members))?;
        if cost <= bound * (1.0 + 1e-12) {
            successes += 1;
        }
    }
    let sigma = (delta * (1.0 - delta) / repetitions as f64).sqrt();
    Ok(InabaReport {
        repetitions,
        successes,
        delta,
        sample_size,
        threshold: 1.0 - delta - 3.0 * sigma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullSamplingReport {
    pub runs: usize,
    /// Gated draws per run, `ceil(400 / (gamma eps))`.
    pub draws_per_run: usize,
    /// Required subset size, `ceil(100 / eps)`.
    pub subset_size: usize,
    /// Runs with at least `subset_size` non-null draws.
    pub count_successes: usize,
    /// Runs that also met the `(1 + eps/20)` cost condition.
    pub successes: usize,
}

impl NullSamplingReport {
    pub fn count_rate(&self) -> f64 {
        self.count_successes as f64 / self.runs as f64
    }

    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }
}

pub const NULL_SAMPLING_MAX_DRAWS: f64 = 1e6;

/// Repeated gated-uniform experiment: each draw is a uniform point with
/// probability `gamma` and null otherwise. Point weights are ignored.
pub fn verify_null_sampling(
    gamma: f64,
    epsilon: f64,
    points: &WeightedPointSet,
    runs: usize,
    rng: &mut RandomSource,
) -> Result<NullSamplingReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if runs == 0 {
        return Err(Error::InvalidParameter("runs must be positive".into()));
    }
    let draws = (400.0 / (gamma * epsilon)).ceil();
    if draws > NULL_SAMPLING_MAX_DRAWS {
        return Err(Error::ExperimentTooLarge { repetitions: draws });
    }
    let draws_per_run = draws as usize;
    let subset_size = (100.0 / epsilon).ceil() as usize;
    let unit = points.with_weights(vec![1.0; points.len()])?;
    let optimum = single_center_cost(&unit, weighted_centroid(&unit)?)?;
    let bound = (1.0 + epsilon / 20.0) * optimum;

    let mut count_successes = 0;
    let mut successes = 0;
    let mut hits = Vec::with_capacity(draws_per_run);
    for _ in 0..runs {
        hits.clear();
        for _ in 0..draws_per_run {
            if rng.chance(gamma) {
                hits.push(rng.below(unit.len()));
            }
        }
        if hits.len() < subset_size {
            continue;
        }
        count_successes += 1;
        let chosen: Vec<usize> = rng
            .subset(hits.len(), subset_size)
            .into_iter()
            .map(|j| hits[j])
            .collect();
        let cost = single_center_cost(&unit, unit_mean(&unit, &chosen))?;
        if cost <= bound * (1.0 + 1e-12) {
            successes += 1;
        }
    }
    Ok(NullSamplingReport {
        runs,
        draws_per_run,
        subset_size,
        count_successes,
        successes,
    })
}
