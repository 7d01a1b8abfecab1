//! Weighted point sets, center sets and the weighted k-means cost.
//!
//! Points are stored row-major in a flat `Vec<f64>`; every accessor hands out
//! `&[f64]` slices of length `dim`. All cost accumulations go through
//! [`CompensatedSum`] so that instances mixing weights of very different
//! magnitudes do not lose digits to summation order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A single point with a positive weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub coords: Vec<f64>,
    pub weight: f64,
}

impl WeightedPoint {
    pub fn new(coords: impl Into<Vec<f64>>, weight: f64) -> Self {
        Self {
            coords: coords.into(),
            weight,
        }
    }
}

/// Nonempty list of weighted points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    pub fn new(points: Vec<WeightedPoint>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyPointSet)?.coords.len();
        let mut coords = Vec::with_capacity(points.len() * dim);
        let mut weights = Vec::with_capacity(points.len());
        for p in points {
            if p.coords.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.coords.len(),
                });
            }
            coords.extend_from_slice(&p.coords);
            weights.push(p.weight);
        }
        Self::from_parts(dim, coords, weights)
    }

    /// Builds a set from a flat row-major coordinate buffer.
    pub fn from_parts(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * weights.len(),
                got: coords.len(),
            });
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidWeight { index, weight });
            }
        }
        for (index, row) in coords.chunks_exact(dim).enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteCoordinate { index });
            }
        }
        let total = compensated_sum(weights.iter().copied());
        if !total.is_finite() {
            return Err(Error::InvalidParameter("total weight overflows".into()));
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// Unit-weight points from plain coordinate rows.
    pub fn unweighted(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| WeightedPoint::new(r.clone(), 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// Same points, weights replaced.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::from_parts(self.dim, self.coords.clone(), weights)
    }

    /// Indices of the first occurrence of each distinct coordinate vector,
    /// in input order.
    pub fn distinct_indices(&self) -> Vec<usize> {
        let mut keyed: Vec<(Vec<u64>, usize)> = (0..self.len())
            .map(|i| {
                let key = self
                    .point(i)
                    .iter()
                    .map(|x| if *x == 0.0 { 0 } else { x.to_bits() })
                    .collect();
                (key, i)
            })
            .collect();
        keyed.sort();
        let mut firsts: Vec<usize> = Vec::new();
        for (j, (key, i)) in keyed.iter().enumerate() {
            if j == 0 || keyed[j - 1].0 != *key {
                firsts.push(*i);
            }
        }
        firsts.sort_unstable();
        firsts
    }
}

/// Ordered list of centers in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    dim: usize,
    coords: Vec<f64>,
}

impl CenterSet {
    /// An empty center set of the given dimension; used while centers are
    /// being built up one at a time.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn new(centers: &[Vec<f64>]) -> Result<Self> {
        let dim = centers.first().ok_or(Error::NoCenters)?.len();
        let mut set = Self::empty(dim);
        for c in centers {
            set.push(c)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, center: &[f64]) -> Result<()> {
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: center.len(),
            });
        }
        self.coords.extend_from_slice(center);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn center(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }
}

/// Provenance of a clustering run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub solver: String,
    pub seed: Option<u64>,
    pub params: Vec<(String, String)>,
    pub iterations: Option<usize>,
}

impl RunMeta {
    pub fn new(solver: impl Into<String>) -> Self {
        Self {
            solver: solver.into(),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub centers: CenterSet,
    pub assignment: Vec<usize>,
    pub cost: f64,
    pub meta: RunMeta,
}

impl ClusteringResult {
    /// Assigns every point to its nearest center and records the cost.
    pub fn evaluate(points: &WeightedPointSet, centers: CenterSet, meta: RunMeta) -> Result<Self> {
        let (assignment, cost) = assign(points, &centers)?;
        Ok(Self {
            centers,
            assignment,
            cost,
            meta,
        })
    }
}

/// Index of the nearest center (lowest index on exact ties) and the squared
/// distance to it.
pub fn nearest_center(p: &[f64], centers: &CenterSet) -> Result<(usize, f64)> {
    if centers.is_empty() {
        return Err(Error::NoCenters);
    }
    if p.len() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: centers.dim(),
            got: p.len(),
        });
    }
    Ok(nearest_unchecked(p, centers))
}

#[inline]
pub(crate) fn nearest_unchecked(p: &[f64], centers: &CenterSet) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(p, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn check_compatible(points: &WeightedPointSet, centers: &CenterSet) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::NoCenters);
    }
    if points.dim() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: centers.dim(),
        });
    }
    Ok(())
}

/// Nearest-center assignment of every point together with the total cost.
pub fn assign(points: &WeightedPointSet, centers: &CenterSet) -> Result<(Vec<usize>, f64)> {
    check_compatible(points, centers)?;
    let mut acc = CompensatedSum::new();
    let assignment = points
        .iter()
        .map(|(p, w)| {
            let (i, d) = nearest_unchecked(p, centers);
            acc.add(w * d);
            i
        })
        .collect();
    Ok((assignment, acc.value()))
}

/// Weighted k-means cost: sum of `w_p * min_c ||p - c||^2`.
pub fn weighted_cost(points: &WeightedPointSet, centers: &CenterSet) -> Result<f64> {
    check_compatible(points, centers)?;
    Ok(points
        .iter()
        .map(|(p, w)| w * nearest_unchecked(p, centers).1)
        .collect::<CompensatedSum>()
        .value())
}

/// Weighted mean of the whole set.
pub fn weighted_centroid(points: &WeightedPointSet) -> Result<Vec<f64>> {
    centroid_of_iter(points.dim(), points.iter())
}

/// Weighted mean of a sub-multiset given by indices. Repeated indices count
/// once per occurrence.
pub fn weighted_centroid_of(points: &WeightedPointSet, indices: &[usize]) -> Result<Vec<f64>> {
    centroid_of_iter(
        points.dim(),
        indices.iter().map(|&i| (points.point(i), points.weight(i))),
    )
}

pub(crate) fn centroid_of_iter<'a>(
    dim: usize,
    items: impl Iterator<Item = (&'a [f64], f64)>,
) -> Result<Vec<f64>> {
    let mut sums = vec![CompensatedSum::new(); dim];
    let mut total = CompensatedSum::new();
    let mut any = false;
    for (p, w) in items {
        any = true;
        total.add(w);
        for (s, x) in sums.iter_mut().zip(p) {
            s.add(w * x);
        }
    }
    let total = total.value();
    if !any || total <= 0.0 {
        return Err(Error::EmptySubset);
    }
    Ok(sums.iter().map(|s| s.value() / total).collect())
}

/// Right-hand side of the parallel-axis identity:
/// `sum w_p d(p, G)^2 + W * d(c, G)^2` where `G` is the weighted centroid.
pub fn parallel_axis_rhs(points: &WeightedPointSet, c: &[f64]) -> Result<f64> {
    if c.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: c.len(),
        });
    }
    let g = weighted_centroid(points)?;
    let spread = points
        .iter()
        .map(|(p, w)| w * squared_distance(p, &g))
        .collect::<CompensatedSum>()
        .value();
    Ok(spread + points.total_weight() * squared_distance(c, &g))
}
