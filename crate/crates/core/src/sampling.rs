//! Seeded categorical sampling and weighted D²-sampling.
//!
//! Randomness comes from [`RandomSource`], a ChaCha8 stream addressed by a
//! `(seed, stream)` pair. Child streams are derived from the parent's
//! address, never from its generator state, so every task in a parallel
//! search can rebuild its own stream without knowing what ran before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::points::{nearest_unchecked, squared_distance, CenterSet, WeightedPointSet};

const STREAM_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(STREAM_MIX);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh source on a stream derived from this source's address and
    /// `index`. The parent's position in its own stream is irrelevant.
    pub fn fork(&self, index: u64) -> RandomSource {
        let stream = splitmix64(self.stream.rotate_left(17) ^ splitmix64(index));
        RandomSource::new(self.seed, stream)
    }

    /// Uniform draw from `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n as u64) as usize
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// `m` distinct indices from `0..n`, sorted ascending (Floyd's algorithm).
    pub fn subset(&mut self, n: usize, m: usize) -> Vec<usize> {
        assert!(m <= n, "cannot pick {m} distinct values from {n}");
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        for j in (n - m)..n {
            let t = self.below(j + 1);
            match chosen.binary_search(&t) {
                Ok(_) => {
                    let pos = chosen.binary_search(&j).unwrap_err();
                    chosen.insert(pos, j);
                }
                Err(pos) => chosen.insert(pos, t),
            }
        }
        chosen
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Un-normalized categorical distribution with a cached prefix-sum table.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingWeights {
    entries: Vec<f64>,
    prefix: Vec<f64>,
}

impl SamplingWeights {
    /// Entries must be nonnegative and finite. An all-zero vector is allowed
    /// and reported by [`SamplingWeights::is_degenerate`].
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().position(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidWeight {
                index: bad,
                weight: entries[bad],
            });
        }
        let mut prefix = Vec::with_capacity(entries.len());
        let mut acc = crate::points::CompensatedSum::new();
        let mut last = 0.0_f64;
        for &w in &entries {
            acc.add(w);
            // The compensated total can dip by an ulp; keep the table monotone.
            last = last.max(acc.value());
            prefix.push(last);
        }
        Ok(Self { entries, prefix })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.prefix.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.total() > 0.0)
    }

    /// Normalized probabilities; `None` when degenerate.
    pub fn probabilities(&self) -> Option<Vec<f64>> {
        if self.is_degenerate() {
            return None;
        }
        let total = self.total();
        Some(self.entries.iter().map(|w| w / total).collect())
    }
}

/// Inverse-CDF categorical draw: index `i` with probability `w_i / total`.
pub fn sample_index(weights: &SamplingWeights, rng: &mut RandomSource) -> Result<usize> {
    if weights.is_degenerate() {
        return Err(Error::DegenerateDistribution);
    }
    Ok(draw(weights, rng))
}

#[inline]
fn draw(weights: &SamplingWeights, rng: &mut RandomSource) -> usize {
    let u = rng.next_f64() * weights.total();
    let i = weights.prefix.partition_point(|&c| c <= u);
    if i < weights.entries.len() {
        i
    } else {
        // u rounded up to the total; fall back to the last index with mass.
        weights
            .entries
            .iter()
            .rposition(|w| *w > 0.0)
            .expect("nondegenerate distribution has a positive entry")
    }
}

/// Weighted D²-sampling distribution with respect to `centers`. With no
/// centers the distribution is proportional to the point weights.
pub fn d2_weights(points: &WeightedPointSet, centers: &CenterSet) -> Result<SamplingWeights> {
    if centers.is_empty() {
        return SamplingWeights::new(points.weights().to_vec());
    }
    if centers.dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: centers.dim(),
        });
    }
    SamplingWeights::new(
        points
            .iter()
            .map(|(p, w)| w * nearest_unchecked(p, centers).1)
            .collect(),
    )
}

/// D²-weights from a cache of nearest squared distances. An infinite cache
/// entry means "no centers yet" and falls back to the point weight.
pub fn d2_weights_from_cache(points: &WeightedPointSet, cache: &[f64]) -> Result<SamplingWeights> {
    SamplingWeights::new(
        points
            .weights()
            .iter()
            .zip(cache)
            .map(|(w, d)| if d.is_infinite() { *w } else { w * d })
            .collect(),
    )
}

/// `count` independent draws, with replacement, from the D² distribution of
/// the fixed center set `centers`. Fails with [`Error::CostAlreadyZero`] when
/// every point sits on a center.
pub fn d2_sample(
    points: &WeightedPointSet,
    centers: &CenterSet,
    count: usize,
    rng: &mut RandomSource,
) -> Result<Vec<usize>> {
    let weights = d2_weights(points, centers)?;
    draw_many(&weights, count, rng)
}

/// `count` independent draws from a prebuilt distribution.
pub fn draw_many(
    weights: &SamplingWeights,
    count: usize,
    rng: &mut RandomSource,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    if weights.is_degenerate() {
        return Err(Error::CostAlreadyZero);
    }
    Ok((0..count).map(|_| draw(weights, rng)).collect())
}

/// Cache with no centers: every entry is the `+inf` sentinel.
pub fn empty_cache(n: usize) -> Vec<f64> {
    vec![f64::INFINITY; n]
}

/// `cache[p] = min(cache[p], ||p - new_center||^2)`.
pub fn incremental_min_dist_update(
    cache: &mut [f64],
    new_center: &[f64],
    points: &WeightedPointSet,
) {
    debug_assert_eq!(cache.len(), points.len());
    for (entry, (p, _)) in cache.iter_mut().zip(points.iter()) {
        let d = squared_distance(p, new_center);
        if d < *entry {
            *entry = d;
        }
    }
}
