//! The D²-sampling approximation scheme for weighted k-means.
//!
//! A candidate solution is built from a [`CandidateTuple`]: for each of the
//! `k` rounds, `N` points are drawn by weighted D²-sampling against the
//! centers built so far, the tuple's selector for that round picks `M` of
//! the `N` draws, and their weighted centroid becomes the next center. The
//! search repeats this over independent trials and a stream of tuples and
//! keeps the cheapest center set.
//!
//! Enumerating every tuple is only possible for tiny `N` and `M`, so the
//! default tuple stream is a budgeted sequence of uniform random selectors.
//! Both modes share one evaluation path.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::{
    centroid_of_iter, ClusteringResult, CenterSet, CompensatedSum, RunMeta, WeightedPointSet,
};
use crate::sampling::{
    d2_weights_from_cache, draw_many, empty_cache, incremental_min_dist_update, RandomSource,
};

/// Sample-size multiplier from the analysis: `N = 800 k / eps^2`.
pub const PAPER_N_MULTIPLIER: f64 = 800.0;
/// Subset-size multiplier from the analysis: `M = 100 / eps`.
pub const PAPER_M_MULTIPLIER: f64 = 100.0;
/// Exhaustive enumeration is refused above this many tuples.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;
pub const DEFAULT_TUPLE_BUDGET: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TupleBudget {
    Exhaustive,
    Sampled(usize),
}

impl std::fmt::Display for TupleBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TupleBudget::Exhaustive => f.write_str("exhaustive"),
            TupleBudget::Sampled(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for TupleBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("exhaustive") {
            return Ok(TupleBudget::Exhaustive);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(TupleBudget::Sampled(n)),
            _ => Err(Error::InvalidParameter(format!(
                "tuple budget must be a positive integer or \"exhaustive\", got {s:?}"
            ))),
        }
    }
}

/// Optional replacements for the default constants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PtasOverrides {
    pub n_multiplier: Option<f64>,
    pub m_multiplier: Option<f64>,
    pub trials: Option<usize>,
    pub tuple_budget: Option<TupleBudget>,
    /// Run at `eps / ((1 + eps/2) k)` so the guarantee holds without the
    /// irreducibility assumption.
    pub adjust_epsilon: bool,
    /// Reuse one sampling stream for every tuple of a trial (common random
    /// numbers across tuples).
    pub share_samples: bool,
}

impl PtasOverrides {
    /// The reduced constants used for desk-scale runs: `c1 = 8`, `c2 = 4`,
    /// `2^k` trials and 2000 random tuples per trial.
    pub fn desk() -> Self {
        Self {
            n_multiplier: Some(8.0),
            m_multiplier: Some(4.0),
            tuple_budget: Some(TupleBudget::Sampled(DEFAULT_TUPLE_BUDGET)),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtasParams {
    pub k: usize,
    pub epsilon: f64,
    /// Accuracy the sample sizes are derived from (equals `epsilon` unless
    /// `adjust_epsilon` is set).
    pub working_epsilon: f64,
    pub n_multiplier: f64,
    pub m_multiplier: f64,
    pub trials: usize,
    pub tuple_budget: TupleBudget,
    pub adjust_epsilon: bool,
    pub share_samples: bool,
    /// Draws per round, `N`.
    pub sample_size: usize,
    /// Draws selected per round, `M`.
    pub subset_size: usize,
}

/// `ceil(x)` that ignores rounding noise just above an integer.
fn ceil_robust(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

pub fn derive_params(k: usize, epsilon: f64, overrides: &PtasOverrides) -> Result<PtasParams> {
    if k == 0 {
        return Err(Error::InvalidK);
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let working_epsilon = if overrides.adjust_epsilon {
        epsilon / ((1.0 + epsilon / 2.0) * k as f64)
    } else {
        epsilon
    };
    let n_multiplier = overrides.n_multiplier.unwrap_or(PAPER_N_MULTIPLIER);
    let m_multiplier = overrides.m_multiplier.unwrap_or(PAPER_M_MULTIPLIER);
    for (name, v) in [("n_multiplier", n_multiplier), ("m_multiplier", m_multiplier)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let n = ceil_robust(n_multiplier * k as f64 / (working_epsilon * working_epsilon));
    let m = ceil_robust(m_multiplier / working_epsilon);
    if n > usize::MAX as f64 / 2.0 {
        return Err(Error::InvalidParameter(format!("sample size {n:e} is too large")));
    }
    let (sample_size, subset_size) = (n as usize, m as usize);
    if subset_size < 1 || sample_size < subset_size {
        return Err(Error::InvalidParameter(format!(
            "need N >= M >= 1, got N={sample_size}, M={subset_size}"
        )));
    }
    let trials = match overrides.trials {
        Some(0) => return Err(Error::InvalidParameter("trials must be positive".into())),
        Some(t) => t,
        None => 1usize.checked_shl(k as u32).filter(|t| *t > 0).ok_or_else(|| {
            Error::InvalidParameter(format!("2^{k} trials do not fit; set trials explicitly"))
        })?,
    };
    let tuple_budget = overrides
        .tuple_budget
        .unwrap_or(TupleBudget::Sampled(DEFAULT_TUPLE_BUDGET));
    if tuple_budget == TupleBudget::Sampled(0) {
        return Err(Error::InvalidParameter("tuple budget must be positive".into()));
    }
    Ok(PtasParams {
        k,
        epsilon,
        working_epsilon,
        n_multiplier,
        m_multiplier,
        trials,
        tuple_budget,
        adjust_epsilon: overrides.adjust_epsilon,
        share_samples: overrides.share_samples,
        sample_size,
        subset_size,
    })
}

/// Divides every weight by the minimum weight so that the smallest weight is
/// exactly 1. Returns the rescaled set and the factor to multiply costs by.
pub fn rescale_weights(points: &WeightedPointSet) -> (WeightedPointSet, f64) {
    let scale = points.weights().iter().copied().fold(f64::INFINITY, f64::min);
    let weights = points.weights().iter().map(|w| w / scale).collect();
    let rescaled = points
        .with_weights(weights)
        .expect("dividing positive weights by their minimum keeps them positive");
    (rescaled, scale)
}

/// One `M`-subset of `[N]` per round, as sorted position lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTuple {
    pub selectors: Vec<Vec<usize>>,
}

pub(crate) fn binomial(n: usize, m: usize) -> f64 {
    let m = m.min(n - m);
    (0..m).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn binomial_u64(n: u64, m: u64) -> u64 {
    let m = m.min(n - m);
    let mut acc: u128 = 1;
    for i in 0..m {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// The `rank`-th `m`-subset of `0..n` in lexicographic order.
fn unrank_combination(n: usize, m: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m);
    let mut next = 0usize;
    for slot in 0..m {
        let remaining = (m - slot - 1) as u64;
        loop {
            let with_next = binomial_u64((n - next - 1) as u64, remaining);
            if rank < with_next {
                break;
            }
            rank -= with_next;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

#[derive(Debug, Clone)]
enum TupleSource {
    Exhaustive { combinations: u64 },
    Sampled { rng: RandomSource },
}

/// Indexable, iterable stream of candidate tuples for one trial.
#[derive(Debug, Clone)]
pub struct TupleStream {
    source: TupleSource,
    sample_size: usize,
    subset_size: usize,
    k: usize,
    len: u64,
    cursor: u64,
}

impl TupleStream {
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Tuple `j` of the stream; independent of iteration state.
    pub fn get(&self, j: u64) -> CandidateTuple {
        assert!(j < self.len, "tuple index {j} out of range");
        let selectors = match &self.source {
            TupleSource::Exhaustive { combinations } => {
                let mut ranks = vec![0u64; self.k];
                let mut rest = j;
                for r in ranks.iter_mut().rev() {
                    *r = rest % combinations;
                    rest /= combinations;
                }
                ranks
                    .into_iter()
                    .map(|r| unrank_combination(self.sample_size, self.subset_size, r))
                    .collect()
            }
            TupleSource::Sampled { rng } => {
                let mut rng = rng.fork(j);
                (0..self.k)
                    .map(|_| rng.subset(self.sample_size, self.subset_size))
                    .collect()
            }
        };
        CandidateTuple { selectors }
    }
}

impl Iterator for TupleStream {
    type Item = CandidateTuple;

    fn next(&mut self) -> Option<CandidateTuple> {
        if self.cursor >= self.len {
            return None;
        }
        let t = self.get(self.cursor);
        self.cursor += 1;
        Some(t)
    }
}

/// Every tuple in lexicographic rank order (exhaustive mode) or
/// `tuple_budget` uniformly random tuples.
pub fn enumerate_or_sample_tuples(params: &PtasParams, rng: &RandomSource) -> Result<TupleStream> {
    let (source, len) = match params.tuple_budget {
        TupleBudget::Exhaustive => {
            let per_round = binomial(params.sample_size, params.subset_size);
            let tuples = per_round.powi(params.k as i32);
            if !(tuples <= EXHAUSTIVE_LIMIT) {
                return Err(Error::EnumerationInfeasible {
                    tuples,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            let combinations = binomial_u64(params.sample_size as u64, params.subset_size as u64);
            (
                TupleSource::Exhaustive { combinations },
                combinations.pow(params.k as u32),
            )
        }
        TupleBudget::Sampled(budget) => (
            TupleSource::Sampled { rng: rng.clone() },
            budget as u64,
        ),
    };
    Ok(TupleStream {
        source,
        sample_size: params.sample_size,
        subset_size: params.subset_size,
        k: params.k,
        len,
        cursor: 0,
    })
}

/// Builds the k centers for one tuple. Returns the centers and their cost on
/// `points`.
fn build_centers(
    points: &WeightedPointSet,
    tuple: &CandidateTuple,
    params: &PtasParams,
    rng: &mut RandomSource,
) -> Result<(CenterSet, f64)> {
    if tuple.selectors.len() != params.k {
        return Err(Error::InvalidParameter(format!(
            "tuple has {} selectors, expected k={}",
            tuple.selectors.len(),
            params.k
        )));
    }
    let mut centers = CenterSet::empty(points.dim());
    let mut cache = empty_cache(points.len());
    for selector in &tuple.selectors {
        let weights = d2_weights_from_cache(points, &cache)?;
        let sample = match draw_many(&weights, params.sample_size, rng) {
            Ok(s) => s,
            Err(Error::CostAlreadyZero) => break,
            Err(e) => return Err(e),
        };
        if let Some(&bad) = selector.iter().find(|&&s| s >= sample.len()) {
            return Err(Error::InvalidParameter(format!(
                "selector position {bad} outside sample of size {}",
                sample.len()
            )));
        }
        let center = centroid_of_iter(
            points.dim(),
            selector
                .iter()
                .map(|&s| (points.point(sample[s]), points.weight(sample[s]))),
        )?;
        incremental_min_dist_update(&mut cache, &center, points);
        centers.push(&center)?;
    }
    // Zero cost reached early: duplicates of existing centers change nothing.
    let built = centers.len();
    for i in built..params.k {
        let copy = centers.center(i % built).to_vec();
        centers.push(&copy)?;
    }
    let cost = points
        .weights()
        .iter()
        .zip(&cache)
        .map(|(w, d)| w * d)
        .collect::<CompensatedSum>()
        .value();
    Ok((centers, cost))
}

/// Builds one candidate center set from `tuple`, drawing fresh D² samples
/// from `rng` in every round.
pub fn run_trial(
    points: &WeightedPointSet,
    tuple: &CandidateTuple,
    params: &PtasParams,
    rng: &mut RandomSource,
) -> Result<ClusteringResult> {
    let (centers, _) = build_centers(points, tuple, params, rng)?;
    ClusteringResult::evaluate(points, centers, RunMeta::new("ptas-trial"))
}

/// The full best-of search over trials and tuples, addressable per candidate.
#[derive(Debug, Clone)]
pub struct PtasSearch {
    points: WeightedPointSet,
    scale: f64,
    params: PtasParams,
    master_seed: u64,
    streams: Vec<TupleStream>,
    sampling_roots: Vec<RandomSource>,
}

/// A single evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub trial: usize,
    pub tuple: u64,
    pub centers: CenterSet,
    /// Cost on the caller's (unrescaled) weights.
    pub cost: f64,
}

impl PtasSearch {
    pub fn new(points: &WeightedPointSet, params: PtasParams, master_seed: u64) -> Result<Self> {
        let (rescaled, scale) = rescale_weights(points);
        let root = RandomSource::new(master_seed, 0);
        let mut streams = Vec::with_capacity(params.trials);
        let mut sampling_roots = Vec::with_capacity(params.trials);
        for t in 0..params.trials {
            let trial = root.fork(t as u64);
            streams.push(enumerate_or_sample_tuples(&params, &trial.fork(0))?);
            sampling_roots.push(trial.fork(1));
        }
        Ok(Self {
            points: rescaled,
            scale,
            params,
            master_seed,
            streams,
            sampling_roots,
        })
    }

    pub fn params(&self) -> &PtasParams {
        &self.params
    }

    pub fn tuples_per_trial(&self) -> u64 {
        self.streams.first().map_or(0, TupleStream::len)
    }

    pub fn candidate_count(&self) -> u64 {
        self.tuples_per_trial() * self.params.trials as u64
    }

    fn locate(&self, index: u64) -> (usize, u64) {
        let per = self.tuples_per_trial();
        ((index / per) as usize, index % per)
    }

    /// Candidate number `index` in trial-major order.
    pub fn candidate(&self, index: u64) -> Result<Candidate> {
        let (trial, tuple) = self.locate(index);
        let t = self.streams[trial].get(tuple);
        let mut rng = if self.params.share_samples {
            self.sampling_roots[trial].clone()
        } else {
            self.sampling_roots[trial].fork(tuple)
        };
        let (centers, cost) = build_centers(&self.points, &t, &self.params, &mut rng)?;
        Ok(Candidate {
            trial,
            tuple,
            centers,
            cost: cost * self.scale,
        })
    }

    /// Cheapest candidate. Ties go to the lowest candidate index, so the
    /// answer does not depend on how the work is split across threads.
    pub fn best(&self) -> Result<Candidate> {
        let total = self.candidate_count();
        let best = (0..total)
            .into_par_iter()
            .map(|i| self.candidate(i).map(|c| (i, c)))
            .try_reduce_with(|a, b| {
                Ok(match a.1.cost.total_cmp(&b.1.cost).then(a.0.cmp(&b.0)) {
                    Ordering::Greater => b,
                    _ => a,
                })
            })
            .ok_or_else(|| Error::InvalidParameter("no candidates to evaluate".into()))??;
        Ok(best.1)
    }

    pub fn solve(&self, original: &WeightedPointSet) -> Result<ClusteringResult> {
        let best = self.best()?;
        let p = &self.params;
        let meta = RunMeta::new("ptas")
            .with_seed(self.master_seed)
            .param("k", p.k)
            .param("epsilon", p.epsilon)
            .param("working_epsilon", p.working_epsilon)
            .param("c1", p.n_multiplier)
            .param("c2", p.m_multiplier)
            .param("N", p.sample_size)
            .param("M", p.subset_size)
            .param("trials", p.trials)
            .param("tuple_budget", p.tuple_budget)
            .param("adjust_epsilon", p.adjust_epsilon)
            .param("share_samples", p.share_samples)
            .param("candidates", self.candidate_count())
            .param("best_trial", best.trial)
            .param("best_tuple", best.tuple);
        ClusteringResult::evaluate(original, best.centers, meta)
    }
}

/// Weighted k-means by best-of D²-sampling search. Deterministic in
/// `master_seed` and the parameters, independent of the rayon pool size.
///
/// When `k` is at least the number of distinct points, the distinct points
/// themselves (padded with duplicates) are returned at zero cost.
pub fn solve(
    points: &WeightedPointSet,
    k: usize,
    epsilon: f64,
    overrides: &PtasOverrides,
    master_seed: u64,
) -> Result<ClusteringResult> {
    let params = derive_params(k, epsilon, overrides)?;
    let distinct = points.distinct_indices();
    if k >= distinct.len() {
        let mut centers = CenterSet::empty(points.dim());
        for i in 0..k {
            centers.push(points.point(distinct[i % distinct.len()]))?;
        }
        let meta = RunMeta::new("ptas")
            .with_seed(master_seed)
            .param("k", k)
            .param("epsilon", epsilon)
            .param("exact_fit", true);
        return ClusteringResult::evaluate(points, centers, meta);
    }
    PtasSearch::new(points, params, master_seed)?.solve(points)
}
