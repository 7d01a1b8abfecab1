//! Self-contained verification suite. Each check runs on synthetic or fixed
//! instances from a seed and reports a statistic against a threshold.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::baselines::{kmeanspp_seed, lloyd_descend_traced, LloydParams};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::oracle::{brute_force_opt, verify_inaba, verify_null_sampling};
use crate::points::{parallel_axis_rhs, weighted_cost, CenterSet};
use crate::sampling::{d2_sample, d2_weights, RandomSource};
use crate::sensor::{
    decomposition_check, discretize, normalize_density, ConvexPolygon, SensorRegion, DEFAULT_ORDER,
};

pub const CHECK_NAMES: [&str; 8] = [
    "parallel-axis",
    "d2-distribution",
    "first-draw",
    "inaba",
    "null-sampling",
    "oracle",
    "lloyd-monotone",
    "sensor-decomposition",
];

pub const DEFAULT_PARALLEL_AXIS_TOLERANCE: f64 = 1e-9;
pub const CHI_SQUARE_ALPHA: f64 = 0.001;
pub const D2_DRAWS: usize = 100_000;
pub const FIRST_DRAW_INTERVAL: (f64, f64) = (0.743, 0.757);
pub const INABA_REPETITIONS: usize = 10_000;
pub const INABA_SETTINGS: [(usize, f64); 2] = [(20, 0.5), (100, 0.25)];
pub const LLOYD_SLACK: f64 = 1e-12;
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-6;
pub const GENERIC_GRID_EPS: [f64; 3] = [0.2, 0.1, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub case: String,
    pub statistic: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(check: &str, case: impl Into<String>, statistic: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::AtMost => statistic <= threshold,
            Comparison::AtLeast => statistic >= threshold,
        };
        Self {
            check: check.into(),
            case: case.into(),
            statistic,
            comparison,
            threshold,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub parallel_axis_tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            parallel_axis_tolerance: DEFAULT_PARALLEL_AXIS_TOLERANCE,
        }
    }
}

/// Runs one named check. Every check draws from its own stream of `seed`.
pub fn run_check(name: &str, options: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let index = CHECK_NAMES
        .iter()
        .position(|n| *n == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown check `{name}`")))?;
    let mut rng = RandomSource::new(options.seed, 0).fork(index as u64);
    match name {
        "parallel-axis" => parallel_axis(&mut rng, options.parallel_axis_tolerance),
        "d2-distribution" => d2_distribution(&mut rng),
        "first-draw" => first_draw(&mut rng),
        "inaba" => inaba(&mut rng),
        "null-sampling" => null_sampling(&mut rng),
        "oracle" => oracle(),
        "lloyd-monotone" => lloyd_monotone(&mut rng),
        "sensor-decomposition" => sensor_decomposition(),
        _ => unreachable!("name checked against CHECK_NAMES"),
    }
}

/// Runs the named checks in the given order (all of them when `only` is
/// empty).
pub fn run_suite(only: &[String], options: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let names: Vec<&str> = if only.is_empty() {
        CHECK_NAMES.to_vec()
    } else {
        only.iter().map(String::as_str).collect()
    };
    let mut out = Vec::new();
    for name in names {
        out.extend(run_check(name, options)?);
    }
    Ok(out)
}

/// Largest relative gap of the parallel-axis identity over 1000 random
/// instances with up to 50 points in up to 5 dimensions.
pub fn parallel_axis(rng: &mut RandomSource, tolerance: f64) -> Result<Vec<CheckOutcome>> {
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = 1 + rng.below(50);
        let d = 1 + rng.below(5);
        let points = fixtures::random_instance(rng, n, d);
        let c: Vec<f64> = (0..d).map(|_| rng.next_f64() * 40.0 - 20.0).collect();
        let lhs = weighted_cost(&points, &CenterSet::new(&[c.clone()])?)?;
        let rhs = parallel_axis_rhs(&points, &c)?;
        let gap = (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(gap);
    }
    Ok(vec![CheckOutcome::new(
        "parallel-axis",
        "1000 random instances, max relative gap",
        worst,
        Comparison::AtMost,
        tolerance,
    )])
}

/// Pearson statistic and upper-tail p-value of observed counts against
/// expected probabilities.
pub fn chi_square_p_value(counts: &[usize], probabilities: &[f64]) -> (f64, f64) {
    let total: usize = counts.iter().sum();
    let statistic: f64 = counts
        .iter()
        .zip(probabilities)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (probabilities.len() - 1) as f64;
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    (statistic, 1.0 - dist.cdf(statistic))
}

/// Chi-square goodness of fit of 10^5 D² draws on the fixed 6-point instance.
pub fn d2_distribution(rng: &mut RandomSource) -> Result<Vec<CheckOutcome>> {
    let (points, centers) = fixtures::d2_instance();
    let probabilities = d2_weights(&points, &centers)?
        .probabilities()
        .ok_or(Error::DegenerateDistribution)?;
    let mut counts = vec![0usize; points.len()];
    for i in d2_sample(&points, &centers, D2_DRAWS, rng)? {
        counts[i] += 1;
    }
    let (_, p) = chi_square_p_value(&counts, &probabilities);
    Ok(vec![CheckOutcome::new(
        "d2-distribution",
        "chi-square p-value, 6 points, 1e5 draws",
        p,
        Comparison::AtLeast,
        CHI_SQUARE_ALPHA,
    )])
}

/// Frequency of the weight-3 point among 10^5 first draws.
pub fn first_draw(rng: &mut RandomSource) -> Result<Vec<CheckOutcome>> {
    let points = fixtures::first_draw_instance();
    let draws = d2_sample(&points, &CenterSet::empty(1), D2_DRAWS, rng)?;
    let f = draws.iter().filter(|&&i| i == 1).count() as f64 / D2_DRAWS as f64;
    let (lo, hi) = FIRST_DRAW_INTERVAL;
    Ok(vec![
        CheckOutcome::new("first-draw", "weights (1,3): frequency lower bound", f, Comparison::AtLeast, lo),
        CheckOutcome::new("first-draw", "weights (1,3): frequency upper bound", f, Comparison::AtMost, hi),
    ])
}

pub fn inaba(rng: &mut RandomSource) -> Result<Vec<CheckOutcome>> {
    let points = fixtures::inaba_instance();
    INABA_SETTINGS
        .iter()
        .map(|&(m, delta)| {
            let rep = verify_inaba(&points, m, delta, INABA_REPETITIONS, rng)?;
            Ok(CheckOutcome::new(
                "inaba",
                format!("M={m} delta={delta}: success rate"),
                rep.rate(),
                Comparison::AtLeast,
                rep.threshold,
            ))
        })
        .collect()
}

/// Gated uniform sampling with `gamma = 1/2`, `eps = 1` over 1000 runs.
pub fn null_sampling(rng: &mut RandomSource) -> Result<Vec<CheckOutcome>> {
    let points = fixtures::inaba_instance();
    let rep = verify_null_sampling(0.5, 1.0, &points, 1000, rng)?;
    Ok(vec![
        CheckOutcome::new(
            "null-sampling",
            "gamma=0.5 eps=1: runs with enough non-null draws",
            rep.count_rate(),
            Comparison::AtLeast,
            0.99,
        ),
        CheckOutcome::new(
            "null-sampling",
            "gamma=0.5 eps=1: success rate",
            rep.success_rate(),
            Comparison::AtLeast,
            0.5,
        ),
    ])
}

/// Exact optimum of every fixed instance against its worked-out value.
pub fn oracle() -> Result<Vec<CheckOutcome>> {
    fixtures::oracle_instances()
        .iter()
        .map(|f| {
            let exact = brute_force_opt(&f.points, f.k)?;
            let rel = (exact.cost - f.opt).abs() / f.opt;
            Ok(CheckOutcome::new(
                "oracle",
                format!("{}: relative error", f.name),
                rel,
                Comparison::AtMost,
                1e-12,
            ))
        })
        .collect()
}

/// Largest per-iteration cost increase of Lloyd descent over 100 random
/// instances (n <= 200, k <= 5, d <= 3).
pub fn lloyd_monotone(rng: &mut RandomSource) -> Result<Vec<CheckOutcome>> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let n = 1 + rng.below(200);
        let d = 1 + rng.below(3);
        let k = 1 + rng.below(5);
        let points = fixtures::random_instance(rng, n, d);
        let init = kmeanspp_seed(&points, k, rng)?;
        let (_, trace) = lloyd_descend_traced(&points, &init, &LloydParams::default())?;
        for w in trace.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    Ok(vec![CheckOutcome::new(
        "lloyd-monotone",
        "100 random instances: max cost increase",
        worst,
        Comparison::AtMost,
        LLOYD_SLACK,
    )])
}

/// Generic two-center configuration whose bisector crosses grid cells.
pub const GENERIC_CENTERS: [[f64; 2]; 2] = [[0.3, 0.4], [0.71, 0.63]];

/// Coverage-cost decomposition gaps on the uniform unit square.
pub fn sensor_decomposition() -> Result<Vec<CheckOutcome>> {
    let square = ConvexPolygon::rectangle([0.0, 0.0], [1.0, 1.0])?;
    let region = normalize_density(&SensorRegion::uniform(square), DEFAULT_ORDER)?;
    let to_centers = |c: &[[f64; 2]]| CenterSet::new(&c.iter().map(|p| p.to_vec()).collect::<Vec<_>>());
    let coarse = discretize(&region, 0.5, DEFAULT_ORDER)?;
    let mut out = Vec::new();
    for (case, centers) in [
        ("one center at (0.5,0.5), grid 0.5: gap", vec![[0.5, 0.5]]),
        ("centers (0.25,0.5),(0.75,0.5), grid 0.5: gap", vec![[0.25, 0.5], [0.75, 0.5]]),
    ] {
        let rep = decomposition_check(&region, &coarse, &to_centers(&centers)?, DEFAULT_ORDER)?;
        out.push(CheckOutcome::new(
            "sensor-decomposition",
            case,
            rep.gap,
            Comparison::AtMost,
            DECOMPOSITION_TOLERANCE,
        ));
    }
    let generic = to_centers(&GENERIC_CENTERS)?;
    let gaps = GENERIC_GRID_EPS
        .iter()
        .map(|&eps| {
            let d = discretize(&region, eps, DEFAULT_ORDER)?;
            Ok(decomposition_check(&region, &d, &generic, DEFAULT_ORDER)?.gap)
        })
        .collect::<Result<Vec<f64>>>()?;
    // Ratio of successive gaps; below one means strictly decreasing.
    let worst_ratio = gaps.windows(2).map(|w| w[1] / w[0]).fold(f64::NEG_INFINITY, f64::max);
    out.push(CheckOutcome::new(
        "sensor-decomposition",
        format!(
            "generic centers, grid 0.2/0.1/0.05: largest successive gap ratio (gaps {})",
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join(", ")
        ),
        worst_ratio,
        Comparison::AtMost,
        1.0 - f64::EPSILON,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_reference_values() {
        // Perfect fit has p = 1.
        let (s, p) = chi_square_p_value(&[25, 25, 50], &[0.25, 0.25, 0.5]);
        assert_eq!(s, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        // Statistic 13.8155 is the 0.001 upper quantile for 2 degrees of freedom.
        let (s, p) = chi_square_p_value(&[0, 100], &[0.5, 0.5]);
        assert_eq!(s, 100.0);
        assert!(p < 1e-20);
        let dist = ChiSquared::new(2.0).unwrap();
        assert!((1.0 - dist.cdf(13.815510557964274) - 0.001).abs() < 1e-9);
    }

    #[test]
    fn unknown_check_is_rejected() {
        assert!(run_check("nope", &VerifyOptions::default()).is_err());
    }

    #[test]
    fn tight_tolerance_fails_parallel_axis() {
        let opts = VerifyOptions {
            seed: 0,
            parallel_axis_tolerance: 1e-20,
        };
        let out = run_check("parallel-axis", &opts).unwrap();
        assert!(!out[0].passed, "{out:?}");
    }
}
