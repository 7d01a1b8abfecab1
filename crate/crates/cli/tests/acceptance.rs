//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each and exits nonzero if any fails. Built with `harness = false` so
//! the lines are always shown.

use std::path::Path;
use std::time::{Duration, Instant};

use serde_json::Value;
use wkmeans::fixtures::{self, Fixture};
use wkmeans::oracle::brute_force_opt;
use wkmeans::points::CenterSet;
use wkmeans::sampling::{d2_sample, RandomSource};
use wkmeans::sensor::{decomposition_check, discretize, normalize_density, ConvexPolygon, SensorRegion, DEFAULT_ORDER};
use wkmeans::verify::{self, chi_square_p_value, CheckOutcome, VerifyOptions};
use wkmeans::{csv_io, WeightedPointSet};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn checks(name: &str) -> Vec<CheckOutcome> {
    verify::run_check(name, &VerifyOptions::default()).expect("check runs")
}

fn all_pass(c: &[CheckOutcome]) -> bool {
    c.iter().all(|c| c.passed)
}

fn summary(c: &[CheckOutcome]) -> String {
    c.iter()
        .map(|c| format!("{}={:.4e}", c.case, c.statistic))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Runs the CLI in-process and returns (exit code, stdout).
fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["wkmeans"];
    argv.extend_from_slice(args);
    let code = wkmeans_cli::run(argv, &mut out, &mut err);
    if code != 0 {
        eprintln!("{}", String::from_utf8_lossy(&err));
    }
    (code, out)
}

fn parallel_axis() -> Outcome {
    // Independent recomputation with plain sums, then the library check.
    let mut rng = RandomSource::new(1, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = 1 + rng.below(50);
        let d = 1 + rng.below(5);
        let p = fixtures::random_instance(&mut rng, n, d);
        let c: Vec<f64> = (0..d).map(|_| rng.next_f64() * 40.0 - 20.0).collect();
        let w: f64 = p.weights().iter().sum();
        let g: Vec<f64> = (0..d)
            .map(|j| p.iter().map(|(x, wi)| wi * x[j]).sum::<f64>() / w)
            .collect();
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let lhs: f64 = p.iter().map(|(x, wi)| wi * dist(x, &c)).sum();
        let rhs: f64 = p.iter().map(|(x, wi)| wi * dist(x, &g)).sum::<f64>() + w * dist(&c, &g);
        worst = worst.max((lhs - rhs).abs() / lhs);
    }
    let lib = checks("parallel-axis");
    outcome(
        worst <= 1e-9 && all_pass(&lib),
        format!("independent max gap {worst:.3e}; {}", summary(&lib)),
    )
}

fn d2_distribution() -> Outcome {
    // Expected probabilities from the definition, not the library.
    let (points, centers) = fixtures::d2_instance();
    let mass: Vec<f64> = points
        .iter()
        .map(|(x, w)| w * ((x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2)))
        .collect();
    let total: f64 = mass.iter().sum();
    let probs: Vec<f64> = mass.iter().map(|m| m / total).collect();
    let mut rng = RandomSource::new(2, 0);
    let mut counts = vec![0usize; points.len()];
    for i in d2_sample(&points, &centers, 100_000, &mut rng).unwrap() {
        counts[i] += 1;
    }
    let (stat, p) = chi_square_p_value(&counts, &probs);

    let two = fixtures::first_draw_instance();
    let draws = d2_sample(&two, &CenterSet::empty(1), 100_000, &mut rng).unwrap();
    let freq = draws.iter().filter(|&&i| i == 1).count() as f64 / 1e5;

    let mut lib = checks("d2-distribution");
    lib.extend(checks("first-draw"));
    outcome(
        p >= 0.001 && (0.743..=0.757).contains(&freq) && all_pass(&lib),
        format!("chi2={stat:.3} p={p:.4}, first-draw freq={freq:.5}; {}", summary(&lib)),
    )
}

fn inaba() -> Outcome {
    let c = checks("inaba");
    outcome(all_pass(&c), summary(&c))
}

fn oracle() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for f in fixtures::oracle_instances() {
        let exact = brute_force_opt(&f.points, f.k).unwrap();
        // Equal up to the rounding of the decimal optimum itself.
        let matched = (exact.cost - f.opt).abs() <= 4.0 * f64::EPSILON * f.opt;
        ok &= matched && f.points.len() <= 12 && f.k <= 3;
        parts.push(format!("{}={}", f.name, exact.cost));
    }
    let line4 = brute_force_opt(&fixtures::line4(), 2).unwrap().cost;
    let pair = WeightedPointSet::new(vec![
        wkmeans::WeightedPoint::new(vec![0.0, 0.0], 9.0),
        wkmeans::WeightedPoint::new(vec![1.0, 0.0], 1.0),
    ])
    .unwrap();
    let pair = brute_force_opt(&pair, 1).unwrap().cost;
    ok &= line4 == 1.0 && (pair - 0.9).abs() <= 4.0 * f64::EPSILON;
    outcome(ok, parts.join(", "))
}

/// Runs `cluster` with the desk PTAS constants on every fixture and seed,
/// returning the result documents.
fn ptas_documents(dir: &Path, seeds: u64, threads: &str) -> Vec<(String, Vec<u8>)> {
    let mut docs = Vec::new();
    for f in fixtures::oracle_instances() {
        let input = dir.join(format!("{}.csv", f.name));
        if !input.exists() {
            std::fs::write(&input, csv_io::points_to_string(&f.points)).unwrap();
        }
        let k = f.k.to_string();
        for seed in 0..seeds {
            let seed = seed.to_string();
            let (code, out) = cli(&[
                "cluster",
                "--input",
                input.to_str().unwrap(),
                "--k",
                &k,
                "--epsilon",
                "0.5",
                "--c1",
                "8",
                "--c2",
                "4",
                "--tuple-budget",
                "2000",
                "--seed",
                &seed,
                "--threads",
                threads,
                "--no-timing",
            ]);
            assert_eq!(code, 0, "cluster failed on {}", f.name);
            docs.push((format!("{}/{seed}", f.name), out));
        }
    }
    docs
}

fn cost_of(doc: &[u8]) -> f64 {
    let v: Value = serde_json::from_slice(doc).unwrap();
    v["result"]["cost"].as_f64().unwrap()
}

fn ptas_approximation(docs: &[(String, Vec<u8>)]) -> Outcome {
    let fixtures: Vec<Fixture> = fixtures::oracle_instances();
    let mut ok = true;
    let mut parts = Vec::new();
    for f in &fixtures {
        let hits = docs
            .iter()
            .filter(|(name, _)| name.split('/').next() == Some(f.name))
            .filter(|(_, doc)| cost_of(doc) <= 1.5 * f.opt)
            .count();
        ok &= hits >= 95;
        parts.push(format!("{} {hits}/100", f.name));
    }
    outcome(ok, parts.join(", "))
}

fn lloyd_monotone() -> Outcome {
    let c = checks("lloyd-monotone");
    outcome(all_pass(&c), summary(&c))
}

fn sensor_decomposition() -> Outcome {
    let square = ConvexPolygon::rectangle([0.0, 0.0], [1.0, 1.0]).unwrap();
    let region = normalize_density(&SensorRegion::uniform(square), DEFAULT_ORDER).unwrap();
    let disc = discretize(&region, 0.5, DEFAULT_ORDER).unwrap();
    let center = CenterSet::new(&[vec![0.5, 0.5]]).unwrap();
    let rep = decomposition_check(&region, &disc, &center, DEFAULT_ORDER).unwrap();
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let values = near(rep.coverage_cost, 1.0 / 6.0) && near(rep.weighted_cost, 1.0 / 8.0) && near(rep.moment_sum, 1.0 / 24.0);
    let lib = checks("sensor-decomposition");
    outcome(
        values && rep.gap <= 1e-6 && all_pass(&lib),
        format!(
            "H={} weighted={} J={} gap={:.1e}; {}",
            rep.coverage_cost,
            rep.weighted_cost,
            rep.moment_sum,
            rep.gap,
            summary(&lib)
        ),
    )
}

fn sensor_document(threads: &str) -> Vec<u8> {
    let (code, out) = cli(&["sensor", "--k", "1", "--solver", "ptas", "--threads", threads, "--no-timing"]);
    assert_eq!(code, 0);
    out
}

fn end_to_end(doc: &[u8]) -> Outcome {
    let v: Value = serde_json::from_slice(doc).unwrap();
    let h = v["result"]["coverage_cost"].as_f64().unwrap();
    let c = &v["result"]["centers"][0];
    let (x, y) = (c[0].as_f64().unwrap(), c[1].as_f64().unwrap());
    let rel = (h - 1.0 / 6.0).abs() / (1.0 / 6.0);
    let off = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
    outcome(rel <= 0.02 && off <= 0.02, format!("H={h} (rel {rel:.2e}), center=({x}, {y})"))
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(&str, Outcome, Duration, Duration)> = Vec::new();
    let mut timed = |name: &'static str, budget: u64, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        results.push((name, o, start.elapsed(), Duration::from_secs(budget)));
    };

    timed("1 parallel-axis identity", 1, &mut parallel_axis);
    timed("2 weighted D2-sampling distribution", 5, &mut d2_distribution);
    timed("3 Inaba sampling lemma", 30, &mut inaba);
    timed("4 oracle equivalence", 10, &mut oracle);
    let mut single = Vec::new();
    timed("5 PTAS approximation", 120, &mut || {
        single = ptas_documents(dir.path(), 100, "1");
        ptas_approximation(&single)
    });
    timed("6 Lloyd monotone descent", 10, &mut lloyd_monotone);
    timed("7 sensor decomposition", 30, &mut sensor_decomposition);
    let mut sensor_single = Vec::new();
    timed("8 end-to-end coverage", 60, &mut || {
        sensor_single = sensor_document("1");
        end_to_end(&sensor_single)
    });
    timed("9 determinism across thread counts", u64::MAX, &mut || {
        let multi = ptas_documents(dir.path(), 100, "8");
        let differing = single.iter().zip(&multi).filter(|(a, b)| a.1 != b.1).count();
        let sensor_same = sensor_document("8") == sensor_single;
        outcome(
            differing == 0 && multi.len() == single.len() && sensor_same,
            format!(
                "{} cluster documents, {differing} differ; sensor document identical: {sensor_same}",
                multi.len()
            ),
        )
    });

    let mut failed = 0;
    for (name, o, elapsed, budget) in &results {
        let in_time = elapsed <= budget;
        let pass = o.passed && in_time;
        if !pass {
            failed += 1;
        }
        let limit = if budget.as_secs() == u64::MAX {
            String::new()
        } else {
            format!(" (limit {}s)", budget.as_secs())
        };
        println!(
            "{} criterion {name}: {} [{:.2}s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
