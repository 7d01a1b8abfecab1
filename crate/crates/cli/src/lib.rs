//! Command-line front end for the `wkmeans` toolkit.
//!
//! Every command writes a result document to `--output` (stdout when
//! absent). Exit codes: 0 success, 1 verification failure, 2 usage or input
//! error, 3 resource or feasibility error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wkmeans::baselines::{kmeanspp_lloyd, LloydParams};
use wkmeans::csv_io;
use wkmeans::fixtures;
use wkmeans::ptas::{self, PtasOverrides, TupleBudget};
use wkmeans::sensor::{self, PlacementConfig, RegionFile, SensorSolver, DEFAULT_ORDER};
use wkmeans::verify::{self, VerifyOptions};
use wkmeans::{CenterSet, ClusteringResult, Error, RunMeta, WeightedPointSet};

mod output;

pub use output::{digest, Document, Params, Timing};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Bundled four-point sample used when `cluster` gets no `--input`.
pub const SAMPLE_POINTS: &str = include_str!("../data/line4.csv");
/// Bundled unit-square region used when `sensor` gets no `--region`.
pub const SAMPLE_REGION: &str = include_str!("../data/unit_square.json");

const DEFAULT_GRID_EPS: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "wkmeans", version, about = "Weighted k-means toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a weighted point set read from CSV.
    Cluster(ClusterArgs),
    /// Place sensors over a convex region with a density.
    Sensor(SensorArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Run every solver on the fixed instances and emit a long-format CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Ptas,
    KmeansppLloyd,
    Oracle,
}

impl SolverKind {
    fn name(self) -> &'static str {
        match self {
            SolverKind::Ptas => "ptas",
            SolverKind::KmeansppLloyd => "kmeanspp-lloyd",
            SolverKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker thread cap (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output path (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Leave the timing block out so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = SolverKind::Ptas)]
    pub solver: SolverKind,
    /// Sample-size multiplier: N = ceil(c1 k / eps^2).
    #[arg(long, default_value_t = 8.0)]
    pub c1: f64,
    /// Subset-size multiplier: M = ceil(c2 / eps).
    #[arg(long, default_value_t = 4.0)]
    pub c2: f64,
    /// Independent trials (default 2^k).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Random tuples per trial, or `exhaustive`.
    #[arg(long, default_value = "2000")]
    pub tuple_budget: String,
    /// Shrink epsilon so the guarantee holds without irreducibility.
    #[arg(long)]
    pub adjust_epsilon: bool,
    /// Reuse one sampling stream for every tuple of a trial.
    #[arg(long)]
    pub share_samples: bool,
    /// Lloyd iteration cap.
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
}

impl SolverArgs {
    fn overrides(&self) -> Result<PtasOverrides, Error> {
        Ok(PtasOverrides {
            n_multiplier: Some(self.c1),
            m_multiplier: Some(self.c2),
            trials: self.trials,
            tuple_budget: Some(self.tuple_budget.parse::<TupleBudget>()?),
            adjust_epsilon: self.adjust_epsilon,
            share_samples: self.share_samples,
        })
    }

    fn lloyd(&self) -> LloydParams {
        LloydParams {
            max_iters: self.max_iters,
            ..LloydParams::default()
        }
    }

    fn sensor_solver(&self) -> Result<SensorSolver, Error> {
        Ok(match self.solver {
            SolverKind::Ptas => SensorSolver::Ptas {
                epsilon: self.epsilon,
                overrides: self.overrides()?,
            },
            SolverKind::KmeansppLloyd => SensorSolver::KmeansppLloyd(self.lloyd()),
            SolverKind::Oracle => SensorSolver::Oracle,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    /// CSV with header `x1,...,xd,weight` (default: bundled 4-point sample).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// JSON array of centers to evaluate instead of solving.
    #[arg(long)]
    pub centers: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SensorArgs {
    /// Region JSON file (default: bundled uniform unit square).
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Grid spacing (default: the region file's value, else 0.05).
    #[arg(long)]
    pub grid_eps: Option<f64>,
    /// Gauss-Legendre order of the triangle rule.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub quad_order: usize,
    /// Also write the discretized weighted point set as CSV.
    #[arg(long)]
    pub points_output: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Run only these checks (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<String>,
    /// Relative tolerance of the parallel-axis check.
    #[arg(long, default_value_t = verify::DEFAULT_PARALLEL_AXIS_TOLERANCE)]
    pub parallel_axis_tol: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Seeds per instance and solver, starting at `--seed`.
    #[arg(long, default_value_t = 20)]
    pub repeat: usize,
    /// Solvers to run (default: all three).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub solvers: Vec<SolverKind>,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 8.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 4.0)]
    pub c2: f64,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value = "2000")]
    pub tuple_budget: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Errors that end a command, with their exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::EnumerationInfeasible { .. }
            | Error::InstanceTooLarge { .. }
            | Error::ExperimentTooLarge { .. } => EXIT_INFEASIBLE,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
/// Diagnostics go to `stderr`; documents without `--output` go to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let threads = match command {
        Command::Cluster(a) => a.common.threads,
        Command::Sensor(a) => a.common.threads,
        Command::Verify(a) => a.common.threads,
        Command::Bench(a) => a.threads,
    };
    // Output is buffered so the command can run inside a thread pool.
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let result = with_threads(threads, || match command {
        Command::Cluster(a) => cmd_cluster(a, &mut out, &mut err),
        Command::Sensor(a) => cmd_sensor(a, &mut out, &mut err),
        Command::Verify(a) => cmd_verify(a, &mut out, &mut err),
        Command::Bench(a) => cmd_bench(a, &mut out, &mut err),
    });
    let _ = stdout.write_all(&out);
    let _ = stderr.write_all(&err);
    result?
}

fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(usage("--threads must be positive")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| usage(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn emit(path: Option<&Path>, body: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| io_failure(p, e)),
        None => stdout.write_all(body.as_bytes()).map_err(|e| usage(e.to_string())),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn load_points(input: Option<&Path>) -> Result<WeightedPointSet, Failure> {
    let text = match input {
        Some(p) => read_text(p)?,
        None => SAMPLE_POINTS.to_string(),
    };
    csv_io::read_points(text.as_bytes()).map_err(|e| match (input, e) {
        (Some(p), Error::Parse { line, message }) => usage(format!("{}:{line}: {message}", p.display())),
        (_, e) => e.into(),
    })
}

fn load_region(path: Option<&Path>) -> Result<RegionFile, Failure> {
    let text = match path {
        Some(p) => read_text(p)?,
        None => SAMPLE_REGION.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid region file: {e}")))
}

pub fn solve(points: &WeightedPointSet, args: &SolverArgs, seed: u64) -> Result<ClusteringResult, Error> {
    if args.k == 0 {
        return Err(Error::InvalidK);
    }
    match args.solver {
        SolverKind::Ptas => ptas::solve(points, args.k, args.epsilon, &args.overrides()?, seed),
        SolverKind::KmeansppLloyd => kmeanspp_lloyd(points, args.k, &args.lloyd(), seed),
        SolverKind::Oracle => sensor::solve_points(points, args.k, &SensorSolver::Oracle, seed),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterResult {
    pub command: &'static str,
    pub solver: String,
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub dim: usize,
    pub params: Params,
    pub iterations: Option<usize>,
    pub cost: f64,
    pub centers: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
}

pub fn cmd_cluster(args: &ClusterArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let points = load_points(args.input.as_deref())?;
    let seed = args.common.seed;
    let result = match &args.centers {
        Some(path) => {
            let rows: Vec<Vec<f64>> =
                serde_json::from_str(&read_text(path)?).map_err(|e| usage(format!("invalid centers file: {e}")))?;
            let centers = CenterSet::new(&rows)?;
            if centers.dim() != points.dim() {
                return Err(Error::DimensionMismatch {
                    expected: points.dim(),
                    got: centers.dim(),
                }
                .into());
            }
            ClusteringResult::evaluate(&points, centers, RunMeta::new("fixed"))?
        }
        None => solve(&points, &args.solver, seed)?,
    };
    let k = result.centers.len();
    let doc = ClusterResult {
        command: "cluster",
        solver: result.meta.solver.clone(),
        seed,
        k,
        n: points.len(),
        dim: points.dim(),
        params: Params(result.meta.params.clone()),
        iterations: result.meta.iterations,
        cost: result.cost,
        centers: result.centers.to_vecs(),
        assignment: result.assignment.clone(),
    };
    let body = match args.common.format {
        Format::Json => Document::new(&doc, timing(start, args.common.no_timing)).to_json(),
        Format::Csv => assignment_csv(&points, &result.assignment),
    };
    emit(args.common.output.as_deref(), &body, stdout)?;
    let _ = writeln!(stderr, "{} k={k} cost={}", doc.solver, doc.cost);
    Ok(EXIT_OK)
}

fn assignment_csv(points: &WeightedPointSet, assignment: &[usize]) -> String {
    let mut s = String::new();
    for j in 1..=points.dim() {
        s.push_str(&format!("x{j},"));
    }
    s.push_str("weight,cluster\n");
    for ((x, w), a) in points.iter().zip(assignment) {
        for v in x {
            s.push_str(&format!("{v},"));
        }
        s.push_str(&format!("{w},{a}\n"));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct SensorResult {
    pub command: &'static str,
    pub solver: String,
    pub seed: u64,
    pub k: usize,
    pub grid_eps: f64,
    pub quad_order: usize,
    pub cells: usize,
    pub params: Params,
    pub coverage_cost: f64,
    pub weighted_cost: f64,
    pub moment_sum: f64,
    /// `|H - (weighted_cost + moment_sum)|`.
    pub decomposition_gap: f64,
    pub centers: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub fn cmd_sensor(args: &SensorArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let file = load_region(args.region.as_deref())?;
    let region = file.to_region()?;
    let grid_eps = args.grid_eps.or(file.grid_eps).unwrap_or(DEFAULT_GRID_EPS);
    if !(grid_eps.is_finite() && grid_eps > 0.0) {
        return Err(usage(format!("grid_eps must be positive, got {grid_eps}")));
    }
    if args.quad_order == 0 {
        return Err(usage("quad order must be positive"));
    }
    let config = PlacementConfig {
        k: args.solver.k,
        grid_eps,
        quad_order: args.quad_order,
        solver: args.solver.sensor_solver()?,
    };
    let seed = args.common.seed;
    let report = sensor::place_sensors(&region, &config, seed)?;
    for w in &report.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    if let Some(path) = &args.points_output {
        let csv = csv_io::points_to_string(report.discretization.as_point_set());
        fs::write(path, csv).map_err(|e| io_failure(path, e))?;
    }
    let doc = SensorResult {
        command: "sensor",
        solver: report.meta.solver.clone(),
        seed,
        k: config.k,
        grid_eps,
        quad_order: config.quad_order,
        cells: report.discretization.cells.len(),
        params: Params(report.meta.params.clone()),
        coverage_cost: report.coverage_cost,
        weighted_cost: report.weighted_cost,
        moment_sum: report.moment_sum,
        decomposition_gap: (report.coverage_cost - (report.weighted_cost + report.moment_sum)).abs(),
        centers: report.centers.to_vecs(),
        warnings: report.warnings.clone(),
    };
    let body = match args.common.format {
        Format::Json => Document::new(&doc, timing(start, args.common.no_timing)).to_json(),
        Format::Csv => {
            let mut s = String::from("x1,x2\n");
            for c in &doc.centers {
                s.push_str(&format!("{},{}\n", c[0], c[1]));
            }
            s
        }
    };
    emit(args.common.output.as_deref(), &body, stdout)?;
    let _ = writeln!(stderr, "{} k={} H={}", doc.solver, doc.k, doc.coverage_cost);
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<verify::CheckOutcome>,
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let start = Instant::now();
    let options = VerifyOptions {
        seed: args.common.seed,
        parallel_axis_tolerance: args.parallel_axis_tol,
    };
    let checks = verify::run_suite(&args.only, &options)?;
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        let _ = writeln!(
            stderr,
            "{} {} [{}] {:.6e} {} {:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.check,
            c.case,
            c.statistic,
            match c.comparison {
                verify::Comparison::AtMost => "<=",
                verify::Comparison::AtLeast => ">=",
            },
            c.threshold
        );
    }
    let report = VerifyReport {
        command: "verify",
        seed: args.common.seed,
        passed,
        checks,
    };
    let body = match args.common.format {
        Format::Json => Document::new(&report, timing(start, args.common.no_timing)).to_json(),
        Format::Csv => {
            let mut s = String::from("check,case,statistic,comparison,threshold,passed\n");
            for c in &report.checks {
                let cmp = if c.comparison == verify::Comparison::AtMost { "<=" } else { ">=" };
                s.push_str(&format!(
                    "{},\"{}\",{},{},{},{}\n",
                    c.check,
                    c.case.replace('"', "\"\""),
                    c.statistic,
                    cmp,
                    c.threshold,
                    c.passed
                ));
            }
            s
        }
    };
    emit(args.common.output.as_deref(), &body, stdout)?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// One line of the benchmark CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub solver: &'static str,
    pub seed: u64,
    pub cost: f64,
    pub ratio_to_oracle: Option<f64>,
    pub wall_time_s: f64,
}

pub const BENCH_HEADER: &str = "instance,solver,seed,cost,ratio_to_oracle,wall_time_s";

/// Largest instance for which the oracle column is filled in.
pub const BENCH_ORACLE_LIMIT: usize = 14;

pub fn bench_rows(args: &BenchArgs) -> Result<Vec<BenchRow>, Failure> {
    if args.repeat == 0 {
        return Err(usage("--repeat must be positive"));
    }
    let solvers = if args.solvers.is_empty() {
        vec![SolverKind::Ptas, SolverKind::KmeansppLloyd, SolverKind::Oracle]
    } else {
        args.solvers.clone()
    };
    let mut rows = Vec::new();
    for fixture in fixtures::oracle_instances() {
        let opt = if fixture.points.len() <= BENCH_ORACLE_LIMIT {
            Some(wkmeans::oracle::brute_force_opt(&fixture.points, fixture.k)?.cost)
        } else {
            None
        };
        for &kind in &solvers {
            let solver_args = SolverArgs {
                k: fixture.k,
                epsilon: args.epsilon,
                solver: kind,
                c1: args.c1,
                c2: args.c2,
                trials: args.trials,
                tuple_budget: args.tuple_budget.clone(),
                adjust_epsilon: false,
                share_samples: false,
                max_iters: LloydParams::default().max_iters,
            };
            for r in 0..args.repeat as u64 {
                let seed = args.seed.wrapping_add(r);
                let start = Instant::now();
                let result = solve(&fixture.points, &solver_args, seed)?;
                let wall = start.elapsed().as_secs_f64();
                rows.push(BenchRow {
                    instance: fixture.name.to_string(),
                    solver: kind.name(),
                    seed,
                    cost: result.cost,
                    ratio_to_oracle: opt.map(|o| if o > 0.0 { result.cost / o } else { 1.0 }),
                    wall_time_s: wall,
                });
            }
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{BENCH_HEADER}\n");
    for r in rows {
        let ratio = r.ratio_to_oracle.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.instance, r.solver, r.seed, r.cost, ratio, r.wall_time_s
        ));
    }
    s
}

pub fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let rows = bench_rows(args)?;
    emit(args.output.as_deref(), &bench_csv(&rows), stdout)?;
    let _ = writeln!(stderr, "{} rows", rows.len());
    Ok(EXIT_OK)
}

fn timing(start: Instant, skip: bool) -> Option<Timing> {
    (!skip).then(|| Timing {
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
