//! The `sigma2` command line: argument parsing, dispatch and exit codes.
//!
//! Exit code 0 means every check passed, 1 means a check failed (the report
//! is still written), 2 means a usage or configuration error (no report).

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::flow::{self, FlowError, Trajectory, DEFAULT_ETA};
use crate::functionals::{el_report, ElReport, SIGMA2_COUPLING};
use crate::identities::{run_suite, SuiteConfig, SuiteReport};
use crate::metric::{catalog_metric, load_metric_spec, MetricChart};
use crate::report::{to_json, write_report, Format, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const SEED_ENV: &str = "SIGMA2_SEED";
/// Relative tolerance for the scalar curvature comparison in `verify-example`.
pub const SCALAR_TOL: f64 = 1e-9;
/// Absolute floor added to every scaled tolerance.
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "sigma2", version, about = "Curvature and σ₂-functional verification for 3-metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that the warped example metric is critical with R = −8/(1+x²+y²).
    VerifyExample(VerifyArgs),
    /// Run the randomized identity and inequality suite.
    Identities(IdentitiesArgs),
    /// Evaluate Euler–Lagrange residuals of a metric at points.
    Residual(ResidualArgs),
    /// Run the discrete gradient flow from a perturbed flat torus.
    Flow(FlowArgs),
}

#[derive(Args, Debug)]
pub struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format: json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Random seed; falls back to $SIGMA2_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = SIGMA2_COUPLING, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct IdentitiesArgs {
    #[arg(long, default_value_t = 100_000)]
    pub matrix_trials: usize,
    #[arg(long, default_value_t = 200)]
    pub chart_trials: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct ResidualArgs {
    /// Catalog name (flat, gv_example, round_sphere, warped_template:<f>) or
    /// path to a metric document.
    #[arg(long)]
    pub metric: String,
    #[arg(long, default_value_t = SIGMA2_COUPLING, allow_negative_numbers = true)]
    pub t: f64,
    /// Evaluation point `x,y,z`; repeatable. Without any, points are sampled.
    #[arg(long = "point", allow_hyphen_values = true)]
    pub points: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub amplitude: f64,
    #[arg(long, default_value_t = SIGMA2_COUPLING, allow_negative_numbers = true)]
    pub t: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Stop once the discrete L² gradient norm is at most this.
    #[arg(long, default_value_t = 1e-10)]
    pub target_grad_norm: f64,
    #[command(flatten)]
    pub output: Output,
}

/// A usage or configuration problem; reported on stderr with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match execute(cli.command, env_seed.as_deref()) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn execute(command: Command, env_seed: Option<&str>) -> Result<i32, UsageError> {
    match command {
        Command::VerifyExample(a) => verify_example(a, env_seed),
        Command::Identities(a) => identities(a, env_seed),
        Command::Residual(a) => residual(a, env_seed),
        Command::Flow(a) => run_flow(a, env_seed),
    }
}

/// `--seed`, else `$SIGMA2_SEED`, else 0.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64, UsageError> {
    match (flag, env) {
        (Some(s), _) => Ok(s),
        (None, Some(v)) => {
            v.trim().parse().map_err(|_| UsageError(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))
        }
        (None, None) => Ok(0),
    }
}

fn format_for(output: &Output, default: Format, allowed: Format) -> Result<Format, UsageError> {
    let f = match &output.format {
        Some(s) => s.parse::<Format>()?,
        None => default,
    };
    if f != allowed {
        return Err(UsageError(format!("this command writes {allowed} reports, not {f}")));
    }
    Ok(f)
}

fn check_tol(tol: f64) -> Result<(), UsageError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(UsageError(format!("--tol must be positive and finite, got {tol}")));
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), UsageError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| UsageError(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            if !bytes.ends_with(b"\n") {
                stdout.write_all(b"\n")?;
            }
            stdout.flush()?;
            Ok(())
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points (bases 2, 3, 5) mapped to `[−2, 2]³`, starting at index
/// `seed + 1`.
pub fn halton_points(count: usize, seed: u64) -> Vec<[f64; 3]> {
    (0..count as u64)
        .map(|k| {
            let i = seed.wrapping_add(k).wrapping_add(1);
            [2u64, 3, 5].map(|b| -2.0 + 4.0 * radical_inverse(i, b))
        })
        .collect()
}

#[derive(Serialize)]
struct ScalarRow {
    point: [f64; 3],
    computed: f64,
    expected: f64,
    rel_error: f64,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    passed: bool,
    tolerance: f64,
    max_scalar_rel_error: f64,
    scalar_comparison: Vec<ScalarRow>,
    residuals: &'a ElReport,
}

fn passes(scaled: f64, tol: f64) -> bool {
    scaled <= tol + ABS_FLOOR
}

fn verify_example(a: VerifyArgs, env_seed: Option<&str>) -> Result<i32, UsageError> {
    let seed = resolve_seed(a.output.seed, env_seed)?;
    format_for(&a.output, Format::Json, Format::Json)?;
    check_tol(a.tol)?;
    if a.samples == 0 {
        return Err(UsageError("--samples must be at least 1".into()));
    }
    let chart = catalog_metric("gv_example")?;
    let points = halton_points(a.samples, seed);
    let report = el_report(&chart, &points, a.t)?;
    let rows: Vec<ScalarRow> = report
        .points
        .iter()
        .map(|r| {
            let [x, y, _] = r.point;
            let expected = -8.0 / (1.0 + x * x + y * y);
            let rel_error = ((r.scalar_curvature - expected) / expected).abs();
            ScalarRow { point: r.point, computed: r.scalar_curvature, expected, rel_error }
        })
        .collect();
    let max_rel = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let passed = max_rel <= SCALAR_TOL && passes(report.max_scaled(), a.tol);

    eprintln!("{:>10} {:>10} {:>10}  {:>24} {:>24} {:>10}", "x", "y", "z", "R", "-8/(1+x^2+y^2)", "rel err");
    for r in &rows {
        eprintln!(
            "{:>10.5} {:>10.5} {:>10.5}  {:>24.16e} {:>24.16e} {:>10.2e}",
            r.point[0], r.point[1], r.point[2], r.computed, r.expected, r.rel_error
        );
    }
    eprintln!("max scaled residual {:.3e} (tolerance {:.1e})", report.max_scaled(), a.tol);

    let out = VerifyOutput {
        passed,
        tolerance: a.tol,
        max_scalar_rel_error: max_rel,
        scalar_comparison: rows,
        residuals: &report,
    };
    emit(&a.output.out, &to_json(&out)?)?;
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

fn identities(a: IdentitiesArgs, env_seed: Option<&str>) -> Result<i32, UsageError> {
    let seed = resolve_seed(a.output.seed, env_seed)?;
    let format = format_for(&a.output, Format::Json, Format::Json)?;
    let cfg = SuiteConfig {
        seed,
        n_matrix_trials: a.matrix_trials,
        n_chart_trials: a.chart_trials,
        ..SuiteConfig::default()
    };
    let report: SuiteReport = run_suite(&cfg)?;
    for c in &report.checks {
        eprintln!(
            "{:<26} passed {:>8} failed {:>3} skipped {:>8} worst {:.3e}",
            c.name, c.passed, c.failed, c.skipped, c.worst
        );
    }
    let mut bytes = Vec::new();
    write_report(Report::Suite(&report), format, &mut bytes)?;
    emit(&a.output.out, &bytes)?;
    Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

/// A catalog name, or a path to a metric document when a file exists there.
pub fn resolve_metric(spec: &str) -> Result<MetricChart, UsageError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| UsageError(format!("{spec}: {e}")))?;
        return load_metric_spec(&text).map_err(|e| UsageError(format!("{spec}: {e}")));
    }
    Ok(catalog_metric(spec)?)
}

/// Parses `x,y,z`.
pub fn parse_point(s: &str) -> Result<[f64; 3], UsageError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || UsageError(format!("point `{s}` must be three comma-separated numbers"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut p = [0.0f64; 3];
    for (v, part) in p.iter_mut().zip(&parts) {
        *v = part.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
    }
    Ok(p)
}

fn residual(a: ResidualArgs, env_seed: Option<&str>) -> Result<i32, UsageError> {
    let seed = resolve_seed(a.output.seed, env_seed)?;
    format_for(&a.output, Format::Json, Format::Json)?;
    check_tol(a.tol)?;
    let chart = resolve_metric(&a.metric)?;
    let points = if a.points.is_empty() {
        if a.samples == 0 {
            return Err(UsageError("--samples must be at least 1".into()));
        }
        halton_points(a.samples, seed)
    } else {
        a.points.iter().map(|p| parse_point(p)).collect::<Result<_, _>>()?
    };
    let report = el_report(&chart, &points, a.t)?;
    let passed = passes(report.max_scaled(), a.tol);
    eprintln!("{}: max scaled residual {:.3e} over {} points", report.metric_name, report.max_scaled(), points.len());
    let mut bytes = Vec::new();
    write_report(Report::Residuals(&report), Format::Json, &mut bytes)?;
    emit(&a.output.out, &bytes)?;
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

fn run_flow(a: FlowArgs, env_seed: Option<&str>) -> Result<i32, UsageError> {
    let seed = resolve_seed(a.output.seed, env_seed)?;
    let format = format_for(&a.output, Format::Csv, Format::Csv)?;
    if !(a.eta > 0.0 && a.eta.is_finite()) {
        return Err(UsageError(format!("--eta must be positive and finite, got {}", a.eta)));
    }
    if !a.t.is_finite() || !(a.target_grad_norm >= 0.0) {
        return Err(UsageError("--t and --target-grad-norm must be finite, the latter non-negative".into()));
    }
    let state = flow::init_grid_with_t(a.n, a.amplitude, seed, a.t)?;
    let (traj, code): (Trajectory, i32) = match flow::flow_run(state, a.steps, a.target_grad_norm, a.eta) {
        Ok((_, traj)) => (traj, EXIT_PASS),
        Err(FlowError::Stalled { trajectory, eta, .. }) => {
            eprintln!("flow stalled: backtracking exhausted at step size {eta:e}");
            (trajectory, EXIT_FAIL)
        }
        Err(e) => return Err(e.into()),
    };
    if let (Some(first), Some(last)) = (traj.rows.first(), traj.rows.last()) {
        eprintln!(
            "steps {}  energy {:.3e} -> {:.3e}  max|Ric| {:.3e} -> {:.3e}",
            last.step, first.energy, last.energy, first.max_abs_ric, last.max_abs_ric
        );
    }
    let mut bytes = Vec::new();
    write_report(Report::Trajectory(&traj), format, &mut bytes)?;
    emit(&a.output.out, &bytes)?;
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(5), Some("9")).unwrap(), 5);
        assert_eq!(resolve_seed(None, Some("9")).unwrap(), 9);
        assert_eq!(resolve_seed(None, None).unwrap(), 0);
        assert!(resolve_seed(None, Some("abc")).is_err());
    }

    #[test]
    fn halton_is_deterministic_and_in_box() {
        let a = halton_points(50, 1);
        assert_eq!(a, halton_points(50, 1));
        assert!(a.iter().flatten().all(|v| (-2.0..2.0).contains(v)));
        assert_eq!(halton_points(1, 0)[0], [0.0, -2.0 + 4.0 / 3.0, -2.0 + 4.0 / 5.0]);
        assert_eq!(&halton_points(5, 0)[1..], &halton_points(4, 1)[..]);
    }

    #[test]
    fn point_parsing() {
        assert_eq!(parse_point("0,0,0").unwrap(), [0.0; 3]);
        assert_eq!(parse_point(" 1.5, -2,3e-1").unwrap(), [1.5, -2.0, 0.3]);
        assert!(parse_point("1,2").is_err());
        assert!(parse_point("1,2,x").is_err());
        assert!(parse_point("1,2,inf").is_err());
    }
}
