//! Command-line front end.
//!
//! Every subcommand emits a machine-readable report (JSON, CSV, or an
//! aligned table) and communicates through exit codes:
//!
//! - `0`: success, every checked inequality held;
//! - `1`: usage error (bad flags, bad distribution spec, violated
//!   preconditions);
//! - `2`: numeric failure (quadrature non-convergence, symmetry violation);
//! - `3`: audit failure — a certified inequality was violated beyond
//!   tolerance, the most important signal this tool can emit.
//!
//! The default tolerance is `1e-9`, overridable by flag `--tol` or the
//! environment variable `BEBOUND_TOL`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::bounds::{
    cdf_bounds, psi, small_n_nagaev, tail_moment_bound_exact, tail_moment_bound_surrogate,
    BoundError, NagaevCertificate, TailMode, DEFAULT_TOL, SMALL_N_CONST, UNIFORM_CONST_IID,
};
use crate::cf_core::{
    make_standardized_iid_sum, parse_dist_spec, CharFn, DistError, SourceDist,
};
use crate::filters::{c2p_constant, kernel_residual, refined_sup, FilterError, SmoothingFilter};
use crate::oracle::{
    default_z_grid, delta_profile, normal_cdf, normal_sf, DeltaProfile, StandardizedSum,
};
use crate::pv_transform::PvError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_AUDIT: i32 = 3;

/// Default scale for the automatic truncation point `T = cT sqrt(n)/beta3`;
/// equals `1/sqrt(3)`, the largest value the two-sided tail identity admits.
pub const DEFAULT_CT: f64 = 0.577_350_269_189_625_8;

/// Parses `std::env::args`, runs the selected subcommand, and returns the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            e.code
        }
    }
}

#[derive(Debug)]
struct CliError {
    code: i32,
    msg: String,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        msg: msg.into(),
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        let code = match &e {
            BoundError::BadParameter(_) | BoundError::Dist(_) => EXIT_USAGE,
            BoundError::Filter(FilterError::Quadrature(_)) => EXIT_NUMERIC,
            BoundError::Filter(_) => EXIT_USAGE,
            BoundError::Pv(_) | BoundError::Inconsistent(_) => EXIT_NUMERIC,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        usage(e.to_string())
    }
}

impl From<PvError> for CliError {
    fn from(e: PvError) -> Self {
        CliError {
            code: EXIT_NUMERIC,
            msg: e.to_string(),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        let code = match &e {
            FilterError::Quadrature(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            msg: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "bebound",
    version,
    about = "Rigorous two-sided bounds on distribution functions and \
             moment-weighted tails, straight from characteristic functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the certified constants with labels explaining each one
    Constants(ConstantsArgs),
    /// Two-sided distribution-function sandwich on a point or a grid
    CdfBounds(CdfArgs),
    /// Certified enclosures of the moment-weighted tail x^k P(X >= x)
    TailBounds(TailArgs),
    /// Audit the nonuniform normal-approximation inequality on an exact sum
    NagaevAudit(NagaevArgs),
    /// Evaluate the normal negative-part ratio budget psi(x)
    Psi(PsiArgs),
    /// Inspect the smoothing filter and its spectral envelope constants
    FilterInspect(FilterArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Args)]
struct FormatOpt {
    /// Output format
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    format: FormatOpt,
}

#[derive(Args)]
struct CdfArgs {
    /// Distribution: rademacher | bernoulli:p | atoms:x1,p1;x2,p2;... | normal
    #[arg(long)]
    dist: String,
    /// Number of iid summands; the target is the standardized n-fold sum
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Spectral truncation point T (required for the normal target)
    #[arg(long = "T", value_name = "T", conflicts_with = "c_t")]
    t_max: Option<f64>,
    /// Truncation scale: T = cT sqrt(n)/beta3 (finite targets only)
    #[arg(long = "cT", value_name = "CT")]
    c_t: Option<f64>,
    /// Single evaluation point
    #[arg(long, allow_hyphen_values = true, conflicts_with = "x_grid")]
    x: Option<f64>,
    /// Inclusive evaluation grid start:stop:step
    #[arg(long = "x-grid", allow_hyphen_values = true)]
    x_grid: Option<String>,
    /// Absolute quadrature tolerance (default 1e-9 or BEBOUND_TOL)
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    format: FormatOpt,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Half-width from exact absolute-moment atom sums
    ExactAbs,
    /// Half-width from the characteristic function alone, with the
    /// negative-part correction for odd k
    Surrogate,
}

#[derive(Args)]
struct TailArgs {
    /// Distribution: rademacher | bernoulli:p | atoms:x1,p1;x2,p2;... | normal
    #[arg(long)]
    dist: String,
    /// Number of iid summands; the target is the standardized n-fold sum
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Moment order k in {1, 2, 3}
    #[arg(long)]
    k: u32,
    /// Spectral truncation point T (required for the normal target)
    #[arg(long = "T", value_name = "T", conflicts_with = "c_t")]
    t_max: Option<f64>,
    /// Truncation scale: T = cT sqrt(n)/beta3 (finite targets only)
    #[arg(long = "cT", value_name = "CT")]
    c_t: Option<f64>,
    /// Single tail point (x >= 0)
    #[arg(long, allow_hyphen_values = true, conflicts_with = "x_grid")]
    x: Option<f64>,
    /// Inclusive tail-point grid start:stop:step
    #[arg(long = "x-grid", allow_hyphen_values = true)]
    x_grid: Option<String>,
    /// Exponent of the negative-part swap-error correction in surrogate
    /// mode; must satisfy 0 < p < k and p <= 2 (default: 0.5 for k = 1,
    /// else k - 1 capped at 2). Rejected in exact-abs mode, which needs
    /// no correction.
    #[arg(long)]
    p: Option<f64>,
    /// Half-width evaluation mode (default: exact-abs for finite targets,
    /// surrogate for the normal target)
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Absolute quadrature tolerance (default 1e-9 or BEBOUND_TOL)
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    format: FormatOpt,
}

#[derive(Args)]
struct NagaevArgs {
    /// Finite distribution: rademacher | bernoulli:p | atoms:x1,p1;...
    #[arg(long)]
    dist: String,
    /// Number of iid summands
    #[arg(long)]
    n: u32,
    /// Nonuniform constant the exact profile is audited against
    #[arg(long, default_value_t = SMALL_N_CONST)]
    cnu: f64,
    /// Audit grid start:stop:step over z >= 0 (default 0:4:0.05)
    #[arg(long = "z-grid")]
    z_grid: Option<String>,
    #[command(flatten)]
    format: FormatOpt,
}

#[derive(Args)]
struct PsiArgs {
    /// Argument x >= 0
    #[arg(long)]
    x: f64,
    #[command(flatten)]
    format: FormatOpt,
}

#[derive(Args)]
struct FilterArgs {
    /// Filter argument(s) to sample, inside the support [-1, 1] (repeatable)
    #[arg(long, allow_hyphen_values = true)]
    u: Vec<f64>,
    /// Envelope exponent(s) in (0, 2] (repeatable)
    #[arg(long)]
    p: Vec<f64>,
    /// Also print window-refined envelopes beyond this threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Kernel-residual check point(s) (repeatable)
    #[arg(long = "residual-x", allow_hyphen_values = true)]
    residual_x: Vec<f64>,
    #[command(flatten)]
    format: FormatOpt,
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Constants(a) => cmd_constants(a),
        Command::CdfBounds(a) => cmd_cdf_bounds(a),
        Command::TailBounds(a) => cmd_tail_bounds(a),
        Command::NagaevAudit(a) => cmd_nagaev_audit(a),
        Command::Psi(a) => cmd_psi(a),
        Command::FilterInspect(a) => cmd_filter_inspect(a),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn resolve_tol(flag: Option<f64>) -> Result<f64, CliError> {
    let t = match flag {
        Some(t) => t,
        None => match std::env::var("BEBOUND_TOL") {
            Ok(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("BEBOUND_TOL=`{s}` is not a number")))?,
            Err(_) => return Ok(DEFAULT_TOL),
        },
    };
    if !(t.is_finite() && t > 0.0) {
        return Err(usage(format!("tolerance must be positive and finite, got {t}")));
    }
    Ok(t)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!(
            "grid `{spec}` must look like start:stop:step"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("grid component `{s}` is not a number")))
        })
        .collect::<Result<_, _>>()?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(a.is_finite() && b.is_finite() && step.is_finite() && step > 0.0) {
        return Err(usage(format!(
            "grid `{spec}` needs finite endpoints and a positive step"
        )));
    }
    if b < a {
        return Err(usage(format!("grid `{spec}` has stop < start")));
    }
    // inclusive: -3:3:0.25 yields 25 points
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(usage(format!("grid `{spec}` has {count} points; cap is 100000")));
    }
    Ok((0..count).map(|i| a + i as f64 * step).collect())
}

fn points_from(x: Option<f64>, grid: Option<&str>) -> Result<Vec<f64>, CliError> {
    match (x, grid) {
        (Some(v), None) => {
            if !v.is_finite() {
                return Err(usage(format!("evaluation point must be finite, got {v}")));
            }
            Ok(vec![v])
        }
        (None, Some(g)) => parse_grid(g),
        (None, None) => Err(usage("give either --x or --x-grid")),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    }
}

enum Target {
    Discrete { ss: StandardizedSum, cf: CharFn },
    Normal { cf: CharFn },
}

struct Resolved {
    target: Target,
    t_max: f64,
    beta3: Option<f64>,
}

fn resolve_target(
    dist: &str,
    n: u32,
    t_flag: Option<f64>,
    ct_flag: Option<f64>,
) -> Result<Resolved, CliError> {
    if n == 0 {
        return Err(usage("need at least one summand (--n >= 1)"));
    }
    if let Some(t) = t_flag {
        if !(t.is_finite() && t > 0.0) {
            return Err(usage(format!("--T must be positive and finite, got {t}")));
        }
    }
    if let Some(c) = ct_flag {
        if !(c.is_finite() && c > 0.0) {
            return Err(usage(format!("--cT must be positive and finite, got {c}")));
        }
    }
    match parse_dist_spec(dist)? {
        SourceDist::Normal => {
            if n != 1 {
                return Err(usage("--n does not apply to the normal target"));
            }
            if ct_flag.is_some() {
                return Err(usage(
                    "--cT needs a finite summand base; give --T for the normal target",
                ));
            }
            let t_max =
                t_flag.ok_or_else(|| usage("the normal target needs an explicit --T"))?;
            Ok(Resolved {
                target: Target::Normal {
                    cf: CharFn::standard_normal(),
                },
                t_max,
                beta3: None,
            })
        }
        SourceDist::Discrete(base) => {
            let ss = StandardizedSum::new(&base, n)?;
            let cf = make_standardized_iid_sum(&base, n)?;
            let beta3 = ss.beta3;
            let t_max = match (t_flag, ct_flag) {
                (Some(t), _) => t,
                (None, Some(c)) => c * (n as f64).sqrt() / beta3,
                (None, None) => DEFAULT_CT * (n as f64).sqrt() / beta3,
            };
            Ok(Resolved {
                target: Target::Discrete { ss, cf },
                t_max,
                beta3: Some(beta3),
            })
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(value).map_err(|e| CliError {
        code: EXIT_NUMERIC,
        msg: format!("serialization failed: {e}"),
    })?;
    println!("{s}");
    Ok(())
}

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ConstantsReport {
    command: String,
    values: BTreeMap<String, f64>,
    labels: BTreeMap<String, String>,
}

fn cmd_constants(args: ConstantsArgs) -> Result<i32, CliError> {
    let c22 = c2p_constant(2.0)?;
    let c21 = c2p_constant(1.0)?;
    let x0 = (SMALL_N_CONST / UNIFORM_CONST_IID - 1.0).cbrt();
    let sqrt_2_pi = (2.0 / PI).sqrt();
    let fix32 = c22.value / PI * 4.0; // (2k-p)/(k-p) = 4 at k = 3, p = 2
    let fix31 = c21.value / PI * 2.5; // (2k-p)/(k-p) = 5/2 at k = 3, p = 1
    let mut entries: Vec<(&str, f64, String)> = vec![
        (
            "c22",
            c22.value,
            "spectral envelope sup_u u^2 |K(u)| of the smoothing kernel; exactly 4 pi".into(),
        ),
        (
            "c21",
            c21.value,
            "spectral envelope sup_u |u| |K(u)|, attained near u = 2.3311".into(),
        ),
        (
            "c21_argmax",
            c21.argmax_u,
            "location where the p = 1 envelope supremum is attained".into(),
        ),
        (
            "x0",
            x0,
            "body/tail split point (4.5/0.4748 - 1)^(1/3) of the small-n certificate".into(),
        ),
        (
            "sqrt_2_over_pi",
            sqrt_2_pi,
            "E|Z_-|^3 of a standard normal Z; the limit psi(+inf)".into(),
        ),
        (
            "two_sqrt_2_over_pi",
            2.0 * sqrt_2_pi,
            "E|Z|^3 of a standard normal Z".into(),
        ),
        (
            "fix_coeff_k3_p2",
            fix32,
            "swap-error correction coefficient (c22/pi)(2k-p)/(k-p) for k = 3, p = 2; exactly 16".into(),
        ),
        (
            "fix_coeff_k3_p1",
            fix31,
            "swap-error correction coefficient (c21/pi)(2k-p)/(k-p) for k = 3, p = 1".into(),
        ),
        (
            "uniform_const_iid",
            UNIFORM_CONST_IID,
            "established uniform normal-approximation constant for iid sums".into(),
        ),
        (
            "uniform_const_lower",
            (3.0 + 10f64.sqrt()) / (6.0 * (2.0 * PI).sqrt()),
            "(3 + sqrt(10))/(6 sqrt(2 pi)): floor no uniform constant can beat".into(),
        ),
        (
            "small_n_const",
            SMALL_N_CONST,
            "certified nonuniform constant in the regime beta3/sqrt(n) >= 2/3".into(),
        ),
        (
            "envelope_const",
            25.0,
            "generous nonuniform envelope used as a sanity ceiling".into(),
        ),
        (
            "default_ct",
            DEFAULT_CT,
            "default truncation scale 1/sqrt(3) in T = cT sqrt(n)/beta3".into(),
        ),
    ];
    for &(key, x) in &[
        ("psi_1", 1.0),
        ("psi_2", 2.0),
        ("psi_3_5", 3.5),
        ("psi_5", 5.0),
    ] {
        entries.push((
            key,
            psi(x)?,
            format!("normal negative-part ratio budget psi at x = {x}"),
        ));
    }
    let mut values = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for (key, v, label) in entries {
        values.insert(key.to_string(), v);
        labels.insert(key.to_string(), label);
    }
    let report = ConstantsReport {
        command: "constants".into(),
        values,
        labels,
    };
    match args.format.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            println!("key,value,label");
            for (k, v) in &report.values {
                println!("{k},{v:.17e},\"{}\"", report.labels[k]);
            }
        }
        Format::Table => {
            println!("{:<22} {:>22}  label", "key", "value");
            for (k, v) in &report.values {
                println!("{k:<22} {v:>22.15} {}", report.labels[k]);
            }
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// cdf-bounds
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CdfRow {
    x: f64,
    lower: f64,
    upper: f64,
    width: f64,
    quad_error: f64,
    subdivisions: usize,
    /// Exact `P(X < x)` (discrete oracle) or the normal CDF.
    exact_lo: f64,
    /// Exact `P(X <= x)` (discrete oracle) or the normal CDF.
    exact_hi: f64,
    contains: bool,
}

#[derive(Serialize)]
struct CdfReport {
    command: String,
    dist: String,
    n: u32,
    t_max: f64,
    tol: f64,
    beta3: Option<f64>,
    all_contain: bool,
    rows: Vec<CdfRow>,
}

fn cmd_cdf_bounds(args: CdfArgs) -> Result<i32, CliError> {
    let tol = resolve_tol(args.tol)?;
    let points = points_from(args.x, args.x_grid.as_deref())?;
    let r = resolve_target(&args.dist, args.n, args.t_max, args.c_t)?;
    let cf = match &r.target {
        Target::Discrete { cf, .. } => cf,
        Target::Normal { cf } => cf,
    };
    let mut rows = Vec::with_capacity(points.len());
    let slack = 1e-12;
    for &x in &points {
        let b = cdf_bounds(cf, x, r.t_max, tol)?;
        let (exact_lo, exact_hi) = match &r.target {
            Target::Discrete { ss, .. } => (ss.dist.prob_lt(x), ss.dist.prob_le(x)),
            Target::Normal { .. } => {
                let v = normal_cdf(x);
                (v, v)
            }
        };
        let contains = b.lower <= exact_lo + slack && exact_hi <= b.upper + slack;
        rows.push(CdfRow {
            x,
            lower: b.lower,
            upper: b.upper,
            width: b.width,
            quad_error: b.quad_error,
            subdivisions: b.subdivisions,
            exact_lo,
            exact_hi,
            contains,
        });
    }
    let all_contain = rows.iter().all(|r| r.contains);
    let report = CdfReport {
        command: "cdf-bounds".into(),
        dist: args.dist.clone(),
        n: args.n,
        t_max: r.t_max,
        tol,
        beta3: r.beta3,
        all_contain,
        rows,
    };
    match args.format.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            println!("x,lower,upper,width,quad_error,subdivisions,exact_lo,exact_hi,contains");
            for w in &report.rows {
                println!(
                    "{},{:.17e},{:.17e},{:.17e},{:.3e},{},{:.17e},{:.17e},{}",
                    w.x,
                    w.lower,
                    w.upper,
                    w.width,
                    w.quad_error,
                    w.subdivisions,
                    w.exact_lo,
                    w.exact_hi,
                    w.contains
                );
            }
        }
        Format::Table => {
            println!(
                "cdf sandwich: dist = {}, n = {}, T = {:.6}, tol = {:.1e}",
                report.dist, report.n, report.t_max, report.tol
            );
            println!(
                "{:>10} {:>14} {:>14} {:>12} {:>14} {:>14} {:>8}",
                "x", "lower", "upper", "width", "exact P(<x)", "exact P(<=x)", "contains"
            );
            for w in &report.rows {
                println!(
                    "{:>10.4} {:>14.9} {:>14.9} {:>12.3e} {:>14.9} {:>14.9} {:>8}",
                    w.x, w.lower, w.upper, w.width, w.exact_lo, w.exact_hi, w.contains
                );
            }
            println!(
                "verdict: {}",
                if all_contain {
                    "all points contain the exact value"
                } else {
                    "CONTAINMENT VIOLATED at one or more points"
                }
            );
        }
    }
    Ok(if all_contain { EXIT_OK } else { EXIT_AUDIT })
}

// ---------------------------------------------------------------------------
// tail-bounds
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TailRow {
    x: f64,
    center: f64,
    radius_transform: f64,
    neg_part_correction: f64,
    correction_p: Option<f64>,
    half_width: f64,
    lo: f64,
    hi: f64,
    quad_error: f64,
    clamped: bool,
    subdivisions: usize,
    /// Exact `x^k P(X >= x)` where an oracle exists.
    exact_ge: f64,
    /// Exact `x^k P(X > x)` where an oracle exists.
    exact_gt: f64,
    contains: bool,
}

#[derive(Serialize)]
struct TailReport {
    command: String,
    dist: String,
    n: u32,
    k: u32,
    mode: TailMode,
    t_max: f64,
    tol: f64,
    beta3: Option<f64>,
    all_contain: bool,
    rows: Vec<TailRow>,
}

fn cmd_tail_bounds(args: TailArgs) -> Result<i32, CliError> {
    let tol = resolve_tol(args.tol)?;
    let points = points_from(args.x, args.x_grid.as_deref())?;
    let r = resolve_target(&args.dist, args.n, args.t_max, args.c_t)?;
    if !(1..=3).contains(&args.k) {
        return Err(usage(format!("--k must be 1, 2, or 3, got {}", args.k)));
    }
    if let Some(p) = args.p {
        if !(p > 0.0 && p < args.k as f64) {
            return Err(usage(format!(
                "--p must satisfy 0 < p < k, got p = {p}, k = {}",
                args.k
            )));
        }
    }
    let mode = match (args.mode, &r.target) {
        (Some(ModeArg::ExactAbs), Target::Normal { .. }) => {
            return Err(usage(
                "exact-abs mode needs a finite atom set; the normal target only supports surrogate mode",
            ));
        }
        (Some(ModeArg::ExactAbs), _) => TailMode::ExactAbs,
        (Some(ModeArg::Surrogate), _) => TailMode::Surrogate,
        (None, Target::Discrete { .. }) => TailMode::ExactAbs,
        (None, Target::Normal { .. }) => TailMode::Surrogate,
    };
    if mode == TailMode::ExactAbs && args.p.is_some() {
        return Err(usage(
            "--p configures the surrogate correction; exact-abs mode takes none",
        ));
    }
    let mut rows = Vec::with_capacity(points.len());
    let slack = 1e-12;
    for &x in &points {
        let b = match (&mode, &r.target) {
            (TailMode::ExactAbs, Target::Discrete { ss, .. }) => {
                tail_moment_bound_exact(&ss.dist, args.k, x, r.t_max, tol)?
            }
            (TailMode::Surrogate, Target::Discrete { cf, .. }) => {
                tail_moment_bound_surrogate(cf, args.k, x, r.t_max, args.p, tol)?
            }
            (TailMode::Surrogate, Target::Normal { cf }) => {
                tail_moment_bound_surrogate(cf, args.k, x, r.t_max, args.p, tol)?
            }
            (TailMode::ExactAbs, Target::Normal { .. }) => unreachable!("rejected above"),
        };
        let xk = x.powi(args.k as i32);
        let (exact_ge, exact_gt) = match &r.target {
            Target::Discrete { ss, .. } => (xk * ss.dist.prob_ge(x), xk * ss.dist.prob_gt(x)),
            Target::Normal { .. } => {
                let v = xk * normal_sf(x);
                (v, v)
            }
        };
        let contains = b.lo <= exact_gt + slack
            && exact_gt <= b.hi + slack
            && b.lo <= exact_ge + slack
            && exact_ge <= b.hi + slack;
        rows.push(TailRow {
            x,
            center: b.center,
            radius_transform: b.radius_transform,
            neg_part_correction: b.neg_part_correction,
            correction_p: b.correction_p,
            half_width: b.half_width,
            lo: b.lo,
            hi: b.hi,
            quad_error: b.quad_error,
            clamped: b.clamped,
            subdivisions: b.subdivisions,
            exact_ge,
            exact_gt,
            contains,
        });
    }
    let all_contain = rows.iter().all(|r| r.contains);
    let report = TailReport {
        command: "tail-bounds".into(),
        dist: args.dist.clone(),
        n: args.n,
        k: args.k,
        mode,
        t_max: r.t_max,
        tol,
        beta3: r.beta3,
        all_contain,
        rows,
    };
    match args.format.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            println!(
                "x,center,radius_transform,neg_part_correction,correction_p,\
                 half_width,lo,hi,quad_error,clamped,subdivisions,exact_ge,exact_gt,contains"
            );
            for w in &report.rows {
                println!(
                    "{},{:.17e},{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e},{:.3e},{},{},{:.17e},{:.17e},{}",
                    w.x,
                    w.center,
                    w.radius_transform,
                    w.neg_part_correction,
                    w.correction_p.map(|p| p.to_string()).unwrap_or_default(),
                    w.half_width,
                    w.lo,
                    w.hi,
                    w.quad_error,
                    w.clamped,
                    w.subdivisions,
                    w.exact_ge,
                    w.exact_gt,
                    w.contains
                );
            }
        }
        Format::Table => {
            println!(
                "tail enclosure x^{} P(X >= x): dist = {}, n = {}, mode = {}, T = {:.6}, tol = {:.1e}",
                report.k,
                report.dist,
                report.n,
                match mode {
                    TailMode::ExactAbs => "exact-abs",
                    TailMode::Surrogate => "surrogate",
                },
                report.t_max,
                report.tol
            );
            println!(
                "{:>9} {:>14} {:>14} {:>14} {:>14} {:>14} {:>8}",
                "x", "lo", "hi", "half_width", "exact >=", "exact >", "contains"
            );
            for w in &report.rows {
                println!(
                    "{:>9.4} {:>14.9} {:>14.9} {:>14.6e} {:>14.9} {:>14.9} {:>8}",
                    w.x, w.lo, w.hi, w.half_width, w.exact_ge, w.exact_gt, w.contains
                );
            }
            println!(
                "verdict: {}",
                if all_contain {
                    "all points contain the exact tails"
                } else {
                    "CONTAINMENT VIOLATED at one or more points"
                }
            );
        }
    }
    Ok(if all_contain { EXIT_OK } else { EXIT_AUDIT })
}

// ---------------------------------------------------------------------------
// nagaev-audit
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct NagaevReport {
    command: String,
    dist: String,
    n: u32,
    beta3: f64,
    /// Lyapunov ratio `beta3/sqrt(n)`.
    b: f64,
    cnu: f64,
    applicable: bool,
    /// Grid point with the largest normalized gap; the certificate is
    /// evaluated there.
    worst_z: f64,
    /// Measured `|P(X > z) - P(Z > z)|` at `worst_z`.
    delta_at_worst_z: f64,
    /// The certified bound `4.5 b/(1 + z^3)` covers the measured gap there.
    bound_covers_delta: bool,
    certificate: NagaevCertificate,
    profile: DeltaProfile,
    profile_pass: bool,
    pass: bool,
}

fn cmd_nagaev_audit(args: NagaevArgs) -> Result<i32, CliError> {
    if !(args.cnu.is_finite() && args.cnu > 0.0) {
        return Err(usage(format!(
            "--cnu must be positive and finite, got {}",
            args.cnu
        )));
    }
    let base = match parse_dist_spec(&args.dist)? {
        SourceDist::Discrete(d) => d,
        SourceDist::Normal => {
            return Err(usage(
                "the audit needs an exact finite-sum oracle; the normal target has nothing to audit",
            ));
        }
    };
    let grid = match &args.z_grid {
        Some(g) => {
            let pts = parse_grid(g)?;
            if pts.first().is_some_and(|&z| z < 0.0) {
                return Err(usage("the audit grid must start at z >= 0"));
            }
            pts
        }
        None => default_z_grid(),
    };
    let profile = delta_profile(&base, args.n, &grid, &args.dist)?;
    let worst = profile
        .rows
        .iter()
        .max_by(|a, b| a.normalized.total_cmp(&b.normalized))
        .copied();
    let (worst_z, delta_at_worst_z) = worst.map_or((0.0, 0.0), |r| (r.z, r.delta));
    let certificate = small_n_nagaev(profile.beta3, args.n, worst_z)?;
    let bound_covers_delta = delta_at_worst_z <= certificate.bound + 1e-12;
    let profile_pass = profile.max_normalized <= args.cnu + 1e-12;
    let pass =
        certificate.applicable && certificate.all_hold && profile_pass && bound_covers_delta;
    let report = NagaevReport {
        command: "nagaev-audit".into(),
        dist: args.dist.clone(),
        n: args.n,
        beta3: profile.beta3,
        b: profile.r_l,
        cnu: args.cnu,
        applicable: certificate.applicable,
        worst_z,
        delta_at_worst_z,
        bound_covers_delta,
        certificate,
        profile,
        profile_pass,
        pass,
    };
    match args.format.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            print!("{}", report.profile.to_csv());
        }
        Format::Table => {
            println!(
                "nonuniform audit: dist = {}, n = {}, beta3 = {:.9}, b = beta3/sqrt(n) = {:.9}",
                report.dist, report.n, report.beta3, report.b
            );
            println!(
                "derivation steps at the worst grid point z = {} ({} branch):",
                report.worst_z, report.certificate.branch
            );
            for s in &report.certificate.steps {
                let nums = match (s.lhs, s.rhs) {
                    (Some(l), Some(r)) => format!("  [{l:.9} vs {r:.9}]"),
                    (Some(l), None) => format!("  [{l:.9}]"),
                    _ => String::new(),
                };
                println!(
                    "  {} {}{}{}",
                    if s.holds { "ok  " } else { "FAIL" },
                    s.statement,
                    nums,
                    if s.required { "" } else { "  (informational)" }
                );
            }
            println!(
                "certified bound at z = {}: {:.6e}; measured |Delta| there: {:.6e} ({})",
                report.worst_z,
                report.certificate.bound,
                report.delta_at_worst_z,
                if report.bound_covers_delta {
                    "covered"
                } else {
                    "NOT COVERED"
                }
            );
            println!(
                "exact profile over {} grid points: max |Delta| = {:.6e}, \
                 max (1+z^3)|Delta|/b = {:.9}, audited against cnu = {}",
                report.profile.rows.len(),
                report.profile.max_delta,
                report.profile.max_normalized,
                report.cnu
            );
            println!(
                "verdict: {}",
                if pass {
                    "certified and empirically confirmed"
                } else if !report.applicable {
                    "NOT APPLICABLE: the hypothesis beta3/sqrt(n) >= 2/3 fails"
                } else {
                    "AUDIT FAILED"
                }
            );
        }
    }
    if !pass && args.format.format != Format::Table {
        eprintln!(
            "audit verdict: {}",
            if !report.applicable {
                "not applicable (beta3/sqrt(n) < 2/3)"
            } else {
                "failed"
            }
        );
    }
    Ok(if pass { EXIT_OK } else { EXIT_AUDIT })
}

// ---------------------------------------------------------------------------
// psi
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PsiReport {
    command: String,
    x: f64,
    value: f64,
    /// `psi(+inf) = sqrt(2/pi)`, the ceiling of the budget.
    limit: f64,
}

fn cmd_psi(args: PsiArgs) -> Result<i32, CliError> {
    let value = psi(args.x)?;
    let report = PsiReport {
        command: "psi".into(),
        x: args.x,
        value,
        limit: (2.0 / PI).sqrt(),
    };
    match args.format.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            println!("x,value,limit");
            println!("{},{:.17e},{:.17e}", report.x, report.value, report.limit);
        }
        Format::Table => {
            println!("psi({}) = {:.15}", report.x, report.value);
            println!("limit psi(+inf) = {:.15}", report.limit);
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// filter-inspect
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FilterSample {
    u: f64,
    /// Real sandwich part `M1(u)`.
    m1: f64,
    /// Imaginary half-width part `M2(u)`.
    m2: f64,
    /// `|M(u)|`.
    abs: f64,
}

#[derive(Serialize)]
struct EnvelopeRow {
    p: f64,
    value: f64,
    argmax_u: f64,
}

#[derive(Serialize)]
struct RefinedRow {
    p: f64,
    threshold: f64,
    value: f64,
}

#[derive(Serialize)]
struct KernelRow {
    x: f64,
    /// `x^2 K(x) - sin(x)`, tending to 0 as |x| grows.
    residual: f64,
    inverse_value: f64,
    abs_error: f64,
}

#[derive(Serialize)]
struct FilterReport {
    command: String,
    kappa: f64,
    support_radius: f64,
    samples: Vec<FilterSample>,
    envelopes: Vec<EnvelopeRow>,
    refined: Vec<RefinedRow>,
    kernel: Vec<KernelRow>,
}

fn cmd_filter_inspect(args: FilterArgs) -> Result<i32, CliError> {
    let filt = SmoothingFilter::standard();
    let us = if args.u.is_empty() {
        vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]
    } else {
        args.u.clone()
    };
    let ps = if args.p.is_empty() {
        vec![1.0, 2.0]
    } else {
        args.p.clone()
    };
    let rx = if args.residual_x.is_empty() {
        vec![0.5, 2.0, 5.0]
    } else {
        args.residual_x.clone()
    };
    let samples: Vec<FilterSample> = us
        .iter()
        .map(|&u| {
            let v = filt.eval(u);
            FilterSample {
                u,
                m1: v.re,
                m2: v.im,
                abs: v.norm(),
            }
        })
        .collect();
    let mut envelopes = Vec::new();
    for &p in &ps {
        let c = c2p_constant(p)?;
        envelopes.push(EnvelopeRow {
            p: c.p,
            value: c.value,
            argmax_u: c.argmax_u,
        });
    }
    let mut refined = Vec::new();
    if let Some(thr) = args.threshold {
        if !(thr.is_finite() && thr >= 0.0) {
            return Err(usage(format!(
                "--threshold must be nonnegative and finite, got {thr}"
            )));
        }
        for &p in &ps {
            refined.push(RefinedRow {
                p,
                threshold: thr,
                value: refined_sup(p, thr)?,
            });
        }
    }
    let mut kernel = Vec::new();
    for &x in &rx {
        let k = kernel_residual(x)?;
        kernel.push(KernelRow {
            x,
            residual: k.value,
            inverse_value: k.inverse_value,
            abs_error: k.abs_error,
        });
    }
    let report = FilterReport {
        command: "filter-inspect".into(),
        kappa: filt.kappa(),
        support_radius: filt.support_radius(),
        samples,
        envelopes,
        refined,
        kernel,
    };
    match args.format.format {
        Format::Json => print_json(&report)?,
        Format::Csv => {
            println!("u,m1,m2,abs");
            for s in &report.samples {
                println!("{},{:.17e},{:.17e},{:.17e}", s.u, s.m1, s.m2, s.abs);
            }
        }
        Format::Table => {
            println!(
                "smoothing filter: kappa = {}, support radius = {}",
                report.kappa, report.support_radius
            );
            println!("{:>8} {:>18} {:>18} {:>18}", "u", "M1(u)", "M2(u)", "|M(u)|");
            for s in &report.samples {
                println!(
                    "{:>8.4} {:>18.12} {:>18.12} {:>18.12}",
                    s.u, s.m1, s.m2, s.abs
                );
            }
            println!("spectral envelopes sup_u |u|^p |K(u)|:");
            for e in &report.envelopes {
                println!(
                    "  p = {:<4} value = {:.15}  argmax u = {:.9}",
                    e.p, e.value, e.argmax_u
                );
            }
            for r in &report.refined {
                println!(
                    "  refined beyond threshold {}: p = {:<4} value = {:.15}",
                    r.threshold, r.p, r.value
                );
            }
            if !report.kernel.is_empty() {
                println!("inverse-kernel decay residual x^2 K(x) - sin(x):");
                for k in &report.kernel {
                    println!(
                        "  x = {:<8} residual = {:+.9e} (quadrature error {:.1e})",
                        k.x, k.residual, k.abs_error
                    );
                }
            }
        }
    }
    Ok(EXIT_OK)
}
