//! Command-line front end: scenario files, CSV and SVG output, and the
//! `compute`, `bounds`, `sweep`, `benchmark` and `reproduce` commands.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or parse error,
//! 3 failed assertion or violated bound ordering.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bounds_product::{bound_ik, bound_k_prefix, BoundInputPair};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::metric::{
    correlation, gamma_matrix, heisenberg_diagnostic, skew_info_direct, variance, MetricParam, Observable,
};
use crate::numerics::{ComplexMatrix, C64};
use crate::scenarios::{
    builtin_example, example_bounds, example_check_bounds, example_checks, example_range, random_instance,
    run_sweep, BoundSpec, EvalOptions, Scenario, StateSpec, SweepResult, DEFAULT_STEPS,
};
use crate::search::{best_over_family_nontrivial, Family, SearchKind, SearchStrategy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;

type Complex = [f64; 2];

/// On-disk scenario. Complex entries are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dimension: usize,
    pub p: f64,
    pub state: StateFile,
    pub observables: Vec<ObservableFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFile {
    Density { matrix: Vec<Vec<Complex>> },
    Bloch { r: [f64; 3] },
    BlochCircle { radius: f64, u: [f64; 3], v: [f64; 3] },
    Pure { amplitudes: Vec<Complex> },
    PureRotation { cos: Vec<Complex>, sin: Vec<Complex> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableFile {
    pub name: String,
    pub matrix: Vec<Vec<Complex>>,
}

fn to_pairs(v: &[C64]) -> Vec<Complex> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(v: &[Complex]) -> Vec<C64> {
    v.iter().map(|[re, im]| C64::new(*re, *im)).collect()
}

fn matrix_to_file(m: &ComplexMatrix) -> Vec<Vec<Complex>> {
    m.rows().iter().map(|r| to_pairs(r)).collect()
}

fn matrix_from_file(rows: &[Vec<Complex>], dim: usize, path: &str, what: &str) -> Result<ComplexMatrix> {
    let parse = |message: String| Error::Parse {
        path: path.into(),
        message,
    };
    if rows.len() != dim {
        return Err(parse(format!("{what}: {} rows, expected {dim}", rows.len())));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(parse(format!("{what}: row {} has {} entries, expected {dim}", i + 1, r.len())));
    }
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| from_pairs(r)).collect();
    ComplexMatrix::from_rows(&rows).map_err(|e| parse(format!("{what}: {e}")))
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        let state = match &s.state {
            StateSpec::Density(m) => StateFile::Density {
                matrix: matrix_to_file(m),
            },
            StateSpec::Bloch(r) => StateFile::Bloch { r: *r },
            StateSpec::BlochCircle { radius, u, v } => StateFile::BlochCircle {
                radius: *radius,
                u: *u,
                v: *v,
            },
            StateSpec::Pure(a) => StateFile::Pure { amplitudes: to_pairs(a) },
            StateSpec::PureRotation { cos, sin } => StateFile::PureRotation {
                cos: to_pairs(cos),
                sin: to_pairs(sin),
            },
        };
        ScenarioFile {
            label: Some(s.label.clone()),
            dimension: s.dim(),
            p: s.p.value(),
            state,
            observables: s
                .observables
                .iter()
                .map(|a| ObservableFile {
                    name: a.name().to_string(),
                    matrix: matrix_to_file(a.matrix()),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn into_scenario(self) -> Result<Scenario> {
        let d = self.dimension;
        if d == 0 {
            return Err(Error::Parse {
                path: "dimension".into(),
                message: "dimension must be positive".into(),
            });
        }
        let p = MetricParam::new(self.p).map_err(|e| Error::Validation(format!("p: {e}")))?;
        let check_len = |len: usize, path: &str| {
            if len != d {
                return Err(Error::Parse {
                    path: path.into(),
                    message: format!("{len} amplitudes, expected {d}"),
                });
            }
            Ok(())
        };
        let state = match self.state {
            StateFile::Density { matrix } => {
                StateSpec::Density(matrix_from_file(&matrix, d, "state.matrix", "density matrix")?)
            }
            StateFile::Bloch { r } => StateSpec::Bloch(r),
            StateFile::BlochCircle { radius, u, v } => StateSpec::BlochCircle { radius, u, v },
            StateFile::Pure { amplitudes } => {
                check_len(amplitudes.len(), "state.amplitudes")?;
                StateSpec::Pure(from_pairs(&amplitudes))
            }
            StateFile::PureRotation { cos, sin } => {
                check_len(cos.len(), "state.cos")?;
                check_len(sin.len(), "state.sin")?;
                StateSpec::PureRotation {
                    cos: from_pairs(&cos),
                    sin: from_pairs(&sin),
                }
            }
        };
        if state.dim() != d {
            return Err(Error::Parse {
                path: "state".into(),
                message: format!("state has dimension {}, expected {d}", state.dim()),
            });
        }
        let observables = self
            .observables
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let what = format!("observable '{}'", o.name);
                let m = matrix_from_file(&o.matrix, d, &format!("observables[{i}].matrix"), &what)?;
                Observable::new(o.name.clone(), m).map_err(|e| Error::Validation(format!("{what}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(self.label.unwrap_or_else(|| "scenario".into()), p, state, observables)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    ScenarioFile::parse(&text)?.into_scenario()
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed,
/// negative zero printed as `0`.
pub fn fmt_num(v: f64) -> String {
    fmt_sig(v, 12)
}

fn fmt_sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = sweep.columns.join(",");
    out.push('\n');
    for (theta, row) in sweep.thetas.iter().zip(&sweep.rows) {
        out.push_str(&fmt_num(*theta));
        for v in row {
            out.push(',');
            out.push_str(&fmt_num(*v));
        }
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

/// Self-contained SVG line chart, one polyline per value column.
pub fn sweep_svg(sweep: &SweepResult, title: &str) -> String {
    let (w, h) = (800.0, 480.0);
    let (left, right, top, bottom) = (70.0, 190.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let finite = |v: &f64| v.is_finite();
    let (x0, x1) = match (sweep.thetas.first(), sweep.thetas.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        (Some(a), _) => (*a - 0.5, *a + 0.5),
        _ => (0.0, 1.0),
    };
    let values = sweep.rows.iter().flatten().filter(|v| finite(v));
    let (mut y0, mut y1) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !(y0.is_finite() && y1.is_finite()) {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (y1 - y) / (y1 - y0) * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{left} {top} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for (label, x, y, anchor) in [
        (fmt_sig(x0, 4), left, top + ph + 18.0, "start"),
        (fmt_sig(x1, 4), left + pw, top + ph + 18.0, "end"),
        ("theta".to_string(), left + pw / 2.0, top + ph + 36.0, "middle"),
        (fmt_sig(y1, 4), left - 6.0, top + 4.0, "end"),
        (fmt_sig(y0, 4), left - 6.0, top + ph, "end"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{}</text>"#,
            escape(&label)
        );
    }
    for (c, name) in sweep.columns.iter().skip(1).enumerate() {
        let color = PALETTE[c % PALETTE.len()];
        let points: Vec<String> = sweep
            .thetas
            .iter()
            .zip(&sweep.rows)
            .filter(|(_, r)| r[c].is_finite())
            .map(|(t, r)| format!("{:.2},{:.2}", sx(*t), sy(r[c])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 10.0 + 18.0 * c as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 22.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[derive(Debug, Parser)]
#[command(name = "skewbound", version, about = "Skew information and uncertainty-relation lower bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Skew information, correlations, variances and commutator diagnostics.
    Compute(PointArgs),
    /// One CSV row of bound values at a single theta.
    Bounds(BoundsArgs),
    /// Bound values over a theta grid, as CSV and optionally SVG.
    Sweep(SweepArgs),
    /// Tightness of each bound family on random instances.
    Benchmark(BenchmarkArgs),
    /// Regenerate an example's curves and run its checks.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct SourceArgs {
    /// Scenario JSON file.
    #[arg(long, group = "source")]
    pub input: Option<PathBuf>,
    /// Built-in example 1-4.
    #[arg(long, group = "source")]
    pub example: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Override the metric parameter p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Write the resolved scenario as JSON ('-' for standard output).
    #[arg(long)]
    pub dump_scenario: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PermArg {
    Exhaustive,
    Sample,
    Greedy,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Permutation search strategy.
    #[arg(long, value_enum, default_value = "hybrid")]
    pub perm: PermArg,
    /// Seed for sampled permutation search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mixing weight for Iq/Sq/Ktq/B2q.
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
}

impl SearchArgs {
    fn options(&self) -> EvalOptions {
        let kind = match self.perm {
            PermArg::Exhaustive => SearchKind::Exhaustive,
            PermArg::Sample => SearchKind::RandomSample,
            PermArg::Greedy => SearchKind::GreedySwap,
            PermArg::Hybrid => SearchKind::Hybrid,
        };
        EvalOptions {
            strategy: SearchStrategy {
                kind,
                seed: self.seed,
                ..SearchStrategy::default()
            },
            q: self.q,
        }
    }
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Sweep parameter of the state.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub theta: f64,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Comma-separated bound names (I_2, S_3_1, K_2, B2, LMa, ...).
    #[arg(long, value_delimiter = ',')]
    pub bounds: Vec<String>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Defaults to the example's range, or [0, 2pi].
    #[arg(long, allow_negative_numbers = true)]
    pub theta_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_end: Option<f64>,
    /// Grid points including both ends [default: 200].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Comma-separated bound names; defaults to the example's curves.
    #[arg(long, value_delimiter = ',')]
    pub bounds: Vec<String>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw the curves as SVG.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Hilbert-space dimension, 2 or 3.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Number of random instances.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Instance i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed p for every instance; drawn per instance when omitted.
    #[arg(long)]
    pub p: Option<f64>,
    /// CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(long)]
    pub example: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Grid points [default: 200].
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
}

fn resolve(args: &ScenarioArgs, out: &mut dyn Write) -> Result<(Scenario, Option<usize>)> {
    let (mut scenario, example) = match (&args.source.input, args.source.example) {
        (Some(path), _) => (load_scenario(path)?, None),
        (None, Some(n)) => (builtin_example(n)?, Some(n)),
        (None, None) => unreachable!("clap requires a source"),
    };
    if let Some(p) = args.p {
        scenario = scenario.with_p(MetricParam::new(p)?);
    }
    if let Some(path) = &args.dump_scenario {
        let json = ScenarioFile::from_scenario(&scenario).to_json();
        if path.as_os_str() == "-" {
            out.write_all(json.as_bytes())?;
        } else {
            std::fs::write(path, json)?;
        }
    }
    Ok((scenario, example))
}

fn parse_bounds(names: &[String]) -> Result<Vec<BoundSpec>> {
    names.iter().filter(|s| !s.trim().is_empty()).map(|s| s.parse()).collect()
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_compute(args: &PointArgs, out: &mut dyn Write) -> Result<()> {
    let (s, _) = resolve(&args.scenario, out)?;
    let rho = s.state.at(args.theta)?;
    let mut r = String::new();
    let _ = writeln!(r, "scenario: {}", s.label);
    let _ = writeln!(r, "dimension: {}", s.dim());
    let _ = writeln!(r, "p: {}", fmt_num(s.p.value()));
    let _ = writeln!(r, "theta: {}", fmt_num(args.theta));
    for a in &s.observables {
        let _ = writeln!(r, "skew_info[{}]: {}", a.name(), fmt_num(skew_info_direct(&rho, a, s.p)?));
        let _ = writeln!(r, "variance[{}]: {}", a.name(), fmt_num(variance(&rho, a)?));
    }
    for (i, a) in s.observables.iter().enumerate() {
        for b in &s.observables[i + 1..] {
            let c = correlation(&rho, a, b, s.p)?;
            let _ = writeln!(r, "corr_sq[{},{}]: {}", a.name(), b.name(), fmt_num(c.norm_sqr()));
            let h = heisenberg_diagnostic(&rho, a, b)?;
            let _ = writeln!(r, "commutator_diagnostic[{},{}]: {}", a.name(), b.name(), fmt_num(h));
        }
    }
    out.write_all(r.as_bytes())?;
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> Result<()> {
    let (s, _) = resolve(&args.point.scenario, out)?;
    let mut bounds = parse_bounds(&args.bounds)?;
    if bounds.is_empty() {
        bounds = vec![BoundSpec::Product, BoundSpec::CorrSq];
    }
    let theta = args.point.theta;
    let sweep = run_sweep(&s, theta, theta, 1, &bounds, &args.search.options(), Exec::default())?;
    emit(&sweep_csv(&sweep), args.out.as_deref(), out)
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (s, example) = resolve(&args.scenario, out)?;
    let (start, end) = match example {
        Some(n) => example_range(n)?,
        None => (0.0, 2.0 * std::f64::consts::PI),
    };
    let start = args.theta_start.unwrap_or(start);
    let end = args.theta_end.unwrap_or(end);
    let steps = args.steps.unwrap_or(DEFAULT_STEPS);
    let mut bounds = parse_bounds(&args.bounds)?;
    if bounds.is_empty() {
        bounds = match example {
            Some(n) => example_bounds(n)?,
            None if s.observables.len() >= 2 => vec![],
            None => vec![BoundSpec::Total],
        };
    }
    let sweep = run_sweep(&s, start, end, steps, &bounds, &args.search.options(), Exec::default())?;
    emit(&sweep_csv(&sweep), args.out.as_deref(), out)?;
    if let Some(svg) = &args.svg {
        std::fs::write(svg, sweep_svg(&sweep, &s.label))?;
    }
    Ok(())
}

const BENCH_COLUMNS: [&str; 7] = ["product", "corr_sq", "I_2", "K_prefix", "I_best", "S_best", "K_best"];

/// Per-instance rows and `#` summary lines of the benchmark report.
///
/// `I_2` and `K_prefix` (best prefix `K_k`, `k < n`) use the identity
/// ordering; the `*_best` columns maximize each family over permutations
/// or subsets, skipping parameters that reduce to the product.
pub fn benchmark_report(dim: usize, count: usize, seed: u64, p: Option<f64>, exec: Exec) -> Result<String> {
    if !(2..=3).contains(&dim) {
        return Err(Error::Validation(format!("benchmark dimension must be 2 or 3, got {dim}")));
    }
    let p = p.map(MetricParam::new).transpose()?;
    let strategy = SearchStrategy {
        seed,
        ..SearchStrategy::default()
    };
    let rows = exec.try_map(count, |i| -> Result<(f64, [f64; 7])> {
        let mut s = random_instance(dim, 2, seed.wrapping_add(i as u64))?;
        if let Some(p) = p {
            s = s.with_p(p);
        }
        let rho = s.state.at(0.0)?;
        let gf = gamma_matrix(&rho, s.p)?;
        let pair = BoundInputPair::from_state(&gf, &s.observables[0], &s.observables[1])?;
        let n = pair.n();
        let best = |f| best_over_family_nontrivial(&pair, f, &strategy).map(|o| o.best.value);
        let k_prefix = (1..n)
            .map(|k| bound_k_prefix(&pair, k).map(|b| b.value))
            .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)))?;
        let vals = [
            pair.product(),
            pair.corr_sq(),
            bound_ik(&pair, 2)?.value,
            k_prefix,
            best(Family::I)?,
            best(Family::S)?,
            best(Family::K)?,
        ];
        let tol = pair.tolerance();
        for (name, v) in BENCH_COLUMNS.iter().zip(&vals).skip(2) {
            if *v > pair.product() + tol || *v < pair.corr_sq() - tol {
                return Err(Error::ChainViolation {
                    upper: "product".into(),
                    upper_value: pair.product(),
                    lower: (*name).into(),
                    lower_value: *v,
                });
            }
        }
        Ok((s.p.value(), vals))
    })?;
    let mut out = format!("instance,p,{}\n", BENCH_COLUMNS.join(","));
    let mut wins = [0usize; 3];
    let mut gaps = [0.0f64; 5];
    for (i, (p, v)) in rows.iter().enumerate() {
        let _ = write!(out, "{i},{}", fmt_num(*p));
        for x in v {
            let _ = write!(out, ",{}", fmt_num(*x));
        }
        out.push('\n');
        let top = v[4].max(v[5]).max(v[6]);
        let tol = 1e-12 * v[0].max(1.0);
        for f in 0..3 {
            if v[4 + f] >= top - tol {
                wins[f] += 1;
            }
        }
        if v[0] > 0.0 {
            for (g, x) in gaps.iter_mut().zip(&v[2..]) {
                *g += (v[0] - x) / v[0];
            }
        }
    }
    let _ = writeln!(out, "# instances: {count}");
    for (name, w) in ["I_best", "S_best", "K_best"].iter().zip(wins) {
        let rate = if count == 0 { 0.0 } else { w as f64 / count as f64 };
        let _ = writeln!(out, "# win rate {name}: {w}/{count} ({})", fmt_sig(rate, 4));
    }
    for (name, g) in BENCH_COLUMNS[2..].iter().zip(gaps) {
        let mean = if count == 0 { 0.0 } else { g / count as f64 };
        let _ = writeln!(out, "# mean relative gap {name}: {}", fmt_sig(mean, 6));
    }
    Ok(out)
}

fn cmd_benchmark(args: &BenchmarkArgs, out: &mut dyn Write) -> Result<()> {
    let report = benchmark_report(args.dim, args.count, args.seed, args.p, Exec::default())?;
    emit(&report, args.out.as_deref(), out)
}

fn cmd_reproduce(args: &ReproduceArgs, out: &mut dyn Write) -> Result<()> {
    let n = args.example;
    let s = builtin_example(n)?;
    let (start, end) = example_range(n)?;
    let mut bounds = example_bounds(n)?;
    for b in example_check_bounds(n)? {
        if !bounds.contains(&b) {
            bounds.push(b);
        }
    }
    let steps = args.steps.unwrap_or(DEFAULT_STEPS);
    let sweep = run_sweep(&s, start, end, steps, &bounds, &args.search.options(), Exec::default())?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join(format!("example{n}.csv")), sweep_csv(&sweep))?;
    std::fs::write(args.out.join(format!("example{n}.svg")), sweep_svg(&sweep, &s.label))?;
    let checks = example_checks(n, &sweep)?;
    let mut report = String::new();
    for c in &checks {
        let _ = writeln!(report, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(Some(cells)) = sweep.b2_argmax.first() {
        let distinct: std::collections::BTreeSet<&str> = sweep.b2_argmax.iter().flatten().map(String::as_str).collect();
        let _ = writeln!(
            report,
            "B2 argmax cells: {} distinct over the grid (first {cells})",
            distinct.len()
        );
    }
    out.write_all(report.as_bytes())?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        return Err(Error::AssertionFailure(format!("example {n}: {}", failed.join("; "))));
    }
    Ok(())
}

pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::AssertionFailure(_) | Error::ChainViolation { .. } | Error::CrossCheckFailed { .. } => EXIT_ASSERTION,
        _ => EXIT_INVALID,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => cmd_compute(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Benchmark(a) => cmd_benchmark(a, out),
        Command::Reproduce(a) => cmd_reproduce(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
