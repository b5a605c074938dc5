//! `corner-impact`: resolve impacts of a disk in a corner from the shell.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use corner_impact::analysis::{estimate_rate, two_step_spectrum};
use corner_impact::geometry::Angle;
use corner_impact::harness::{
    compare_golden, emit_table, expand_grid, format_sci, parse_table_csv, reference_tables,
    run_cases, GridSpec, TableFormat, TableRow, ToleranceSpec, V0Spec,
};
use corner_impact::solvers::{run_na, run_ta};
use corner_impact::{Corner, RestitutionMode, RunConfig, RunResult, VelocityAngular, VelocityXY};

/// Cap for `--mode ta` when `--nmax` is absent. Non-ideal runs never exit
/// in exact arithmetic, so some cap is always needed.
const TA_DEFAULT_CAP: usize = 1_000_000;

#[derive(Parser)]
#[command(
    name = "corner-impact",
    version,
    about = "Impacts of a rigid disk in a two-wall corner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve a single initial velocity.
    Run(RunArgs),
    /// Run a grid of cases and print the result table.
    Sweep(SweepArgs),
    /// Run a grid and compare it with a golden table.
    Golden(GoldenArgs),
    /// Spectral radius of the two-step map, optionally against a run.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Clone, Copy)]
struct Thresholds {
    /// Zone threshold.
    #[arg(long = "S")]
    s: Option<f64>,
    /// Almost-at-rest norm threshold.
    #[arg(long = "Sv")]
    sv: Option<f64>,
    /// Step cap.
    #[arg(long)]
    nmax: Option<usize>,
}

impl Thresholds {
    /// Reference configuration with the overrides applied.
    fn config(&self, mode: RestitutionMode, corner: Corner) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(mode, corner)?;
        if self.s.is_some() || self.sv.is_some() {
            let s = self.s.unwrap_or(cfg.zone_threshold());
            let sv = self.sv.unwrap_or(cfg.rest_threshold());
            cfg = cfg.with_thresholds(s, sv)?;
        }
        if let Some(n) = self.nmax {
            cfg = cfg.with_max_steps(n)?;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ta,
    Na,
}

#[derive(Clone, Copy, ValueEnum)]
enum Repr {
    Xy,
    Xieta,
    Angle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
    Json,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => TableFormat::Csv,
            Format::Md => TableFormat::Markdown,
            Format::Json => TableFormat::Json,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Restitution coefficient; 1 is the ideal rule.
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Half-angle of the corner: radians or pi/N.
    #[arg(long)]
    alpha: Angle,
    /// Initial velocity as x,y.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    v0: (f64, f64),
    #[arg(long, value_enum, default_value_t = Mode::Na)]
    mode: Mode,
    #[command(flatten)]
    thresholds: Thresholds,
    /// Representation of printed velocities.
    #[arg(long, value_enum, default_value_t = Repr::Xy)]
    repr: Repr,
    /// Output format; plain key=value lines when absent.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print every step.
    #[arg(long)]
    trace: bool,
    /// Rescale v0 to unit norm (always done in na mode).
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// JSON grid definition; the reference grid when absent.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Keep only cases with these restitution coefficients.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Keep only cases with these angles.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<Angle>,
    #[command(flatten)]
    thresholds: Thresholds,
}

impl GridArgs {
    fn rows(&self) -> Result<Vec<TableRow>> {
        let spec = match &self.grid {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read grid file {}", path.display()))?;
                GridSpec::from_json(&text)
                    .with_context(|| format!("malformed grid file {}", path.display()))?
            }
            None => GridSpec::reference(),
        };
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
        let cases: Vec<_> = expand_grid(&spec)?
            .into_iter()
            .filter(|c| self.eps.is_empty() || self.eps.iter().any(|e| same(*e, c.eps)))
            .filter(|c| {
                self.alpha.is_empty()
                    || self
                        .alpha
                        .iter()
                        .any(|a| same(a.radians(), c.corner.alpha()))
            })
            .collect();
        let defaults = self.thresholds.config(
            RestitutionMode::Ideal,
            Corner::new(std::f64::consts::FRAC_PI_4)?,
        )?;
        Ok(run_cases(&cases, &defaults)?)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args)]
struct GoldenArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Golden CSV; the bundled reference tables when absent.
    #[arg(long)]
    golden: Option<PathBuf>,
    /// Absolute tolerance on velocity components.
    #[arg(long = "tol-v")]
    tol_v: Option<f64>,
    /// Absolute tolerance on the final norm.
    #[arg(long = "tol-norm")]
    tol_norm: Option<f64>,
    /// Relative tolerance on steps of almost-at-rest rows.
    #[arg(long = "tol-steps")]
    tol_steps: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Restitution coefficients in (0, 1).
    #[arg(long, value_delimiter = ',', required = true)]
    eps: Vec<f64>,
    /// Corner half-angles.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<Angle>,
    /// Also run the thresholded solver and fit its decay rate.
    #[arg(long = "with-run")]
    with_run: bool,
    /// Initial velocity for --with-run, in terms of k.
    #[arg(long, allow_hyphen_values = true, default_value = "1,2k/3")]
    v0: V0Spec,
    #[command(flatten)]
    thresholds: Thresholds,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {t:?}"))
    };
    Ok((num(a)?, num(b)?))
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn repr_columns(repr: Repr) -> &'static str {
    match repr {
        Repr::Xy => "vx,vy",
        Repr::Xieta => "xi_dot,eta_dot",
        Repr::Angle => "speed,phi",
    }
}

fn repr_values(v: VelocityXY, corner: &Corner, repr: Repr) -> (f64, f64) {
    match repr {
        Repr::Xy => (v.vx, v.vy),
        Repr::Xieta => {
            let q = v.to_xieta(corner);
            (q.xi_dot, q.eta_dot)
        }
        Repr::Angle => VelocityAngular::from_xy(v).map_or((0.0, 0.0), |a| (a.speed, a.phi)),
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let corner = Corner::new(args.alpha.radians())?;
    let mode = RestitutionMode::from_coefficient(args.eps)?;
    let raw = VelocityXY::new(args.v0.0, args.v0.1);
    let normalize = args.normalize || matches!(args.mode, Mode::Na);
    let v0 = if normalize {
        raw.normalized()
            .context("v0: cannot normalise the zero velocity")?
    } else {
        raw
    };
    let result = match args.mode {
        Mode::Na => run_na(
            v0,
            &args.thresholds.config(mode, corner)?.with_trace(args.trace),
        )?,
        Mode::Ta => {
            if args.thresholds.s.is_some() || args.thresholds.sv.is_some() {
                bail!("--S and --Sv apply to --mode na only");
            }
            let cap = args.thresholds.nmax.unwrap_or(TA_DEFAULT_CAP);
            run_ta(v0, mode, corner, cap, args.trace)?
        }
    };
    let text = match args.format {
        Some(Format::Json) => serde_json::to_string_pretty(&result)? + "\n",
        Some(f) => {
            let mut text = emit_table(&[TableRow::from_result("run", &result)], f.into());
            append_trace(&mut text, &result, &corner, args.repr);
            text
        }
        None => {
            let mut text = String::new();
            let pair = |v| {
                let (a, b) = repr_values(v, &corner, args.repr);
                format!("{},{}", format_sci(a, 15), format_sci(b, 15))
            };
            let _ = writeln!(text, "zone0={}", result.zone0);
            let _ = writeln!(text, "steps={}", result.steps);
            let _ = writeln!(text, "stop={}", result.stop);
            let _ = writeln!(text, "v0[{}]={}", repr_columns(args.repr), pair(result.v0));
            let _ = writeln!(
                text,
                "v_final[{}]={}",
                repr_columns(args.repr),
                pair(result.v_final)
            );
            let _ = writeln!(text, "norm_final={}", format_sci(result.norm_final(), 15));
            append_trace(&mut text, &result, &corner, args.repr);
            text
        }
    };
    emit(&text, args.out.as_ref())
}

fn append_trace(text: &mut String, result: &RunResult, corner: &Corner, repr: Repr) {
    let Some(trace) = &result.trace else { return };
    let _ = writeln!(text, "\nstep,zone,{}", repr_columns(repr));
    for entry in trace {
        let (a, b) = repr_values(entry.xy, corner, repr);
        let _ = writeln!(
            text,
            "{},{},{},{}",
            entry.step,
            entry.zone,
            format_sci(a, 15),
            format_sci(b, 15)
        );
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let rows = args.grid.rows()?;
    emit(&emit_table(&rows, args.format.into()), args.out.as_ref())
}

/// Returns whether every row passed.
fn cmd_golden(args: &GoldenArgs) -> Result<bool> {
    let golden = match &args.golden {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read golden file {}", path.display()))?;
            parse_table_csv(&text)
                .with_context(|| format!("malformed golden file {}", path.display()))?
        }
        None => reference_tables(),
    };
    let produced = args.grid.rows()?;
    let defaults = ToleranceSpec::default();
    let tol = ToleranceSpec {
        v_abs: args.tol_v.unwrap_or(defaults.v_abs),
        norm_abs: args.tol_norm.unwrap_or(defaults.norm_abs),
        step_rel: args.tol_steps.unwrap_or(defaults.step_rel),
        ..defaults
    };
    let report = compare_golden(&produced, &golden, &tol)?;
    let text = match args.format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Json => report.to_json() + "\n",
    };
    emit(&text, args.out.as_ref())?;
    Ok(report.all_passed())
}

#[derive(serde::Serialize)]
struct AnalyzeRow {
    eps: f64,
    alpha: String,
    k: f64,
    beta: f64,
    branch: String,
    rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stop: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let mut rows = Vec::new();
    for &eps in &args.eps {
        for alpha in &args.alpha {
            let corner = Corner::new(alpha.radians())?;
            let s = two_step_spectrum(eps, &corner)?;
            let mut row = AnalyzeRow {
                eps,
                alpha: alpha.to_string(),
                k: s.k,
                beta: s.beta,
                branch: s.branch.to_string(),
                rho: s.rho,
                steps: None,
                stop: None,
                rate: None,
            };
            if args.with_run {
                let cfg = args
                    .thresholds
                    .config(RestitutionMode::newtonian(eps)?, corner)?
                    .with_trace(true);
                let v0 = args
                    .v0
                    .eval(corner.k())
                    .normalized()
                    .context("v0: zero initial velocity")?;
                let r = run_na(v0, &cfg)?;
                let trace: Vec<VelocityXY> = r.trace.iter().flatten().map(|t| t.xy).collect();
                row.steps = Some(r.steps);
                row.stop = Some(r.stop.to_string());
                // too short or non-monotone traces have no meaningful rate
                row.rate = estimate_rate(&trace).ok();
            }
            rows.push(row);
        }
    }
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv | Format::Md => {
            let md = matches!(args.format, Format::Md);
            let mut cols = vec!["eps", "alpha", "k", "beta", "branch", "rho"];
            if args.with_run {
                cols.extend(["steps", "stop", "rate"]);
            }
            let line = |cells: Vec<String>| {
                if md {
                    format!("| {} |\n", cells.join(" | "))
                } else {
                    format!("{}\n", cells.join(","))
                }
            };
            let mut text = line(cols.iter().map(|c| c.to_string()).collect());
            if md {
                text += &line(cols.iter().map(|_| "---".to_string()).collect());
            }
            for r in &rows {
                let mut cells = vec![
                    r.eps.to_string(),
                    r.alpha.clone(),
                    r.k.to_string(),
                    r.beta.to_string(),
                    r.branch.clone(),
                    r.rho.to_string(),
                ];
                if args.with_run {
                    cells.push(r.steps.map_or(String::new(), |n| n.to_string()));
                    cells.push(r.stop.clone().unwrap_or_default());
                    cells.push(r.rate.map_or("n/a".into(), |x| x.to_string()));
                }
                text += &line(cells);
            }
            text
        }
    };
    emit(&text, args.out.as_ref())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("CORNER_IMPACT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| {
            format!("CORNER_IMPACT_THREADS must be a positive integer, got {value:?}")
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("usage error");
            eprintln!("{} (see --help)", one_line(first));
            return ExitCode::from(1);
        }
    };
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| true),
        Command::Sweep(args) => cmd_sweep(args).map(|()| true),
        Command::Golden(args) => cmd_golden(args),
        Command::Analyze(args) => cmd_analyze(args).map(|()| true),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(1)
        }
    }
}
