//! The reference experiment grid, table emission and golden comparison.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Angle, Corner, VelocityXY};
use crate::rules::RestitutionMode;
use crate::solvers::{run_grid, GridCase, RunConfig, RunResult, StopReason};
use crate::zones::Zone;

const REFERENCE_TABLES: &str = include_str!("../data/reference_tables.csv");

/// One component of a symbolic initial velocity: `coef · k^pow / div`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    coef: f64,
    pow: i8,
    div: f64,
}

impl Term {
    fn eval(&self, k: f64) -> f64 {
        match self.pow {
            0 => self.coef / self.div,
            1 => self.coef * k / self.div,
            _ => self.coef / k / self.div,
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    /// Accepts `c`, `k`, `ck`, `c*k`, `k/d`, `ck/d`, `c/k`, with optional sign.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("cannot parse velocity term {s:?}"));
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (sign, body) = match text.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, text.strip_prefix('+').unwrap_or(&text)),
        };
        let number = |t: &str| -> Result<f64> {
            match t {
                "" => Ok(1.0),
                t => t.parse().map_err(|_| bad()),
            }
        };
        if let Some(head) = body.strip_suffix("/k") {
            return Ok(Term {
                coef: sign * number(head)?,
                pow: -1,
                div: 1.0,
            });
        }
        if let Some(pos) = body.find('k') {
            let head = body[..pos].trim_end_matches('*');
            let tail = &body[pos + 1..];
            let div = match tail {
                "" => 1.0,
                t => t
                    .strip_prefix('/')
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?,
            };
            if div == 0.0 {
                return Err(bad());
            }
            return Ok(Term {
                coef: sign * number(head)?,
                pow: 1,
                div,
            });
        }
        if body.is_empty() {
            return Err(bad());
        }
        Ok(Term {
            coef: sign * number(body)?,
            pow: 0,
            div: 1.0,
        })
    }
}

/// Initial velocity before normalisation, written in terms of `k = tan α`,
/// e.g. `"1,2k/3"` or `"-1,k"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct V0Spec {
    x: Term,
    y: Term,
    label: String,
}

impl V0Spec {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Unnormalised velocity for slope `k`.
    pub fn eval(&self, k: f64) -> VelocityXY {
        VelocityXY::new(self.x.eval(k), self.y.eval(k))
    }
}

impl FromStr for V0Spec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("expected \"x,y\", got {s:?}")))?;
        Ok(Self {
            x: a.parse()?,
            y: b.parse()?,
            label: format!("{},{}", a.trim(), b.trim()),
        })
    }
}

impl TryFrom<String> for V0Spec {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<V0Spec> for String {
    fn from(value: V0Spec) -> Self {
        value.label
    }
}

impl fmt::Display for V0Spec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.label)
    }
}

/// Cartesian product of restitution coefficients, angles and initial
/// velocities. Loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub eps_values: Vec<f64>,
    pub alpha_values: Vec<Angle>,
    pub v0_specs: Vec<V0Spec>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::reference()
    }
}

impl GridSpec {
    /// The 7×7×7 reference grid.
    pub fn reference() -> Self {
        let v0 = ["1,0", "1,k/3", "1,2k/3", "1,k", "1,1/k", "0,1", "-1,k"];
        Self {
            eps_values: vec![1.0, 0.95, 0.75, 0.5, 0.25, 0.05, 0.0],
            alpha_values: [4, 6, 8, 12, 16, 32, 64]
                .into_iter()
                .map(Angle::pi_over)
                .collect(),
            v0_specs: v0
                .iter()
                .map(|s| s.parse().expect("built-in spec"))
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn len(&self) -> usize {
        self.eps_values.len() * self.alpha_values.len() * self.v0_specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedCase {
    /// `"i.j.k"`, 1-based indices into eps, alpha and v0 lists.
    pub case_id: String,
    pub eps: f64,
    pub corner: Corner,
    /// Unit-norm initial velocity.
    pub v0: VelocityXY,
}

impl ExpandedCase {
    pub fn grid_case(&self) -> GridCase {
        GridCase {
            eps: self.eps,
            alpha: self.corner.alpha(),
            v0: self.v0,
        }
    }
}

/// Cases in `i.j.k` order with every initial velocity normalised.
pub fn expand_grid(spec: &GridSpec) -> Result<Vec<ExpandedCase>> {
    if spec.is_empty() {
        return Err(Error::domain(
            "grid",
            "every list of the grid must be non-empty",
        ));
    }
    let mut out = Vec::with_capacity(spec.len());
    for (i, &eps) in spec.eps_values.iter().enumerate() {
        RestitutionMode::from_coefficient(eps)?;
        for (j, alpha) in spec.alpha_values.iter().enumerate() {
            let corner = Corner::new(alpha.radians())?;
            for (l, v0) in spec.v0_specs.iter().enumerate() {
                let raw = v0.eval(corner.k());
                let v0 = raw.normalized().ok_or_else(|| {
                    Error::domain("v0", format!("{v0} has no direction for alpha = {alpha}"))
                })?;
                out.push(ExpandedCase {
                    case_id: format!("{}.{}.{}", i + 1, j + 1, l + 1),
                    eps,
                    corner,
                    v0,
                });
            }
        }
    }
    Ok(out)
}

/// One line of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub case_id: String,
    pub x0: f64,
    pub y0: f64,
    pub xf: f64,
    pub yf: f64,
    pub norm_f: f64,
    pub zone0: Zone,
    pub steps: usize,
    pub stop: StopReason,
}

impl TableRow {
    pub fn from_result(case_id: impl Into<String>, r: &RunResult) -> Self {
        Self {
            case_id: case_id.into(),
            x0: r.v0.vx,
            y0: r.v0.vy,
            xf: r.v_final.vx,
            yf: r.v_final.vy,
            norm_f: r.norm_final(),
            zone0: r.zone0,
            steps: r.steps,
            stop: r.stop,
        }
    }

    pub fn v0(&self) -> VelocityXY {
        VelocityXY::new(self.x0, self.y0)
    }

    pub fn v_final(&self) -> VelocityXY {
        VelocityXY::new(self.xf, self.yf)
    }
}

/// Runs `cases` with the thresholds and cap of `defaults` and pairs the
/// results with their labels.
pub fn run_cases(cases: &[ExpandedCase], defaults: &RunConfig) -> Result<Vec<TableRow>> {
    let grid: Vec<GridCase> = cases.iter().map(ExpandedCase::grid_case).collect();
    let results = run_grid(&grid, defaults)?;
    Ok(cases
        .iter()
        .zip(&results)
        .map(|(c, r)| TableRow::from_result(c.case_id.clone(), r))
        .collect())
}

/// The reference grid under the reference thresholds.
pub fn run_reference_grid() -> Result<Vec<TableRow>> {
    let cases = expand_grid(&GridSpec::reference())?;
    let defaults = RunConfig::new(
        RestitutionMode::Ideal,
        Corner::new(std::f64::consts::FRAC_PI_4)?,
    )?;
    run_cases(&cases, &defaults)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Markdown,
    Json,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "md" | "markdown" => Ok(TableFormat::Markdown),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::Parse(format!("unknown table format {other:?}"))),
        }
    }
}

pub const CSV_HEADER: &str = "case_id,x0,y0,xf,yf,norm_f,zone0,steps,stop";

/// `x` in scientific notation with `sig` significant digits and a signed
/// two-digit exponent (`-8.94e-01`).
pub fn format_sci(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{:.*e}", sig.saturating_sub(1), x);
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn stop_label(stop: StopReason) -> &'static str {
    match stop {
        StopReason::ExitZone => "Z0",
        StopReason::AlmostAtRest => "‖·‖",
        StopReason::StepCap => "Nmax",
    }
}

/// Renders rows as text. Output depends only on the rows.
pub fn emit_table(rows: &[TableRow], format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.case_id,
                    format_sci(r.x0, 15),
                    format_sci(r.y0, 15),
                    format_sci(r.xf, 15),
                    format_sci(r.yf, 15),
                    format_sci(r.norm_f, 15),
                    r.zone0,
                    r.steps,
                    r.stop
                );
            }
        }
        TableFormat::Markdown => {
            out.push_str("| case | v0 | vf | norm | Z(v0) | N | stop |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | ({:.3}, {:.3}) | ({}, {}) | {} | {} | {} | {} |",
                    r.case_id,
                    r.x0,
                    r.y0,
                    format_sci(r.xf, 3),
                    format_sci(r.yf, 3),
                    format_sci(r.norm_f, 3),
                    r.zone0,
                    r.steps,
                    stop_label(r.stop)
                );
            }
        }
        TableFormat::Json => {
            out = serde_json::to_string_pretty(rows).expect("rows serialise");
            out.push('\n');
        }
    }
    out
}

/// Reads rows in the CSV layout of [`emit_table`].
pub fn parse_table_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!(
            "unexpected CSV header {:?}",
            header.as_slice()
        )));
    }
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<TableRow>, _>>()?;
    let mut seen = HashSet::new();
    for r in &rows {
        if !seen.insert(r.case_id.as_str()) {
            return Err(Error::Parse(format!("duplicate case_id {}", r.case_id)));
        }
    }
    Ok(rows)
}

/// The published result tables, transcribed to CSV.
pub fn reference_tables() -> Vec<TableRow> {
    parse_table_csv(REFERENCE_TABLES).expect("bundled reference tables parse")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    /// Absolute tolerance on each velocity component.
    pub v_abs: f64,
    pub norm_abs: f64,
    /// Relative tolerance on steps of `AlmostAtRest` rows.
    pub step_rel: f64,
    /// Largest final norm accepted for an `AlmostAtRest` row.
    pub rest_norm_max: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            v_abs: 5e-3,
            norm_abs: 5e-3,
            step_rel: 0.02,
            rest_norm_max: 2.0 * crate::solvers::DEFAULT_REST_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowVerdict {
    pub case_id: String,
    pub pass: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldenReport {
    pub tolerance: ToleranceSpec,
    pub passed: usize,
    pub failed: usize,
    pub rows: Vec<RowVerdict>,
}

impl GoldenReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &RowVerdict> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// One line per failing row followed by a summary line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.failures() {
            let _ = writeln!(out, "FAIL {}: {}", row.case_id, row.failures.join("; "));
        }
        let _ = writeln!(
            out,
            "{}/{} rows pass",
            self.passed,
            self.passed + self.failed
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

fn check_row(p: &TableRow, g: &TableRow, tol: &ToleranceSpec) -> Vec<String> {
    let mut f = Vec::new();
    for (name, a, b) in [
        ("x0", p.x0, g.x0),
        ("y0", p.y0, g.y0),
        ("xf", p.xf, g.xf),
        ("yf", p.yf, g.yf),
    ] {
        if !((a - b).abs() <= tol.v_abs) {
            f.push(format!(
                "{name} {} vs {}",
                format_sci(a, 3),
                format_sci(b, 3)
            ));
        }
    }
    if !((p.norm_f - g.norm_f).abs() <= tol.norm_abs) {
        f.push(format!(
            "norm {} vs {}",
            format_sci(p.norm_f, 3),
            format_sci(g.norm_f, 3)
        ));
    }
    if p.zone0 != g.zone0 {
        f.push(format!("zone0 {} vs {}", p.zone0, g.zone0));
    }
    if p.stop != g.stop {
        f.push(format!("stop {} vs {}", p.stop, g.stop));
    }
    let steps_ok = match g.stop {
        StopReason::AlmostAtRest => {
            (p.steps as f64 - g.steps as f64).abs() <= tol.step_rel * g.steps as f64
        }
        _ => p.steps == g.steps,
    };
    if !steps_ok {
        f.push(format!("steps {} vs {}", p.steps, g.steps));
    }
    if g.stop == StopReason::AlmostAtRest && !(p.norm_f <= tol.rest_norm_max) {
        f.push(format!(
            "rest norm {} above {}",
            format_sci(p.norm_f, 3),
            format_sci(tol.rest_norm_max, 3)
        ));
    }
    f
}

/// Row-by-row comparison. Both lists must cover the same case ids; the
/// report follows the order of `golden`.
pub fn compare_golden(
    produced: &[TableRow],
    golden: &[TableRow],
    tol: &ToleranceSpec,
) -> Result<GoldenReport> {
    let by_id: BTreeMap<&str, &TableRow> =
        produced.iter().map(|r| (r.case_id.as_str(), r)).collect();
    if by_id.len() != produced.len() {
        return Err(Error::Golden("duplicate case ids in produced rows".into()));
    }
    let golden_ids: HashSet<&str> = golden.iter().map(|r| r.case_id.as_str()).collect();
    if golden_ids.len() != golden.len() {
        return Err(Error::Golden("duplicate case ids in golden rows".into()));
    }
    let missing: Vec<&str> = golden
        .iter()
        .map(|r| r.case_id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    let extra: Vec<&str> = by_id
        .keys()
        .copied()
        .filter(|id| !golden_ids.contains(id))
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::Golden(format!(
            "case sets differ (missing from produced: {missing:?}; not in golden: {extra:?})"
        )));
    }
    let rows: Vec<RowVerdict> = golden
        .iter()
        .map(|g| {
            let failures = check_row(by_id[g.case_id.as_str()], g, tol);
            RowVerdict {
                case_id: g.case_id.clone(),
                pass: failures.is_empty(),
                failures,
            }
        })
        .collect();
    let passed = rows.iter().filter(|r| r.pass).count();
    Ok(GoldenReport {
        tolerance: *tol,
        passed,
        failed: rows.len() - passed,
        rows,
    })
}
