//! Configuration-driven parameter sweeps.
//!
//! A sweep is a single JSON document naming a task, its parameter axes and
//! an output path. Every task is a pure map over the Cartesian product of
//! its axes; rows come out in lexicographic grid order (first axis slowest)
//! whatever the worker count, and files are written to a temporary sibling
//! and renamed into place.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use thiserror::Error;

use crate::bath::{BathSpec, Units};
use crate::error::Error;
use crate::format::fmt_f64;
use crate::lifetimes::{
    self, CodePoint, JzStar, LifetimeReport, Preset, SUPERCONDUCTING_DEFAULT_L,
};
use crate::rg::{integrate_flow, CouplingVector, FlowOptions, FlowTrace};
use crate::surface_code::{failure_census, CensusRecord, TieBreak, CENSUS_MAX_L};
use crate::wick::{matching_sum, MatchingProblem, MATCHING_MAX_N};

/// Plotted range of the phase portrait.
pub const PORTRAIT_MAX_COUPLING: f64 = 3.5;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("output {0} already exists (use --force to overwrite)")]
    OutputExists(PathBuf),
    #[error("I/O error: {0}")]
    Io(String),
}

impl SweepError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Config { .. } => 2,
            SweepError::Resource(_) => 3,
            SweepError::OutputExists(_) | SweepError::Io(_) => 4,
        }
    }

    /// Field path of a configuration error.
    pub fn path(&self) -> Option<&str> {
        match self {
            SweepError::Config { path, .. } => Some(path),
            _ => None,
        }
    }

    fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        SweepError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    fn io(context: &Path, err: std::io::Error) -> Self {
        SweepError::Io(format!("{}: {err}", context.display()))
    }
}

pub type SweepResult<T> = std::result::Result<T, SweepError>;

fn core_err(path: impl Into<String>) -> impl Fn(Error) -> SweepError {
    let path = path.into();
    move |e| match e {
        Error::ResourceLimit(msg) => SweepError::Resource(msg),
        other => SweepError::config(path.clone(), other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Flow,
    PhaseDiagram,
    MatchingProbe,
    Census,
    Lifetime,
    Preset,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Flow => "flow",
            Task::PhaseDiagram => "phase_diagram",
            Task::MatchingProbe => "matching_probe",
            Task::Census => "census",
            Task::Lifetime => "lifetime",
            Task::Preset => "preset",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An exponent given either as a JSON number or as a `"p/q"` string.
/// Numbers are read through their shortest decimal form, so `0.3` is `3/10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exponent(pub Rational64);

impl Exponent {
    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl FromStr for Exponent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_rational(s).map(Exponent)
    }
}

/// Parses `"p/q"`, an integer, or a plain decimal into an exact rational.
pub fn parse_rational(text: &str) -> std::result::Result<Rational64, String> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in '{text}'"))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|_| format!("bad denominator in '{text}'"))?;
        if q == 0 {
            return Err(format!("zero denominator in '{text}'"));
        }
        return Ok(Rational64::new(p, q));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(format!("'{text}' is not a decimal or p/q rational"));
    }
    let digits = format!("{int_part}{frac_part}");
    let too_long = || format!("'{text}' has too many digits for an exact rational");
    let numer: i64 = digits.parse().map_err(|_| too_long())?;
    let denom = 10i64
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(too_long)?;
    let r = Rational64::new(numer, denom);
    Ok(if negative { -r } else { r })
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExponentVisitor;

        impl<'de> Visitor<'de> for ExponentVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a \"p/q\" string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(Rational64::from_integer(v)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                i64::try_from(v)
                    .map(|v| Exponent(Rational64::from_integer(v)))
                    .map_err(|_| E::custom("integer out of range"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                if !v.is_finite() {
                    return Err(E::custom("exponent must be finite"));
                }
                parse_rational(&format!("{v}"))
                    .map(Exponent)
                    .map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                parse_rational(v).map(Exponent).map_err(E::custom)
            }
        }

        d.deserialize_any(ExponentVisitor)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    #[serde(rename = "L")]
    pub l: Option<Vec<usize>>,
    pub z: Option<Vec<Exponent>>,
    pub s: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub temperature: Option<Vec<f64>>,
    pub epsilon: Option<Vec<f64>>,
    pub j_perp: Option<Vec<f64>>,
    pub j_z: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub weight: Option<Vec<usize>>,
    pub rule: Option<Vec<String>>,
}

impl Axes {
    fn present(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        let mut mark = |name, set: bool| {
            if set {
                names.push(name)
            }
        };
        mark("L", self.l.is_some());
        mark("z", self.z.is_some());
        mark("s", self.s.is_some());
        mark("lambda", self.lambda.is_some());
        mark("T", self.temperature.is_some());
        mark("epsilon", self.epsilon.is_some());
        mark("j_perp", self.j_perp.is_some());
        mark("j_z", self.j_z.is_some());
        mark("n", self.n.is_some());
        mark("weight", self.weight.is_some());
        mark("rule", self.rule.is_some());
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    Natural,
    Si,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub z: Option<Exponent>,
    pub s: Option<f64>,
    pub lambda: Option<f64>,
    pub v: Option<f64>,
    pub a: Option<f64>,
    pub a0: Option<f64>,
    pub d_dim: Option<u32>,
    pub alpha: Option<Exponent>,
    #[serde(rename = "T")]
    pub temperature: Option<f64>,
    pub tau_qec: Option<f64>,
    pub units: Option<UnitSystem>,
}

impl BathSection {
    fn to_spec(&self) -> BathSpec {
        let d = BathSpec::default();
        BathSpec {
            z: self.z.map_or(d.z, |e| e.0),
            s: self.s.unwrap_or(d.s),
            lambda: self.lambda.unwrap_or(d.lambda),
            v: self.v.unwrap_or(d.v),
            a: self.a.unwrap_or(d.a),
            a0: self.a0.unwrap_or(d.a0),
            d_dim: self.d_dim.unwrap_or(d.d_dim),
            alpha: self.alpha.map_or(d.alpha, |e| e.0),
            temperature: self.temperature.unwrap_or(d.temperature),
            tau_qec: self.tau_qec.unwrap_or(d.tau_qec),
            units: match self.units {
                Some(UnitSystem::Si) => Units::SI,
                _ => Units::NATURAL,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub j_max: Option<f64>,
    pub j_min: Option<f64>,
    pub l_max: Option<f64>,
    pub abs_tol: Option<f64>,
    pub rel_tol: Option<f64>,
    pub sample_stride: Option<usize>,
    pub localization_dwell: Option<f64>,
}

impl FlowSection {
    fn to_options(&self) -> FlowOptions {
        let d = FlowOptions::default();
        FlowOptions {
            j_max: self.j_max.unwrap_or(d.j_max),
            j_min: self.j_min.unwrap_or(d.j_min),
            l_max: self.l_max.unwrap_or(d.l_max),
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            sample_stride: self.sample_stride.unwrap_or(d.sample_stride),
            localization_dwell: self.localization_dwell.unwrap_or(d.localization_dwell),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum PhaseName {
    #[serde(rename = "AFM")]
    Afm,
    #[serde(rename = "FM")]
    Fm,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeSection {
    pub phase: Option<PhaseName>,
    pub jz_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub task: Task,
    pub output_path: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Accepted for forward compatibility; every task is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub force: bool,
    #[serde(default)]
    pub axes: Axes,
    #[serde(default)]
    pub bath: BathSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub lifetime: LifetimeSection,
    /// Preset name for the `preset` task.
    pub name: Option<String>,
}

fn default_workers() -> usize {
    1
}

impl SweepConfig {
    pub fn new(task: Task, output_path: impl Into<PathBuf>) -> Self {
        SweepConfig {
            task,
            output_path: output_path.into(),
            workers: 1,
            seed: 0,
            force: false,
            axes: Axes::default(),
            bath: BathSection::default(),
            flow: FlowSection::default(),
            lifetime: LifetimeSection::default(),
            name: None,
        }
    }
}

/// Parses a configuration document, reporting the field path of any
/// structural error.
pub fn parse_config(text: &str) -> SweepResult<SweepConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        SweepError::config(path, e.into_inner().to_string())
    })
}

pub fn load_config(path: &Path) -> SweepResult<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
    parse_config(&text)
}

/// Command-line overrides applied on top of a configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub output_path: Option<PathBuf>,
    pub workers: Option<usize>,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub task: Task,
    pub output_path: PathBuf,
    /// Data rows written (trace files for the flow task).
    pub records: usize,
}

enum Rendered {
    File(String),
    Dir(Vec<(String, String)>),
}

fn required<'a, T>(axis: &'a Option<Vec<T>>, name: &str) -> SweepResult<&'a [T]> {
    match axis {
        None => Err(SweepError::config(
            format!("axes.{name}"),
            "required axis is missing",
        )),
        Some(v) if v.is_empty() => Err(SweepError::config(
            format!("axes.{name}"),
            "axis must be nonempty",
        )),
        Some(v) => Ok(v),
    }
}

fn optional<'a, T>(axis: &'a Option<Vec<T>>, name: &str) -> SweepResult<Option<&'a [T]>> {
    match axis {
        Some(v) if v.is_empty() => Err(SweepError::config(
            format!("axes.{name}"),
            "axis must be nonempty",
        )),
        Some(v) => Ok(Some(v)),
        None => Ok(None),
    }
}

fn check_each<T: Copy>(
    values: &[T],
    name: &str,
    ok: impl Fn(T) -> bool,
    what: &str,
) -> SweepResult<()> {
    match values.iter().position(|&v| !ok(v)) {
        Some(i) => Err(SweepError::config(
            format!("axes.{name}[{i}]"),
            what.to_string(),
        )),
        None => Ok(()),
    }
}

fn only_axes(axes: &Axes, allowed: &[&str], task: Task) -> SweepResult<()> {
    match axes.present().into_iter().find(|a| !allowed.contains(a)) {
        Some(extra) => Err(SweepError::config(
            format!("axes.{extra}"),
            format!("axis not used by task {task}"),
        )),
        None => Ok(()),
    }
}

fn even_distance(l: usize) -> bool {
    l >= 2 && l.is_multiple_of(2)
}

fn cartesian2<A: Copy, B: Copy>(a: &[A], b: &[B]) -> Vec<(A, B)> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .collect()
}

/// Order-preserving parallel map. The first failing point (in grid order)
/// determines the error.
fn par_map<T, R, F>(pool: &rayon::ThreadPool, items: &[T], f: F) -> SweepResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> SweepResult<R> + Sync,
{
    let results: Vec<SweepResult<R>> = pool.install(|| items.par_iter().map(&f).collect());
    results.into_iter().collect()
}

fn flow_options(cfg: &SweepConfig) -> SweepResult<FlowOptions> {
    let opts = cfg.flow.to_options();
    opts.validate().map_err(core_err("flow"))?;
    Ok(opts)
}

fn base_spec(cfg: &SweepConfig) -> SweepResult<BathSpec> {
    let spec = cfg.bath.to_spec();
    spec.validate().map_err(core_err("bath"))?;
    if !(spec.lambda > 0.0) {
        return Err(SweepError::config("bath.lambda", "lambda must be positive"));
    }
    Ok(spec)
}

fn coupling_grid(cfg: &SweepConfig, bound: Option<f64>) -> SweepResult<Vec<(f64, f64)>> {
    only_axes(&cfg.axes, &["j_perp", "j_z"], cfg.task)?;
    let jp = required(&cfg.axes.j_perp, "j_perp")?;
    let jz = required(&cfg.axes.j_z, "j_z")?;
    let limit = bound.unwrap_or(f64::INFINITY);
    let msg = match bound {
        Some(b) => format!("coupling must be finite with |j| <= {b}"),
        None => "coupling must be finite".to_string(),
    };
    check_each(
        jp,
        "j_perp",
        |v: f64| v.is_finite() && v.abs() <= limit,
        &msg,
    )?;
    check_each(jz, "j_z", |v: f64| v.is_finite() && v.abs() <= limit, &msg)?;
    Ok(cartesian2(jp, jz))
}

fn render_flow(cfg: &SweepConfig, pool: &rayon::ThreadPool) -> SweepResult<(Rendered, usize)> {
    let grid = coupling_grid(cfg, None)?;
    let opts = flow_options(cfg)?;
    let traces = par_map(pool, &grid, |&(jp, jz)| {
        integrate_flow(CouplingVector::symmetric(jp, jz), &opts).map_err(core_err("axes"))
    })?;
    let mut index =
        String::from("trace_id,j_perp,j_z,terminal_label,l_terminal,invariant_drift,file\n");
    let mut files = Vec::with_capacity(traces.len() + 1);
    for (id, ((jp, jz), trace)) in grid.iter().zip(&traces).enumerate() {
        let file = format!("trace_{id:04}.csv");
        index.push_str(&format!(
            "{id},{},{},{},{},{},{file}\n",
            fmt_f64(*jp),
            fmt_f64(*jz),
            trace.terminal.label(),
            fmt_f64(trace.terminal.scale()),
            fmt_f64(trace.invariant_drift),
        ));
        files.push((file, trace.to_csv()));
    }
    files.push(("index.csv".to_string(), index));
    Ok((Rendered::Dir(files), traces.len()))
}

/// Separatrix tag of a symmetric start: `fm` on `jz = -|j_perp|` (the
/// phase boundary), `afm` on the isotropic line `jz = |j_perp|`.
pub fn separatrix_label(j_perp: f64, j_z: f64) -> &'static str {
    if j_perp == 0.0 {
        "none"
    } else if j_z == -j_perp.abs() {
        "fm"
    } else if j_z == j_perp.abs() {
        "afm"
    } else {
        "none"
    }
}

pub const PORTRAIT_CSV_HEADER: &str = "trajectory_id,l,j_perp,j_z,terminal_label,separatrix";

fn portrait_rows(id: usize, start: (f64, f64), trace: &FlowTrace, out: &mut String) {
    let sep = separatrix_label(start.0, start.1);
    let label = trace.terminal.label();
    for s in &trace.samples {
        out.push_str(&format!(
            "{id},{},{},{},{label},{sep}\n",
            fmt_f64(s.l),
            fmt_f64(s.j.jx),
            fmt_f64(s.j.jz)
        ));
    }
}

/// Phase-portrait CSV for symmetric starts `(j_perp, j_z)`, one row per
/// trajectory sample, trajectories in input order.
pub fn emit_phase_portrait(
    starts: &[(f64, f64)],
    opts: &FlowOptions,
    workers: usize,
) -> SweepResult<String> {
    if let Some(i) = starts
        .iter()
        .position(|&(a, b)| !(a.abs() <= PORTRAIT_MAX_COUPLING && b.abs() <= PORTRAIT_MAX_COUPLING))
    {
        return Err(SweepError::config(
            format!("starts[{i}]"),
            format!("coupling must be finite with |j| <= {PORTRAIT_MAX_COUPLING}"),
        ));
    }
    opts.validate().map_err(core_err("flow"))?;
    let pool = build_pool(workers)?;
    portrait_csv(starts, opts, &pool)
}

fn portrait_csv(
    starts: &[(f64, f64)],
    opts: &FlowOptions,
    pool: &rayon::ThreadPool,
) -> SweepResult<String> {
    let traces = par_map(pool, starts, |&(jp, jz)| {
        integrate_flow(CouplingVector::symmetric(jp, jz), opts).map_err(core_err("axes"))
    })?;
    let mut out = String::from(PORTRAIT_CSV_HEADER);
    out.push('\n');
    for (id, (start, trace)) in starts.iter().zip(&traces).enumerate() {
        portrait_rows(id, *start, trace, &mut out);
    }
    Ok(out)
}

fn render_phase_diagram(
    cfg: &SweepConfig,
    pool: &rayon::ThreadPool,
) -> SweepResult<(Rendered, usize)> {
    let grid = coupling_grid(cfg, Some(PORTRAIT_MAX_COUPLING))?;
    let opts = flow_options(cfg)?;
    let csv = portrait_csv(&grid, &opts, pool)?;
    let rows = csv.lines().count() - 1;
    Ok((Rendered::File(csv), rows))
}

fn render_matching(cfg: &SweepConfig, pool: &rayon::ThreadPool) -> SweepResult<(Rendered, usize)> {
    only_axes(&cfg.axes, &["z", "n"], cfg.task)?;
    let zs = required(&cfg.axes.z, "z")?;
    let ns = required(&cfg.axes.n, "n")?;
    check_each(zs, "z", |z: Exponent| *z.0.numer() >= 0, "z must be >= 0")?;
    check_each(ns, "n", even_distance, "n must be an even integer >= 2")?;
    if let Some(&n) = ns.iter().find(|&&n| n > MATCHING_MAX_N) {
        return Err(SweepError::Resource(format!(
            "exact matching enumeration limited to n <= {MATCHING_MAX_N}, got {n}"
        )));
    }
    let grid = cartesian2(zs, ns);
    let rows = par_map(pool, &grid, |&(z, n)| {
        let problem = MatchingProblem::unit_string(n, z.to_f64()).map_err(core_err("axes"))?;
        let sum = matching_sum(&problem).map_err(core_err("axes"))?;
        Ok(format!(
            "{},{n},{},{}\n",
            fmt_f64(z.to_f64()),
            fmt_f64(sum),
            fmt_f64(sum.powf(2.0 / n as f64))
        ))
    })?;
    let mut out = String::from("z,n,matching_sum,per_pair_weight\n");
    out.extend(rows.iter().map(String::as_str));
    Ok((Rendered::File(out), grid.len()))
}

fn render_census(cfg: &SweepConfig, pool: &rayon::ThreadPool) -> SweepResult<(Rendered, usize)> {
    only_axes(&cfg.axes, &["L", "weight", "rule"], cfg.task)?;
    let ls = required(&cfg.axes.l, "L")?;
    let weights = required(&cfg.axes.weight, "weight")?;
    let rules = match optional(&cfg.axes.rule, "rule")? {
        None => vec![TieBreak::Report],
        Some(names) => names
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse::<TieBreak>()
                    .map_err(|e| SweepError::config(format!("axes.rule[{i}]"), e.to_string()))
            })
            .collect::<SweepResult<Vec<_>>>()?,
    };
    check_each(ls, "L", even_distance, "L must be an even integer >= 2")?;
    if let Some(&l) = ls.iter().find(|&&l| l > CENSUS_MAX_L) {
        return Err(SweepError::Resource(format!(
            "exhaustive census limited to L <= {CENSUS_MAX_L}, got {l}"
        )));
    }
    let min_l = *ls.iter().min().expect("nonempty");
    check_each(
        weights,
        "weight",
        |w| w <= min_l,
        "weight exceeds the smallest contour length",
    )?;
    let grid: Vec<(usize, usize, TieBreak)> = ls
        .iter()
        .flat_map(|&l| {
            let rules = &rules;
            weights
                .iter()
                .flat_map(move |&w| rules.iter().map(move |&r| (l, w, r)))
        })
        .collect();
    let records: Vec<CensusRecord> = par_map(pool, &grid, |&(l, w, r)| {
        failure_census(l, w, r).map_err(core_err("axes"))
    })?;
    let mut out = String::from(CensusRecord::CSV_HEADER);
    out.push('\n');
    for r in &records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    Ok((Rendered::File(out), records.len()))
}

pub const LIFETIME_GRID_COLUMNS: &str = "z,s,lambda,T,epsilon";
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
struct LifetimePoint {
    l: usize,
    z: Rational64,
    s: f64,
    lambda: f64,
    temperature: f64,
    epsilon: f64,
}

fn render_lifetime(cfg: &SweepConfig, pool: &rayon::ThreadPool) -> SweepResult<(Rendered, usize)> {
    only_axes(
        &cfg.axes,
        &["L", "z", "s", "lambda", "T", "epsilon"],
        cfg.task,
    )?;
    let base = base_spec(cfg)?;
    let ls = required(&cfg.axes.l, "L")?;
    check_each(ls, "L", even_distance, "L must be an even integer >= 2")?;

    let zs: Vec<Rational64> = match optional(&cfg.axes.z, "z")? {
        Some(v) => {
            check_each(v, "z", |z: Exponent| *z.0.numer() > 0, "z must be positive")?;
            v.iter().map(|e| e.0).collect()
        }
        None => vec![base.z],
    };
    let float_axis =
        |axis: &Option<Vec<f64>>, name: &str, default: f64, ok: fn(f64) -> bool, what: &str| {
            match optional(axis, name)? {
                Some(v) => {
                    check_each(v, name, ok, what)?;
                    Ok(v.to_vec())
                }
                None => Ok(vec![default]),
            }
        };
    let ss = float_axis(
        &cfg.axes.s,
        "s",
        base.s,
        |s| s > 0.0 && s <= 1.0,
        "s must lie in (0, 1]",
    )?;
    let lambdas = float_axis(
        &cfg.axes.lambda,
        "lambda",
        base.lambda,
        |x| x > 0.0 && x.is_finite(),
        "lambda must be positive and finite",
    )?;
    let temps = float_axis(
        &cfg.axes.temperature,
        "T",
        base.temperature,
        |t| t >= 0.0 && t.is_finite(),
        "temperature must be >= 0 and finite",
    )?;
    let epsilons = float_axis(
        &cfg.axes.epsilon,
        "epsilon",
        DEFAULT_EPSILON,
        |e| e > 0.0 && e < 1.0,
        "epsilon must lie in (0, 1)",
    )?;

    let jz_star = match cfg.lifetime.phase.unwrap_or(PhaseName::Afm) {
        PhaseName::Afm => {
            if cfg.lifetime.jz_star.is_some() {
                return Err(SweepError::config(
                    "lifetime.jz_star",
                    "only meaningful for phase FM",
                ));
            }
            None
        }
        PhaseName::Fm => match cfg.lifetime.jz_star {
            Some(v) if v.is_finite() => Some(JzStar::user(v)),
            Some(_) => return Err(SweepError::config("lifetime.jz_star", "must be finite")),
            None => {
                return Err(SweepError::config(
                    "lifetime.jz_star",
                    "phase FM requires jz_star",
                ))
            }
        },
    };

    let mut grid = Vec::new();
    for &l in ls {
        for &z in &zs {
            for &s in &ss {
                for &lambda in &lambdas {
                    for &temperature in &temps {
                        for &epsilon in &epsilons {
                            grid.push(LifetimePoint {
                                l,
                                z,
                                s,
                                lambda,
                                temperature,
                                epsilon,
                            });
                        }
                    }
                }
            }
        }
    }

    let rows = par_map(pool, &grid, |p| {
        let spec = BathSpec {
            z: p.z,
            s: p.s,
            lambda: p.lambda,
            temperature: p.temperature,
            ..base.clone()
        };
        let mut point = CodePoint::new(p.l, p.epsilon, spec);
        if let Some(star) = jz_star {
            point = point.ferromagnetic(star);
        }
        let report: LifetimeReport = lifetimes::evaluate(&point).map_err(core_err("axes"))?;
        Ok(format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(p.z.to_f64().unwrap_or(f64::NAN)),
            fmt_f64(p.s),
            fmt_f64(p.lambda),
            fmt_f64(p.temperature),
            fmt_f64(p.epsilon),
            report.csv_row()
        ))
    })?;
    let mut out = format!("{LIFETIME_GRID_COLUMNS},{}\n", LifetimeReport::CSV_HEADER);
    out.extend(rows.iter().map(String::as_str));
    Ok((Rendered::File(out), grid.len()))
}

fn render_preset(cfg: &SweepConfig) -> SweepResult<(Rendered, usize)> {
    only_axes(&cfg.axes, &["L"], cfg.task)?;
    let name = cfg
        .name
        .as_deref()
        .ok_or_else(|| SweepError::config("name", "preset task requires a preset name"))?;
    let preset: Preset = name
        .parse()
        .map_err(|e: Error| SweepError::config("name", e.to_string()))?;
    let grid = match (preset, optional(&cfg.axes.l, "L")?) {
        (Preset::NeutralAtom, Some(_)) => {
            return Err(SweepError::config(
                "axes.L",
                "axis not used by preset neutral_atom",
            ))
        }
        (Preset::NeutralAtom, None) => Vec::new(),
        (Preset::Superconducting, None) => SUPERCONDUCTING_DEFAULT_L.to_vec(),
        (Preset::Superconducting, Some(ls)) => {
            check_each(ls, "L", even_distance, "L must be an even integer >= 2")?;
            ls.to_vec()
        }
    };
    let report = lifetimes::preset_report(preset, &grid).map_err(core_err("axes"))?;
    let mut text = serde_json::to_string_pretty(&report.to_json())
        .map_err(|e| SweepError::Io(e.to_string()))?;
    text.push('\n');
    Ok((Rendered::File(text), report.checks.len()))
}

fn build_pool(workers: usize) -> SweepResult<rayon::ThreadPool> {
    if workers == 0 {
        return Err(SweepError::config("workers", "worker count must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::Resource(format!("cannot start worker pool: {e}")))
}

/// Evaluates a configuration without touching the filesystem and returns
/// the rendered output as `(relative name, contents)` pairs. Single-file
/// tasks yield one entry with an empty name.
pub fn render(cfg: &SweepConfig) -> SweepResult<Vec<(String, String)>> {
    let pool = build_pool(cfg.workers)?;
    Ok(match render_task(cfg, &pool)?.0 {
        Rendered::File(text) => vec![(String::new(), text)],
        Rendered::Dir(files) => files,
    })
}

fn render_task(cfg: &SweepConfig, pool: &rayon::ThreadPool) -> SweepResult<(Rendered, usize)> {
    match cfg.task {
        Task::Flow => render_flow(cfg, pool),
        Task::PhaseDiagram => render_phase_diagram(cfg, pool),
        Task::MatchingProbe => render_matching(cfg, pool),
        Task::Census => render_census(cfg, pool),
        Task::Lifetime => render_lifetime(cfg, pool),
        Task::Preset => render_preset(cfg),
    }
}

/// Checks a configuration for semantic errors without writing anything.
pub fn validate(cfg: &SweepConfig) -> SweepResult<()> {
    if cfg.workers == 0 {
        return Err(SweepError::config("workers", "worker count must be >= 1"));
    }
    if cfg.output_path.as_os_str().is_empty() {
        return Err(SweepError::config(
            "output_path",
            "output path must not be empty",
        ));
    }
    match cfg.task {
        Task::Flow => coupling_grid(cfg, None).and(flow_options(cfg)).map(drop),
        Task::PhaseDiagram => coupling_grid(cfg, Some(PORTRAIT_MAX_COUPLING))
            .and(flow_options(cfg))
            .map(drop),
        // the remaining tasks validate cheaply as part of rendering
        _ => Ok(()),
    }
}

/// Runs a sweep end to end and writes its output.
pub fn run(config: &SweepConfig, overrides: &RunOverrides) -> SweepResult<RunSummary> {
    let mut cfg = config.clone();
    if let Some(path) = &overrides.output_path {
        cfg.output_path = path.clone();
    }
    if let Some(w) = overrides.workers {
        if w == 0 {
            return Err(SweepError::config("--workers", "worker count must be >= 1"));
        }
        cfg.workers = w;
    }
    let force = overrides.force || cfg.force;
    validate(&cfg)?;
    if cfg.output_path.exists() && !force {
        return Err(SweepError::OutputExists(cfg.output_path.clone()));
    }
    let pool = build_pool(cfg.workers)?;
    let (rendered, records) = render_task(&cfg, &pool)?;
    match rendered {
        Rendered::File(text) => write_file_atomic(&cfg.output_path, text.as_bytes(), force)?,
        Rendered::Dir(files) => write_dir_atomic(&cfg.output_path, &files, force)?,
    }
    Ok(RunSummary {
        task: cfg.task,
        output_path: cfg.output_path,
        records,
    })
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`.
pub fn write_file_atomic(path: &Path, bytes: &[u8], force: bool) -> SweepResult<()> {
    if path.exists() {
        if !force {
            return Err(SweepError::OutputExists(path.to_path_buf()));
        }
        if path.is_dir() {
            return Err(SweepError::Io(format!("{} is a directory", path.display())));
        }
    }
    let dir = parent_dir(path);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| SweepError::io(dir, e))?;
    tmp.write_all(bytes)
        .map_err(|e| SweepError::io(tmp.path(), e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| SweepError::io(tmp.path(), e))?;
    tmp.persist(path)
        .map_err(|e| SweepError::io(path, e.error))?;
    Ok(())
}

/// Builds the directory under a temporary name beside `path` and renames it
/// into place once every file is written.
pub fn write_dir_atomic(path: &Path, files: &[(String, String)], force: bool) -> SweepResult<()> {
    if path.exists() && !force {
        return Err(SweepError::OutputExists(path.to_path_buf()));
    }
    let dir = parent_dir(path);
    let staging = tempfile::Builder::new()
        .prefix(".kondolab-")
        .tempdir_in(dir)
        .map_err(|e| SweepError::io(dir, e))?;
    for (name, contents) in files {
        let target = staging.path().join(name);
        fs::write(&target, contents).map_err(|e| SweepError::io(&target, e))?;
    }
    if path.is_dir() {
        fs::remove_dir_all(path).map_err(|e| SweepError::io(path, e))?;
    } else if path.exists() {
        fs::remove_file(path).map_err(|e| SweepError::io(path, e))?;
    }
    let staged = staging.keep();
    fs::rename(&staged, path).map_err(|e| {
        let _ = fs::remove_dir_all(&staged);
        SweepError::io(path, e)
    })
}
