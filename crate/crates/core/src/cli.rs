//! Command-line front end.
//!
//! Settings come from an optional `key=value` file (`--config`) overlaid by
//! flags given on the command line. Each invocation runs one mode and either
//! writes its data files into `--out` (atomically, with a `meta.json`
//! sidecar) or prints the primary file to stdout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::asymptotics::{ln_n_asymptote, theorem_constant, AsymptoticParams};
use crate::caps::Caps;
use crate::counter::{
    count_bounds_dp_with, count_exact_with, refine_bounds_with, truncate_parts, Families, PartList,
};
use crate::eqgraph::{build_equivalent_graph_with, EquivalentGraph};
use crate::error::{Error, Result};
use crate::export::{big_str, fmt17, ln_big, num17, write_atomic};
use crate::scalar::Scalar;
use crate::simulator::{collision_audit, default_eta, simulate_births_with, violations, SimOptions};
use crate::spectra::{
    closed_form_params, detect_rational_dependence, enumerate_lengths_with, exact_dependence, AbstractLengths,
    Geometry, ManifoldSpec, PairSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Geodesic length spectrum up to a cutoff.
    Spectrum,
    /// Packet-birth schedule up to a horizon.
    Simulate,
    /// Exact solution count of the truncated part list.
    Count,
    /// Grid-rounding lower/upper bounds on the solution count.
    Bounds,
    /// Leading-order `ln N(T)` curve.
    Asymptote,
    /// Counts, bounds and asymptote side by side over a T grid.
    Compare,
    /// Integer-relation search and collision audit.
    Audit,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Simulate => "simulate",
            Mode::Count => "count",
            Mode::Bounds => "bounds",
            Mode::Asymptote => "asymptote",
            Mode::Compare => "compare",
            Mode::Audit => "audit",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "packets", version, about = "Packet-birth counts for a segment glued to a flat manifold")]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,

    /// Plain-text `key=value` settings; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// cylinder, torus2, torus3, abstract or parametric.
    #[arg(long)]
    pub manifold: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub d: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub e: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Segment travel time.
    #[arg(long = "L", allow_hyphen_values = true)]
    pub l: Option<String>,
    /// Comma-separated loop lengths at A (abstract manifold).
    #[arg(long)]
    pub aa: Option<String>,
    /// Comma-separated connecting lengths (abstract manifold).
    #[arg(long)]
    pub ab: Option<String>,
    /// Comma-separated loop lengths at B (abstract manifold).
    #[arg(long)]
    pub bb: Option<String>,
    #[arg(long)]
    pub c0: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,

    #[arg(long)]
    pub cutoff: Option<String>,
    /// Horizon.
    #[arg(long = "T", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Comma-separated horizons.
    #[arg(long)]
    pub grid: Option<String>,
    /// Comma-separated λ values at which to print ρ(λ).
    #[arg(long)]
    pub lambda: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long = "target-gap")]
    pub target_gap: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<String>,
    #[arg(long = "max-coef")]
    pub max_coef: Option<String>,
    #[arg(long = "max-subset")]
    pub max_subset: Option<String>,
    /// all or merged.
    #[arg(long)]
    pub families: Option<String>,
    #[arg(long = "family-factor")]
    pub family_factor: Option<String>,
    /// Launch time of the first packet.
    #[arg(long, allow_hyphen_values = true)]
    pub offset: Option<String>,
    /// Cap overrides such as `grid=4e6,exact=1e8`, applied after the environment.
    #[arg(long)]
    pub caps: Option<String>,

    /// Output directory; without it the primary file goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report failures as JSON on stderr.
    #[arg(long = "json-errors")]
    pub json_errors: bool,
}

const KEYS: &[&str] = &[
    "manifold",
    "a",
    "b",
    "c",
    "d",
    "e",
    "f",
    "L",
    "aa",
    "ab",
    "bb",
    "c0",
    "gamma",
    "cutoff",
    "T",
    "grid",
    "lambda",
    "delta",
    "target-gap",
    "eta",
    "max-coef",
    "max-subset",
    "families",
    "family-factor",
    "offset",
    "caps",
    "out",
    "json-errors",
];

fn canonical_key(raw: &str) -> Option<&'static str> {
    let k = raw.trim().trim_start_matches("--").replace('_', "-");
    KEYS.iter()
        .copied()
        .find(|&known| known == k || (known.len() > 1 && known.eq_ignore_ascii_case(&k)))
}

/// Parses a `key=value` settings file; `#` starts a comment.
pub fn parse_settings(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", no + 1)))?;
        let key = canonical_key(k).ok_or_else(|| Error::Parse(format!("config line {}: unknown key `{}`", no + 1, k.trim())))?;
        out.insert(key.to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl Cli {
    /// Config-file settings overlaid by explicit flags.
    pub fn settings(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
                parse_settings(&text)?
            }
            None => BTreeMap::new(),
        };
        let flags: [(&str, &Option<String>); 26] = [
            ("manifold", &self.manifold),
            ("a", &self.a),
            ("b", &self.b),
            ("c", &self.c),
            ("d", &self.d),
            ("e", &self.e),
            ("f", &self.f),
            ("L", &self.l),
            ("aa", &self.aa),
            ("ab", &self.ab),
            ("bb", &self.bb),
            ("c0", &self.c0),
            ("gamma", &self.gamma),
            ("cutoff", &self.cutoff),
            ("T", &self.t),
            ("grid", &self.grid),
            ("lambda", &self.lambda),
            ("delta", &self.delta),
            ("target-gap", &self.target_gap),
            ("eta", &self.eta),
            ("max-coef", &self.max_coef),
            ("max-subset", &self.max_subset),
            ("families", &self.families),
            ("family-factor", &self.family_factor),
            ("offset", &self.offset),
            ("caps", &self.caps),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        if let Some(out) = &self.out {
            map.insert("out".into(), out.display().to_string());
        }
        if self.json_errors {
            map.insert("json-errors".into(), "true".into());
        }
        Ok(map)
    }
}

/// Fully parsed settings for one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub manifold: Option<ManifoldSpec>,
    pub horizon: Option<f64>,
    pub cutoff: Option<f64>,
    pub grid: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub delta: Option<f64>,
    pub target_gap: f64,
    pub eta: Option<f64>,
    pub max_coef: i64,
    pub max_subset: usize,
    pub families: Families,
    /// Explicit `(c0, gamma)`; overrides the manifold's closed form.
    pub params: Option<(f64, f64)>,
    pub family_factor: u32,
    pub offset: f64,
    pub caps: Caps,
    pub out: Option<PathBuf>,
    pub json_errors: bool,
    /// Every setting as written, for the metadata sidecar.
    pub settings: BTreeMap<String, String>,
}

pub const DEFAULT_TARGET_GAP: f64 = 0.05;
pub const DEFAULT_MAX_COEF: i64 = 8;
pub const DEFAULT_MAX_SUBSET: usize = 3;
/// Largest inexact part list searched for relations inside `compare`.
pub const COMPARE_SEARCH_LIMIT: usize = 48;

fn scalar(key: &str, s: &str) -> Result<Scalar> {
    s.parse::<Scalar>()
        .map_err(|e| Error::Parse(format!("--{key}: {e}")))
}

fn real(key: &str, s: &str) -> Result<f64> {
    Ok(scalar(key, s)?.value())
}

fn list(key: &str, s: &str) -> Result<Vec<Scalar>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| scalar(key, x))
        .collect()
}

fn sorted(mut v: Vec<Scalar>) -> Vec<Scalar> {
    v.sort_by(|x, y| x.value().total_cmp(&y.value()));
    v
}

impl RunConfig {
    pub fn from_settings(mode: Mode, settings: BTreeMap<String, String>, base_caps: Caps) -> Result<Self> {
        let get = |k: &str| settings.get(k).map(String::as_str);
        let opt_real = |k: &str| get(k).map(|v| real(k, v)).transpose();
        let manifold = manifold_from(&settings)?;
        let mut caps = base_caps;
        if let Some(c) = get("caps") {
            caps = caps.with_overrides(c)?;
        }
        let families = match get("families").unwrap_or("merged") {
            "merged" => Families::Merged,
            "all" => Families::All,
            other => return Err(Error::Parse(format!("--families must be all or merged, got `{other}`"))),
        };
        let params = match (opt_real("c0")?, opt_real("gamma")?) {
            (Some(c0), Some(g)) => Some((c0, g)),
            (None, None) => None,
            _ => return Err(Error::Parse("--c0 and --gamma must be given together".into())),
        };
        let int = |k: &str, default: i64| -> Result<i64> {
            match get(k) {
                Some(v) => v.trim().parse::<i64>().map_err(|_| Error::Parse(format!("--{k} expects an integer, got `{v}`"))),
                None => Ok(default),
            }
        };
        let max_coef = int("max-coef", DEFAULT_MAX_COEF)?;
        let max_subset = int("max-subset", DEFAULT_MAX_SUBSET as i64)?;
        let family_factor = int("family-factor", 1)?;
        if max_subset < 1 || family_factor < 1 || family_factor > u32::MAX as i64 {
            return Err(Error::Parse("--max-subset and --family-factor must be positive".into()));
        }
        let reals = |k: &str| -> Result<Vec<f64>> {
            Ok(get(k).map(|v| list(k, v)).transpose()?.unwrap_or_default().iter().map(Scalar::value).collect())
        };
        let cfg = RunConfig {
            mode,
            manifold,
            horizon: opt_real("T")?,
            cutoff: opt_real("cutoff")?,
            grid: reals("grid")?,
            lambdas: reals("lambda")?,
            delta: opt_real("delta")?,
            target_gap: opt_real("target-gap")?.unwrap_or(DEFAULT_TARGET_GAP),
            eta: opt_real("eta")?,
            max_coef,
            max_subset: max_subset as usize,
            families,
            params,
            family_factor: family_factor as u32,
            offset: opt_real("offset")?.unwrap_or(0.0),
            caps,
            out: get("out").map(PathBuf::from),
            json_errors: matches!(get("json-errors"), Some("true" | "1" | "yes")),
            settings,
        };
        for (name, v) in [("T", cfg.horizon), ("cutoff", cfg.cutoff), ("offset", Some(cfg.offset))] {
            if let Some(x) = v {
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::Domain(format!("--{name} must be finite and non-negative, got {x}")));
                }
            }
        }
        if cfg.grid.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Domain("--grid values must be finite and non-negative".into()));
        }
        Ok(cfg)
    }

    fn spec(&self) -> Result<&ManifoldSpec> {
        self.manifold
            .as_ref()
            .ok_or_else(|| Error::Parse(format!("{} needs --manifold", self.mode.as_str())))
    }

    fn horizon(&self) -> Result<f64> {
        self.horizon
            .ok_or_else(|| Error::Parse(format!("{} needs --T", self.mode.as_str())))
    }

    /// `--grid`, or the single horizon `--T`.
    fn t_grid(&self) -> Result<Vec<f64>> {
        if !self.grid.is_empty() {
            Ok(self.grid.clone())
        } else if let Some(t) = self.horizon {
            Ok(vec![t])
        } else {
            Err(Error::Parse(format!("{} needs --grid or --T", self.mode.as_str())))
        }
    }

    fn asymptotic_params(&self) -> Result<Option<AsymptoticParams>> {
        if let Some((c0, g)) = self.params {
            return AsymptoticParams::new(c0, g, self.family_factor).map(Some);
        }
        match &self.manifold {
            Some(spec) if !matches!(spec.geometry(), Geometry::Abstract(_)) => {
                let (c0, g) = closed_form_params(spec)?;
                AsymptoticParams::new(c0, g, self.family_factor).map(Some)
            }
            _ => Ok(None),
        }
    }
}

fn manifold_from(settings: &BTreeMap<String, String>) -> Result<Option<ManifoldSpec>> {
    let Some(kind) = settings.get("manifold") else {
        return Ok(None);
    };
    let need = |k: &str| -> Result<Scalar> {
        let v = settings
            .get(k)
            .ok_or_else(|| Error::Parse(format!("{kind} needs --{k}")))?;
        scalar(k, v)
    };
    let l = match settings.get("L") {
        Some(v) => scalar("L", v)?,
        None => Scalar::integer(1),
    };
    let spec = match kind.as_str() {
        "cylinder" => ManifoldSpec::cylinder(need("a")?, need("b")?, l)?,
        "torus2" => ManifoldSpec::torus2(need("a")?, need("b")?, need("c")?, need("d")?, l)?,
        "torus3" => ManifoldSpec::torus3(need("a")?, need("b")?, need("c")?, need("d")?, need("e")?, need("f")?, l)?,
        "abstract" => {
            let get = |k: &str| -> Result<Vec<Scalar>> {
                Ok(sorted(settings.get(k).map(|v| list(k, v)).transpose()?.unwrap_or_default()))
            };
            let lists = AbstractLengths {
                aa: get("aa")?,
                ab: get("ab")?,
                bb: get("bb")?,
            };
            ManifoldSpec::abstract_lengths(lists, l)?
        }
        "parametric" => ManifoldSpec::parametric(need("c0")?.value(), need("gamma")?.value(), l)?,
        other => return Err(Error::Parse(format!("unknown manifold `{other}`"))),
    };
    Ok(Some(spec))
}

/// Data files produced by one run, in emission order, plus a console summary.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: String,
    /// Error raised after the files were assembled (unconverged bounds, partial schedules).
    pub deferred: Option<String>,
    pub exit_code: i32,
}

impl Output {
    fn file(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    fn json(&mut self, name: &str, v: &Value) {
        let mut s = serde_json::to_string_pretty(v).expect("JSON values serialise");
        s.push('\n');
        self.file(name, s);
    }
}

/// Runs one mode without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<Output> {
    match cfg.mode {
        Mode::Spectrum => cmd_spectrum(cfg),
        Mode::Simulate => cmd_simulate(cfg),
        Mode::Count => cmd_count(cfg),
        Mode::Bounds => cmd_bounds(cfg),
        Mode::Asymptote => cmd_asymptote(cfg),
        Mode::Compare => cmd_compare(cfg),
        Mode::Audit => cmd_audit(cfg),
    }
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Output> {
    let spec = cfg.spec()?;
    let cutoff = cfg
        .cutoff
        .or(cfg.horizon)
        .ok_or_else(|| Error::Parse("spectrum needs --cutoff".into()))?;
    let spectrum = enumerate_lengths_with(spec, cutoff, &cfg.caps)?;
    let mut out = Output::default();
    out.file("spectrum.csv", spectrum.to_csv());
    out.json("spectrum.json", &spectrum.to_json());
    let _ = writeln!(out.summary, "classes,{}", spectrum.classes().len());
    if !cfg.lambdas.is_empty() {
        out.summary.push_str("lambda,rho,rho_aa_ab\n");
        for &l in &cfg.lambdas {
            let all = spectrum.counting_function(l, PairSet::ALL)?;
            let thm = spectrum.counting_function(l, PairSet::AA_AB)?;
            let _ = writeln!(out.summary, "{},{all},{thm}", fmt17(l));
        }
    }
    Ok(out)
}

fn graph_for(cfg: &RunConfig, horizon: f64) -> Result<EquivalentGraph> {
    build_equivalent_graph_with(cfg.spec()?, horizon, &cfg.caps)
}

fn sim_options(cfg: &RunConfig) -> SimOptions {
    SimOptions {
        eta: cfg.eta,
        offset: cfg.offset,
        caps: cfg.caps,
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Output> {
    let t = cfg.horizon()?;
    let graph = graph_for(cfg, (t - cfg.offset).max(0.0))?;
    let mut out = Output::default();
    let schedule = match simulate_births_with(&graph, t, &sim_options(cfg)) {
        Ok(s) => s,
        Err(Error::FrontierOverflow { cap, reached, partial }) => {
            out.file("births.partial.csv", partial.to_csv());
            let err = Error::FrontierOverflow { cap, reached, partial };
            out.deferred = Some(err.to_string());
            out.exit_code = err.exit_code();
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    out.file("births.csv", schedule.to_csv());
    out.file("n_curve.csv", schedule.n_curve_csv());
    out.json("graph.json", &graph.to_json());
    let _ = writeln!(out.summary, "N,{}", schedule.len());
    let _ = writeln!(out.summary, "tuples,{}", big_str(&schedule.total_multiplicity()));
    let _ = writeln!(out.summary, "key_mode,{}", schedule.mode.as_str());
    if !schedule.unresolved.is_empty() {
        let _ = writeln!(out.summary, "unresolved_pairs,{}", schedule.unresolved.len());
    }
    Ok(out)
}

fn parts_for(cfg: &RunConfig, graph: &EquivalentGraph, t: f64) -> Result<PartList> {
    truncate_parts(graph, t, cfg.families)
}

pub fn cmd_count(cfg: &RunConfig) -> Result<Output> {
    let t = cfg.horizon()?;
    let graph = graph_for(cfg, t)?;
    let parts = parts_for(cfg, &graph, t)?;
    let result = count_exact_with(&parts, t, &cfg.caps)?;
    let mut v = result.to_json();
    v["parts"] = json!(parts.len());
    v["families"] = json!(cfg.families.as_str());
    let mut out = Output::default();
    out.json("count.json", &v);
    let _ = writeln!(out.summary, "count,{}", big_str(result.lower()));
    Ok(out)
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Output> {
    let t = cfg.horizon()?;
    let graph = graph_for(cfg, t)?;
    let parts = parts_for(cfg, &graph, t)?;
    let mut out = Output::default();
    let (result, converged, iterations) = match cfg.delta {
        Some(delta) => (count_bounds_dp_with(&parts, t, delta, &cfg.caps)?, true, 1),
        None => {
            let r = refine_bounds_with(&parts, t, cfg.target_gap, &cfg.caps)?;
            (r.bounds, r.converged, r.iterations)
        }
    };
    let mut v = result.to_json();
    v["gap"] = num17(result.gap());
    v["target_gap"] = if cfg.delta.is_some() { Value::Null } else { num17(cfg.target_gap) };
    v["converged"] = json!(converged);
    v["iterations"] = json!(iterations);
    v["parts"] = json!(parts.len());
    out.json("bounds.json", &v);
    let _ = writeln!(out.summary, "lower,{}", big_str(result.lower()));
    let _ = writeln!(out.summary, "upper,{}", big_str(result.upper()));
    let _ = writeln!(out.summary, "gap,{}", fmt17(result.gap()));
    if !converged {
        let err = Error::Unconverged {
            achieved: result.gap(),
            target: cfg.target_gap,
        };
        out.deferred = Some(err.to_string());
        out.exit_code = err.exit_code();
    }
    Ok(out)
}

pub fn cmd_asymptote(cfg: &RunConfig) -> Result<Output> {
    let p = cfg
        .asymptotic_params()?
        .ok_or_else(|| Error::Parse("asymptote needs --c0/--gamma or a built-in manifold".into()))?;
    let grid = cfg.t_grid()?;
    let mut out = Output::default();
    out.file("asymptote.csv", crate::asymptotics::asymptote_csv(&p, &grid)?);
    let _ = writeln!(out.summary, "coefficient,{}", fmt17(p.coefficient()?));
    let _ = writeln!(out.summary, "exponent,{}", fmt17(p.exponent()));
    if let Some(spec) = &cfg.manifold {
        if let Ok(k) = theorem_constant(spec) {
            let _ = writeln!(out.summary, "closed_form_constant,{}", fmt17(k));
        }
    }
    Ok(out)
}

/// Whether the parts satisfy an integer relation: exact for parts known by
/// their squares, a bounded search otherwise.
fn dependence_flag(parts: &PartList, max_coef: i64, max_subset: usize) -> Result<&'static str> {
    if parts.is_empty() {
        return Ok("none");
    }
    let squares: Option<Vec<BigRational>> = parts.parts().iter().map(|p| p.square.clone()).collect();
    if let Some(sq) = squares {
        let dep = exact_dependence(&sq);
        return Ok(if dep.is_dependent() { "relations" } else { "none" });
    }
    if parts.len() > COMPARE_SEARCH_LIMIT {
        return Ok("unchecked");
    }
    let found = detect_rational_dependence(&parts.values(), max_coef, max_subset.min(4))?;
    Ok(if found.is_empty() { "none" } else { "relations" })
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Output> {
    let grid = cfg.t_grid()?;
    let t_max = grid.iter().copied().fold(0.0, f64::max);
    let graph = graph_for(cfg, t_max)?;
    let params = cfg.asymptotic_params()?;
    let mut csv = String::from("T,method,n_tuples,ln_lower,ln_upper,n_distinct,ln_asymptote,ratio,dependence\n");
    let mut unconverged = None;
    for &t in &grid {
        let parts = parts_for(cfg, &graph, t)?;
        let (method, n_tuples, lo, hi) = match count_exact_with(&parts, t, &cfg.caps) {
            Ok(r) => {
                let n = r.lower().clone();
                let ln = ln_big(&n);
                ("exact", big_str(&n), ln, ln)
            }
            Err(Error::CountCap { .. }) => {
                let r = refine_bounds_with(&parts, t, cfg.target_gap, &cfg.caps)?;
                if !r.converged {
                    unconverged = Some(Error::Unconverged {
                        achieved: r.gap,
                        target: cfg.target_gap,
                    });
                }
                let method = if r.converged { "bounds" } else { "bounds_unconverged" };
                (method, String::new(), r.bounds.ln_lower(), r.bounds.ln_upper())
            }
            Err(e) => return Err(e),
        };
        let small = method == "exact" && n_tuples.parse::<u64>().is_ok_and(|n| n <= cfg.caps.distinct as u64);
        let n_distinct = if small {
            match simulate_births_with(&graph, t, &sim_options(cfg)) {
                Ok(s) => s.len().to_string(),
                Err(Error::FrontierOverflow { .. } | Error::DistinctCap { .. } | Error::KeyOverflow) => String::new(),
                Err(e) => return Err(e),
            }
        } else {
            String::new()
        };
        let asym = match &params {
            Some(p) => ln_n_asymptote(p, t)?,
            None => f64::NAN,
        };
        let mid = 0.5 * (lo + hi);
        let ratio = if asym > 0.0 { mid / asym } else { f64::NAN };
        let dep = dependence_flag(&parts, cfg.max_coef, cfg.max_subset)?;
        let _ = writeln!(
            csv,
            "{},{method},{n_tuples},{},{},{n_distinct},{},{},{dep}",
            fmt17(t),
            fmt17(lo),
            fmt17(hi),
            fmt17(asym),
            fmt17(ratio)
        );
    }
    let mut out = Output::default();
    out.file("compare.csv", csv);
    out.summary = format!("rows,{}\n", grid.len());
    if let Some(err) = unconverged {
        out.deferred = Some(err.to_string());
        out.exit_code = err.exit_code();
    }
    Ok(out)
}

pub fn cmd_audit(cfg: &RunConfig) -> Result<Output> {
    let cutoff = cfg
        .cutoff
        .or(cfg.horizon)
        .ok_or_else(|| Error::Parse("audit needs --cutoff or --T".into()))?;
    let horizon = cfg.horizon.unwrap_or(cutoff);
    let graph = graph_for(cfg, cutoff.max(horizon - cfg.offset))?;
    let parts = parts_for(cfg, &graph, cutoff)?;
    let lengths = parts.values();
    let relations = detect_rational_dependence(&lengths, cfg.max_coef, cfg.max_subset)?;
    let squares: Option<Vec<BigRational>> = parts.parts().iter().map(|p| p.square.clone()).collect();
    let exact = squares.map(|sq| {
        let d = exact_dependence(&sq);
        json!({ "groups": d.groups, "relations": d.relations, "certified": d.certified })
    });
    let eta = cfg.eta.unwrap_or_else(|| default_eta(horizon).max(1e-12));
    let schedule = simulate_births_with(
        &graph,
        horizon,
        &SimOptions {
            eta: Some(eta),
            ..sim_options(cfg)
        },
    )?;
    let findings = collision_audit(&schedule, eta)?;
    let n_violations = violations(&findings).count();
    let report = json!({
        "lengths": lengths.iter().map(|&x| num17(x)).collect::<Vec<_>>(),
        "max_coef": cfg.max_coef,
        "max_subset": cfg.max_subset,
        "relations": relations,
        "exact": exact,
        "horizon": num17(horizon),
        "eta": num17(eta),
        "findings": findings.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
        "violations": n_violations,
    });
    let mut out = Output::default();
    out.json("audit.json", &report);
    let _ = writeln!(out.summary, "relations,{}", relations.len());
    let _ = writeln!(out.summary, "violations,{n_violations}");
    Ok(out)
}

fn meta_json(cfg: &RunConfig, out: &Output) -> Value {
    json!({
        "tool": "packets",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": cfg.mode.as_str(),
        "settings": cfg.settings,
        "caps": {
            "classes": cfg.caps.classes,
            "frontier": cfg.caps.frontier,
            "exact_count": cfg.caps.exact_count,
            "distinct": cfg.caps.distinct,
            "grid": cfg.caps.grid,
            "refine_bits": cfg.caps.refine_bits,
        },
        "files": out.files.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
        "status": out.deferred.as_deref().unwrap_or("ok"),
    })
}

/// Writes every data file plus `meta.json` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &RunConfig, out: &Output) -> Result<()> {
    for (name, bytes) in &out.files {
        write_atomic(&dir.join(name), bytes)?;
    }
    let mut meta = serde_json::to_string_pretty(&meta_json(cfg, out)).expect("JSON values serialise");
    meta.push('\n');
    write_atomic(&dir.join("meta.json"), meta.as_bytes())?;
    Ok(())
}

fn report_error(err: &Error, json_errors: bool) -> i32 {
    let code = err.exit_code();
    if json_errors {
        let v = json!({ "error": { "kind": err.kind(), "message": err.to_string(), "exit_code": code } });
        eprintln!("{v}");
    } else {
        eprintln!("error: {err}");
    }
    code
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let json_errors = cli.json_errors;
    let cfg = match Caps::from_env()
        .and_then(|caps| cli.settings().map(|s| (caps, s)))
        .and_then(|(caps, s)| RunConfig::from_settings(cli.mode, s, caps))
    {
        Ok(c) => c,
        Err(e) => return report_error(&e, json_errors),
    };
    let json_errors = cfg.json_errors;
    let out = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => return report_error(&e, json_errors),
    };
    match &cfg.out {
        Some(dir) => {
            if let Err(e) = write_outputs(dir, &cfg, &out) {
                return report_error(&e, json_errors);
            }
        }
        None => {
            if let Some((_, bytes)) = out.files.first() {
                print!("{}", String::from_utf8_lossy(bytes));
            }
        }
    }
    if cfg.out.is_some() {
        print!("{}", out.summary);
    } else {
        eprint!("{}", out.summary);
    }
    if let Some(msg) = &out.deferred {
        if json_errors {
            let v = json!({ "error": { "message": msg, "exit_code": out.exit_code } });
            eprintln!("{v}");
        } else {
            eprintln!("error: {msg}");
        }
    }
    out.exit_code
}
