//! Config files, nodal CSV datasets, JSON reports and the four commands
//! behind the `nodalsl` binary.
//!
//! Exit-status contract of the commands (see [`IoError::exit_code`]):
//! 0 success, 2 config or input error, 3 solver error, 4 acceptance
//! threshold violated in `roundtrip`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;
use toml::{Table, Value};

use crate::expr::parse_expression;
use crate::forward::{
    asymptotic_nodal_residual, generate_dataset, reference_position, residual_scale, NodalDataset, NodalLayer,
    NodalPoint, SpectralPoint,
};
use crate::inverse::{
    admissible_modulus, grid_integral, invert, select_subsequence, ComboConstants, Diagnostics, FitConfig, Known,
    ReconstructionResult, ResolvedConstants,
};
use crate::potential::Potential;
use crate::problem::{BoundaryParam, Case, ProblemSpec, Rational, SolverConfig};
use crate::SolverError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable capping the worker threads (`0` = one per core).
pub const THREADS_ENV: &str = "NODALSL_THREADS";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("config syntax: {0}")]
    ConfigSyntax(String),
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: std::io::Error },
    #[error("nodes file line {line}: {message}")]
    NodesFormat { line: u64, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("acceptance thresholds violated: {}", .0.join("; "))]
    Acceptance(Vec<String>),
}

impl IoError {
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Solver(_) => 3,
            IoError::Acceptance(_) => 4,
            _ => 2,
        }
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        IoError::Config { field: field.to_string(), message: message.into() }
    }
}

/// Sizes the global rayon pool from [`THREADS_ENV`]. Call once, early.
pub fn configure_threads() -> Result<(), IoError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| IoError::Argument(format!("{THREADS_ENV}=`{raw}` is not a non-negative integer")))?;
    // a second call (e.g. from tests) finds the pool already built; that is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Writes through a temporary file in the target directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let file_err = |source| IoError::File { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
    tmp.write_all(bytes).map_err(file_err)?;
    tmp.as_file().sync_all().map_err(file_err)?;
    tmp.persist(path).map_err(|e| file_err(e.error))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

/// Values assumed known when separating constant combinations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KnownValues {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub big_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
}

impl KnownValues {
    pub fn is_empty(&self) -> bool {
        *self == KnownValues::default()
    }

    /// Sets one value from a `name=value` argument.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), IoError> {
        let slot = match name {
            "h" => &mut self.h,
            "H" => &mut self.big_h,
            "gamma0" => &mut self.gamma0,
            "gamma1" => &mut self.gamma1,
            other => {
                return Err(IoError::Argument(format!("unknown known value `{other}` (use h, H, gamma0 or gamma1)")))
            }
        };
        *slot = Some(value);
        Ok(())
    }

    /// Parses `name=value`.
    pub fn parse_assignment(&mut self, arg: &str) -> Result<(), IoError> {
        let (name, value) =
            arg.split_once('=').ok_or_else(|| IoError::Argument(format!("`{arg}` is not of the form name=value")))?;
        let v: f64 =
            value.trim().parse().map_err(|_| IoError::Argument(format!("`{value}` in `{arg}` is not a number")))?;
        self.set(name.trim(), v)
    }

    /// The side information this set provides for `case`, if any.
    pub fn to_known(&self, case: Case) -> Result<Option<Known>, IoError> {
        if self.is_empty() {
            return Ok(None);
        }
        let mismatch = |detail: &str| IoError::Solver(SolverError::KnownMismatch { case, detail: detail.to_string() });
        let k = match (case, *self) {
            (Case::I, KnownValues { h: Some(h), big_h: Some(big_h), gamma0: None, gamma1: None }) => {
                Known::Robin { h, big_h }
            }
            (Case::I, KnownValues { h: None, big_h: None, gamma0: Some(gamma0), gamma1: Some(gamma1) }) => {
                Known::Gammas { gamma0, gamma1 }
            }
            (Case::I, _) => return Err(mismatch("case i needs exactly the pair (h, H) or the pair (gamma0, gamma1)")),
            (Case::II, KnownValues { h: None, big_h: Some(v), gamma0: None, gamma1: None }) => Known::RightRobin(v),
            (Case::II, KnownValues { h: None, big_h: None, gamma0: None, gamma1: Some(v) }) => Known::Gamma1(v),
            (Case::II, _) => return Err(mismatch("case ii needs exactly one of H, gamma1")),
            (Case::III, KnownValues { h: Some(v), big_h: None, gamma0: None, gamma1: None }) => Known::LeftRobin(v),
            (Case::III, KnownValues { h: None, big_h: None, gamma0: Some(v), gamma1: None }) => Known::Gamma0(v),
            (Case::III, _) => return Err(mismatch("case iii needs exactly one of h, gamma0")),
        };
        Ok(Some(k))
    }
}

/// Thresholds checked by `roundtrip`; absent entries are not checked.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Thresholds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_l2: Option<f64>,
    /// Absolute error of every resolved constant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<f64>,
    /// Require the per-layer sup error to trend down (see [`decreasing_trend`]).
    pub decreasing: bool,
}

/// A parsed and validated config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub q: String,
    pub h: BoundaryParam,
    pub big_h: BoundaryParam,
    pub gamma0: f64,
    pub gamma1: f64,
    pub xi0: Rational,
    pub xi1: Rational,
    /// Sorted, without duplicates.
    pub n_list: Vec<u32>,
    pub solver: SolverConfig,
    pub fit: FitConfig,
    pub known: KnownValues,
    pub acceptance: Thresholds,
}

const TOP_KEYS: &[&str] = &[
    "q",
    "h",
    "H",
    "gamma0",
    "gamma1",
    "xi0",
    "xi1",
    "n_min",
    "n_list",
    "n_range",
    "global_scan",
    "tolerances",
    "fit",
    "known",
    "acceptance",
];

fn check_keys(table: &Table, prefix: &str, allowed: &[&str]) -> Result<(), IoError> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(IoError::field(&format!("{prefix}{key}"), "unknown key"));
        }
    }
    Ok(())
}

fn get_f64(table: &Table, prefix: &str, key: &str) -> Result<Option<f64>, IoError> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Float(v)) if v.is_finite() => Ok(Some(*v)),
        Some(Value::Integer(v)) => Ok(Some(*v as f64)),
        Some(other) => {
            Err(IoError::field(&format!("{prefix}{key}"), format!("expected a finite number, found {other}")))
        }
    }
}

fn get_positive(table: &Table, prefix: &str, key: &str) -> Result<Option<f64>, IoError> {
    let v = get_f64(table, prefix, key)?;
    if let Some(x) = v {
        if !(x > 0.0) {
            return Err(IoError::field(&format!("{prefix}{key}"), format!("must be positive, found {x}")));
        }
    }
    Ok(v)
}

fn get_uint(table: &Table, prefix: &str, key: &str) -> Result<Option<u64>, IoError> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Integer(v)) if *v >= 0 => Ok(Some(*v as u64)),
        Some(other) => {
            Err(IoError::field(&format!("{prefix}{key}"), format!("expected a non-negative integer, found {other}")))
        }
    }
}

fn get_u32(table: &Table, prefix: &str, key: &str) -> Result<Option<u32>, IoError> {
    get_uint(table, prefix, key)?
        .map(|v| u32::try_from(v).map_err(|_| IoError::field(&format!("{prefix}{key}"), "value too large")))
        .transpose()
}

fn get_bool(table: &Table, prefix: &str, key: &str) -> Result<Option<bool>, IoError> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Boolean(b)) => Ok(Some(*b)),
        Some(other) => Err(IoError::field(&format!("{prefix}{key}"), format!("expected true or false, found {other}"))),
    }
}

fn get_table<'a>(table: &'a Table, key: &str) -> Result<Option<&'a Table>, IoError> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(other) => Err(IoError::field(key, format!("expected a table, found {other}"))),
    }
}

fn get_boundary(table: &Table, key: &str) -> Result<BoundaryParam, IoError> {
    match table.get(key) {
        None => Err(IoError::field(key, "missing (a number or \"inf\")")),
        Some(Value::String(s)) if s.trim().eq_ignore_ascii_case("inf") => Ok(BoundaryParam::Dirichlet),
        Some(Value::Float(v)) if v.is_infinite() && *v > 0.0 => Ok(BoundaryParam::Dirichlet),
        Some(_) => Ok(BoundaryParam::Finite(get_f64(table, "", key)?.expect("present"))),
    }
}

fn get_rational(table: &Table, key: &str) -> Result<Option<Rational>, IoError> {
    let text = match table.get(key) {
        None => return Ok(None),
        Some(Value::String(s)) => s.clone(),
        Some(other) => return Err(IoError::field(key, format!("expected a rational \"p/r\", found {other}"))),
    };
    let r: Rational = text.parse().map_err(|e: SolverError| IoError::field(key, e.to_string()))?;
    if !r.in_open_unit_interval() {
        return Err(IoError::field(key, format!("{r} must lie in (0, 1)")));
    }
    Ok(Some(r))
}

fn parse_n_list(table: &Table) -> Result<Vec<u32>, IoError> {
    let as_u32 = |field: &str, v: &Value| -> Result<u32, IoError> {
        match v {
            Value::Integer(i) if *i >= 1 && *i <= u32::MAX as i64 => Ok(*i as u32),
            other => Err(IoError::field(field, format!("expected a positive integer, found {other}"))),
        }
    };
    let mut ns = match (table.get("n_list"), table.get("n_range")) {
        (Some(_), Some(_)) => return Err(IoError::field("n_range", "give either n_list or n_range, not both")),
        (None, None) => return Err(IoError::field("n_list", "missing (or give n_range)")),
        (Some(Value::Array(items)), None) => {
            items.iter().map(|v| as_u32("n_list", v)).collect::<Result<Vec<_>, _>>()?
        }
        (Some(other), None) => return Err(IoError::field("n_list", format!("expected an array, found {other}"))),
        (None, Some(Value::Array(items))) => {
            let vals = items.iter().map(|v| as_u32("n_range", v)).collect::<Result<Vec<_>, _>>()?;
            let (lo, hi, step) = match vals.as_slice() {
                [lo, hi] => (*lo, *hi, 1),
                [lo, hi, step] => (*lo, *hi, *step),
                _ => return Err(IoError::field("n_range", "expected [first, last] or [first, last, step]")),
            };
            if lo > hi {
                return Err(IoError::field("n_range", format!("first index {lo} exceeds last index {hi}")));
            }
            (lo..=hi).step_by(step as usize).collect()
        }
        (None, Some(other)) => return Err(IoError::field("n_range", format!("expected an array, found {other}"))),
    };
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(IoError::field("n_list", "no indices"));
    }
    Ok(ns)
}

impl ProblemConfig {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_toml_str(&read_file(path)?)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, IoError> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| IoError::ConfigSyntax(e.to_string()))?;
        check_keys(&table, "", TOP_KEYS)?;

        let q = match table.get("q") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Integer(i)) => i.to_string(),
            Some(Value::Float(f)) => f.to_string(),
            Some(other) => return Err(IoError::field("q", format!("expected an expression string, found {other}"))),
            None => return Err(IoError::field("q", "missing")),
        };
        parse_expression(&q).map_err(|e| IoError::field("q", e.to_string()))?;

        let h = get_boundary(&table, "h")?;
        let big_h = get_boundary(&table, "H")?;
        if h.is_dirichlet() && big_h.is_dirichlet() {
            return Err(IoError::field("H", "h and H cannot both be \"inf\""));
        }
        // γ and ξ of a Dirichlet side never enter the problem; they may be omitted
        let side = |g: &str, xi: &str, dirichlet: bool| -> Result<(f64, Rational), IoError> {
            let gamma = get_f64(&table, "", g)?;
            let point = get_rational(&table, xi)?;
            match (gamma, point) {
                (Some(gv), Some(pv)) => Ok((gv, pv)),
                _ if dirichlet => Ok((gamma.unwrap_or(0.0), point.unwrap_or(Rational::new(1, 2).expect("1/2")))),
                (None, _) => Err(IoError::field(g, "missing")),
                (_, None) => Err(IoError::field(xi, "missing")),
            }
        };
        let (gamma0, xi0) = side("gamma0", "xi0", h.is_dirichlet())?;
        let (gamma1, xi1) = side("gamma1", "xi1", big_h.is_dirichlet())?;

        let mut solver = SolverConfig::default();
        if let Some(n_min) = get_u32(&table, "", "n_min")? {
            solver.n_min = n_min;
        }
        if let Some(g) = get_bool(&table, "", "global_scan")? {
            solver.global_scan = g;
        }
        if let Some(t) = get_table(&table, "tolerances")? {
            let p = "tolerances.";
            check_keys(t, p, &["root", "node", "wronskian", "h_max", "osc_c"])?;
            solver.root_tol = get_positive(t, p, "root")?.unwrap_or(solver.root_tol);
            solver.node_tol = get_positive(t, p, "node")?.unwrap_or(solver.node_tol);
            let r = &mut solver.resolution;
            r.wronskian_tol = get_positive(t, p, "wronskian")?.unwrap_or(r.wronskian_tol);
            r.h_max = get_positive(t, p, "h_max")?.unwrap_or(r.h_max);
            r.osc_c = get_positive(t, p, "osc_c")?.unwrap_or(r.osc_c);
        }

        let n_list = parse_n_list(&table)?;
        if let Some(&n) = n_list.iter().find(|&&n| n < solver.n_min) {
            return Err(IoError::field(
                "n_list",
                format!("index {n} is below n_min = {} (outside the asymptotic regime)", solver.n_min),
            ));
        }

        let mut fit = FitConfig::default();
        if let Some(t) = get_table(&table, "fit")? {
            let p = "fit.";
            check_keys(
                t,
                p,
                &["window", "degree", "richardson", "window_fraction", "output_points", "extrapolation_points"],
            )?;
            let as_usize = |v: Option<u64>| v.map(|x| x as usize);
            fit.window = as_usize(get_uint(t, p, "window")?).unwrap_or(fit.window);
            fit.degree = as_usize(get_uint(t, p, "degree")?).unwrap_or(fit.degree);
            fit.richardson = get_bool(t, p, "richardson")?.unwrap_or(fit.richardson);
            fit.window_fraction = get_f64(t, p, "window_fraction")?.unwrap_or(fit.window_fraction);
            fit.output_points = as_usize(get_uint(t, p, "output_points")?).unwrap_or(fit.output_points);
            fit.extrapolation_points =
                as_usize(get_uint(t, p, "extrapolation_points")?).unwrap_or(fit.extrapolation_points);
            if fit.window <= fit.degree {
                return Err(IoError::field("fit.window", "must exceed fit.degree"));
            }
            if fit.output_points < 3 || fit.output_points % 2 == 0 {
                return Err(IoError::field("fit.output_points", "must be odd and at least 3"));
            }
        }

        let mut known = KnownValues::default();
        if let Some(t) = get_table(&table, "known")? {
            check_keys(t, "known.", &["h", "H", "gamma0", "gamma1"])?;
            known.h = get_f64(t, "known.", "h")?;
            known.big_h = get_f64(t, "known.", "H")?;
            known.gamma0 = get_f64(t, "known.", "gamma0")?;
            known.gamma1 = get_f64(t, "known.", "gamma1")?;
        }

        let mut acceptance = Thresholds::default();
        if let Some(t) = get_table(&table, "acceptance")? {
            let p = "acceptance.";
            check_keys(t, p, &["q_sup", "q_l2", "constants", "decreasing"])?;
            acceptance.q_sup = get_positive(t, p, "q_sup")?;
            acceptance.q_l2 = get_positive(t, p, "q_l2")?;
            acceptance.constants = get_positive(t, p, "constants")?;
            acceptance.decreasing = get_bool(t, p, "decreasing")?.unwrap_or(false);
        }

        Ok(Self { q, h, big_h, gamma0, gamma1, xi0, xi1, n_list, solver, fit, known, acceptance })
    }

    pub fn case(&self) -> Case {
        match (self.h, self.big_h) {
            (BoundaryParam::Dirichlet, _) => Case::II,
            (_, BoundaryParam::Dirichlet) => Case::III,
            _ => Case::I,
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec, IoError> {
        let expr = parse_expression(&self.q).map_err(|e| IoError::field("q", e.to_string()))?;
        ProblemSpec::new(Potential::from_expr(expr), self.h, self.big_h, self.gamma0, self.gamma1, self.xi0, self.xi1)
            .map_err(|e| match e {
                SolverError::InvalidProblem(msg) => IoError::field("q", msg),
                other => IoError::Solver(other),
            })
    }

    /// Problem echo for metadata files.
    pub fn echo(&self, problem: &ProblemSpec) -> serde_json::Value {
        json!({
            "q": self.q,
            "q_mean_subtracted": problem.q_mean,
            "h": self.h.to_string(),
            "H": self.big_h.to_string(),
            "gamma0": self.gamma0,
            "gamma1": self.gamma1,
            "xi0": self.xi0,
            "xi1": self.xi1,
            "case": self.case(),
        })
    }
}

/// Formats a float with 17 significant digits (exact for binary64).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Nodes CSV: header `n,j,x,k_n`, sorted by `(n, j)`, LF line endings.
pub fn nodes_csv(dataset: &NodalDataset) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["n", "j", "x", "k_n"]).expect("in-memory write");
    let mut layers: Vec<&NodalLayer> = dataset.layers.iter().collect();
    layers.sort_by_key(|l| l.n);
    for layer in layers {
        let mut nodes: Vec<&NodalPoint> = layer.nodes.iter().collect();
        nodes.sort_by_key(|p| p.j);
        let k = format_f64(layer.k);
        for p in nodes {
            w.write_record([p.n.to_string(), p.j.to_string(), format_f64(p.x), k.clone()]).expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}

/// Reads a nodes CSV; reference positions are filled in for `case`.
pub fn parse_nodes_csv(bytes: &[u8], case: Case) -> Result<NodalDataset, IoError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = r.headers().map_err(|e| IoError::NodesFormat { line: 1, message: e.to_string() })?.clone();
    if headers.iter().collect::<Vec<_>>() != ["n", "j", "x", "k_n"] {
        return Err(IoError::NodesFormat {
            line: 1,
            message: format!("header must be `n,j,x,k_n`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut layers: Vec<NodalLayer> = Vec::new();
    let mut last: Option<(u32, i64)> = None;
    for rec in r.records() {
        let rec = rec
            .map_err(|e| IoError::NodesFormat { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str, text: &str| IoError::NodesFormat { line, message: format!("bad {what} `{text}`") };
        let n: u32 = rec[0].trim().parse().map_err(|_| bad("n", &rec[0]))?;
        let j: i64 = rec[1].trim().parse().map_err(|_| bad("j", &rec[1]))?;
        let x: f64 = rec[2].trim().parse().map_err(|_| bad("x", &rec[2]))?;
        let k: f64 = rec[3].trim().parse().map_err(|_| bad("k_n", &rec[3]))?;
        if !(x > 0.0 && x < 1.0) {
            return Err(IoError::NodesFormat { line, message: format!("x = {x} outside (0, 1)") });
        }
        if !k.is_finite() {
            return Err(IoError::NodesFormat { line, message: format!("k_n = {k} is not finite") });
        }
        if let Some(prev) = last {
            if (n, j) <= prev {
                return Err(IoError::NodesFormat {
                    line,
                    message: format!("(n, j) = ({n}, {j}) is duplicated or out of order"),
                });
            }
        }
        last = Some((n, j));
        let point = NodalPoint { n, j, x, reference: reference_position(case, n, j) };
        match layers.last_mut() {
            Some(l) if l.n == n => {
                if l.k != k {
                    return Err(IoError::NodesFormat { line, message: format!("k_n differs within layer n = {n}") });
                }
                l.nodes.push(point);
            }
            _ => layers.push(NodalLayer { n, k, nodes: vec![point] }),
        }
    }
    Ok(NodalDataset { layers })
}

pub fn read_nodes(path: &Path, case: Case) -> Result<NodalDataset, IoError> {
    let bytes = fs::read(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    parse_nodes_csv(&bytes, case)
}

/// `x,q` CSV of a reconstruction.
pub fn q_csv(x: &[f64], q: &[f64]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["x", "q"]).expect("in-memory write");
    for (a, b) in x.iter().zip(q) {
        w.write_record([format_f64(*a), format_f64(*b)]).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// `path` with `suffix` appended to the file name (`nodes.csv` → `nodes.csv.meta.json`).
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRecord {
    pub n: u32,
    pub k: f64,
    pub lambda: f64,
    pub seed: f64,
    pub residual: f64,
}

impl From<&SpectralPoint> for EigenRecord {
    fn from(sp: &SpectralPoint) -> Self {
        Self { n: sp.n, k: sp.k, lambda: sp.lambda, seed: sp.seed, residual: sp.residual }
    }
}

/// Result of `forward`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub dataset: NodalDataset,
    pub spectra: Vec<SpectralPoint>,
    pub metadata: serde_json::Value,
}

/// Generates the dataset for a config and builds its metadata.
pub fn forward(config: &ProblemConfig) -> Result<ForwardOutput, IoError> {
    let problem = config.problem()?;
    let (dataset, spectra) = generate_dataset(&problem, &config.n_list, &config.solver)?;
    let metadata = json!({
        "tool": "nodalsl",
        "version": TOOL_VERSION,
        "problem": config.echo(&problem),
        "n_list": config.n_list,
        "solver": config.solver,
        "eigenvalues": spectra.iter().map(EigenRecord::from).collect::<Vec<_>>(),
    });
    Ok(ForwardOutput { dataset, spectra, metadata })
}

/// `forward` command: nodes CSV at `out` and `<out>.meta.json`.
pub fn cmd_forward(config_path: &Path, out: &Path) -> Result<ForwardOutput, IoError> {
    let config = ProblemConfig::load(config_path)?;
    let output = forward(&config)?;
    atomic_write(out, &nodes_csv(&output.dataset))?;
    atomic_write(&sidecar_path(out, ".meta.json"), &to_json(&output.metadata))?;
    Ok(output)
}

/// Errors of a reconstruction against a known truth.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ErrorReport {
    pub q_sup: f64,
    pub q_l2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub big_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
}

impl ErrorReport {
    pub fn max_constant_error(&self) -> Option<f64> {
        [self.h, self.big_h, self.gamma0, self.gamma1].into_iter().flatten().reduce(f64::max)
    }
}

/// JSON summary of a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub case: Case,
    pub combo_constants: ComboConstants,
    pub resolved: Option<ResolvedConstants>,
    pub q_mean_subtracted: f64,
    pub errors: Option<ErrorReport>,
    pub layers_used: Vec<u32>,
    pub diagnostics: Diagnostics,
}

impl Summary {
    pub fn new(result: &ReconstructionResult, errors: Option<ErrorReport>) -> Self {
        Self {
            case: result.case,
            combo_constants: result.combo_constants,
            resolved: result.resolved,
            q_mean_subtracted: result.q_mean_subtracted,
            errors,
            layers_used: result.layers_used.clone(),
            diagnostics: result.diagnostics.clone(),
        }
    }
}

/// Inputs of the `inverse` command besides the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseArgs {
    pub case: Case,
    pub xi0: Rational,
    pub xi1: Rational,
    pub known: KnownValues,
    pub fit: FitConfig,
    pub max_m: Option<u32>,
}

pub fn inverse(dataset: &NodalDataset, args: &InverseArgs) -> Result<ReconstructionResult, IoError> {
    let known = args.known.to_known(args.case)?;
    Ok(invert(dataset, args.case, args.xi0, args.xi1, &args.fit, args.max_m, known)?)
}

/// `inverse` command: `x,q` CSV at `out` and the JSON summary at `summary`.
pub fn cmd_inverse(nodes: &Path, args: &InverseArgs, out: &Path, summary: &Path) -> Result<Summary, IoError> {
    let dataset = read_nodes(nodes, args.case)?;
    let result = inverse(&dataset, args)?;
    let s = Summary::new(&result, None);
    atomic_write(out, &q_csv(&result.x, &result.q))?;
    atomic_write(summary, &to_json(&s))?;
    Ok(s)
}

/// Sup and L² error of a reconstruction against the (zero-mean) true `q`.
pub fn q_errors(result: &ReconstructionResult, truth: &Potential) -> Result<(f64, f64), IoError> {
    let diff = result
        .x
        .iter()
        .zip(&result.q)
        .map(|(&x, &q)| Ok(q - truth.eval(x)?))
        .collect::<Result<Vec<f64>, SolverError>>()?;
    let sup = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let sq: Vec<f64> = diff.iter().map(|d| d * d).collect();
    Ok((sup, grid_integral(&result.x, &sq).max(0.0).sqrt()))
}

fn constant_errors(resolved: Option<ResolvedConstants>, problem: &ProblemSpec, report: &mut ErrorReport) {
    let Some(r) = resolved else {
        return;
    };
    let err = |got: Option<f64>, truth: Option<f64>| match (got, truth) {
        (Some(g), Some(t)) => Some((g - t).abs()),
        _ => None,
    };
    report.h = err(r.h, problem.h_left.finite());
    report.big_h = err(r.big_h, problem.h_right.finite());
    report.gamma0 = err(r.gamma0, Some(problem.gamma0));
    report.gamma1 = err(r.gamma1, Some(problem.gamma1));
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerError {
    pub m: u32,
    pub q_sup: f64,
    pub q_l2: f64,
}

/// Report of `roundtrip`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundtripReport {
    #[serde(flatten)]
    pub summary: Summary,
    pub known: KnownValues,
    /// Error when the fit is restricted to layers `<= m`, per admissible `m`.
    pub trend: Vec<LayerError>,
    pub trend_decreasing: bool,
    pub thresholds: Thresholds,
    pub violations: Vec<String>,
    /// Reconstruction from all layers.
    #[serde(skip)]
    pub result: ReconstructionResult,
}

/// Each error at most 20% above its predecessor, and the last below the first.
pub fn decreasing_trend(errors: &[f64]) -> bool {
    let slack = errors.windows(2).all(|w| w[1] <= 1.2 * w[0]);
    match (errors.first(), errors.last()) {
        (Some(a), Some(b)) if errors.len() >= 2 => slack && b < a,
        _ => false,
    }
}

/// Known values named by `names` (`h`, `H`, `gamma0`, `gamma1`, or
/// `name=value`), taking unnamed values from the config's own problem.
/// With no names, the config's `[known]` table is used, and failing that the
/// Robin coefficient(s) of the problem.
pub fn roundtrip_known(config: &ProblemConfig, names: &[String]) -> Result<KnownValues, IoError> {
    let mut known = KnownValues::default();
    if names.is_empty() {
        if !config.known.is_empty() {
            return Ok(config.known);
        }
        known.h = config.h.finite();
        known.big_h = config.big_h.finite();
        return Ok(known);
    }
    for name in names {
        if name.contains('=') {
            known.parse_assignment(name)?;
            continue;
        }
        let value = match name.as_str() {
            "h" => config.h.finite(),
            "H" => config.big_h.finite(),
            "gamma0" => Some(config.gamma0),
            "gamma1" => Some(config.gamma1),
            other => {
                return Err(IoError::Argument(format!("unknown known value `{other}` (use h, H, gamma0 or gamma1)")))
            }
        };
        let value = value.ok_or_else(|| IoError::Argument(format!("`{name}` is infinite in this problem")))?;
        known.set(name, value)?;
    }
    Ok(known)
}

/// Forward-generates the config's dataset, inverts it and compares.
pub fn roundtrip(config: &ProblemConfig, known: KnownValues) -> Result<RoundtripReport, IoError> {
    let problem = config.problem()?;
    let case = config.case();
    let known_k = known.to_known(case)?;
    let modulus = admissible_modulus(case, config.xi0, config.xi1);
    let admissible: Vec<u32> = config.n_list.iter().copied().filter(|&n| u64::from(n) % modulus == 0).collect();
    if admissible.is_empty() {
        return Err(SolverError::NoAdmissibleIndex { modulus }.into());
    }
    let (dataset, _) = generate_dataset(&problem, &admissible, &config.solver)?;
    let layers: Vec<u32> = select_subsequence(&dataset, config.xi0, config.xi1, case)?.iter().map(|l| l.n).collect();

    let mut trend = Vec::with_capacity(layers.len());
    let mut last = None;
    for &m in &layers {
        let result = invert(&dataset, case, config.xi0, config.xi1, &config.fit, Some(m), known_k)?;
        let (q_sup, q_l2) = q_errors(&result, &problem.q)?;
        trend.push(LayerError { m, q_sup, q_l2 });
        last = Some(result);
    }
    let result = last.expect("at least one layer");
    let (q_sup, q_l2) = q_errors(&result, &problem.q)?;
    let mut errors = ErrorReport { q_sup, q_l2, ..Default::default() };
    constant_errors(result.resolved, &problem, &mut errors);
    let sups: Vec<f64> = trend.iter().map(|t| t.q_sup).collect();
    let trend_decreasing = decreasing_trend(&sups);

    let t = config.acceptance;
    let mut violations = Vec::new();
    if let Some(lim) = t.q_sup {
        if !(q_sup <= lim) {
            violations.push(format!("q sup error {q_sup:e} > {lim:e}"));
        }
    }
    if let Some(lim) = t.q_l2 {
        if !(q_l2 <= lim) {
            violations.push(format!("q L2 error {q_l2:e} > {lim:e}"));
        }
    }
    if let Some(lim) = t.constants {
        match errors.max_constant_error() {
            Some(e) if e <= lim => {}
            Some(e) => violations.push(format!("constant error {e:e} > {lim:e}")),
            None => violations.push("no constants resolved (supply known values)".into()),
        }
    }
    if t.decreasing && !trend_decreasing {
        violations.push("q sup error does not decrease across layers".into());
    }

    Ok(RoundtripReport {
        summary: Summary::new(&result, Some(errors)),
        known,
        trend,
        trend_decreasing,
        thresholds: t,
        violations,
        result,
    })
}

/// `roundtrip` command. The report is written even when thresholds fail;
/// the error is returned afterwards.
pub fn cmd_roundtrip(
    config_path: &Path,
    known_names: &[String],
    report_path: &Path,
    q_out: Option<&Path>,
) -> Result<RoundtripReport, IoError> {
    let config = ProblemConfig::load(config_path)?;
    let known = roundtrip_known(&config, known_names)?;
    let report = roundtrip(&config, known)?;
    atomic_write(report_path, &to_json(&report))?;
    if let Some(path) = q_out {
        atomic_write(path, &q_csv(&report.result.x, &report.result.q))?;
    }
    if report.violations.is_empty() {
        Ok(report)
    } else {
        Err(IoError::Acceptance(report.violations.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymRow {
    pub n: u32,
    pub k: f64,
    pub seed: f64,
    /// `n · |k_n − seed|`.
    pub seed_gap: f64,
    /// `max_j |scale · (x_j − ρ_j) − F(x_j)|` with the asymptotic `F`.
    pub node_residual: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymReport {
    pub case: Case,
    pub rows: Vec<AsymRow>,
    /// `seed_gap` non-increasing from the second index on.
    pub seed_gap_decreasing: bool,
    /// `node_residual` non-increasing over all indices.
    pub node_residual_decreasing: bool,
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

pub fn asym_check(config: &ProblemConfig) -> Result<AsymReport, IoError> {
    let problem = config.problem()?;
    let case = config.case();
    let (dataset, spectra) = generate_dataset(&problem, &config.n_list, &config.solver)?;
    let mut rows = Vec::with_capacity(spectra.len());
    for (layer, sp) in dataset.layers.iter().zip(&spectra) {
        let scale = residual_scale(case, layer.n);
        let mut worst = 0.0f64;
        for p in &layer.nodes {
            let f = asymptotic_nodal_residual(&problem, layer.n, p.x)?;
            worst = worst.max((scale * (p.x - p.reference) - f).abs());
        }
        rows.push(AsymRow {
            n: sp.n,
            k: sp.k,
            seed: sp.seed,
            seed_gap: sp.n as f64 * (sp.k - sp.seed).abs(),
            node_residual: worst,
            nodes: layer.nodes.len(),
        });
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.seed_gap).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.node_residual).collect();
    Ok(AsymReport {
        case,
        seed_gap_decreasing: non_increasing(gaps.get(1..).unwrap_or(&[])),
        node_residual_decreasing: non_increasing(&res),
        rows,
    })
}

pub fn cmd_asym_check(config_path: &Path, report_path: &Path) -> Result<AsymReport, IoError> {
    let config = ProblemConfig::load(config_path)?;
    let report = asym_check(&config)?;
    atomic_write(report_path, &to_json(&report))?;
    Ok(report)
}
