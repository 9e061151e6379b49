//! Batch front-end: configuration files, experiments and artifacts.
//!
//! A configuration is a sequence of `key = value` lines; `#` starts a comment.
//! Values are numbers, bare words, quoted strings, or bracketed lists of
//! numbers or `(amp, freq, phase)` tuples.
//!
//! ```text
//! symbol.kind        = quasiperiodic            # constant | quasiperiodic | sampled_table
//! symbol.b.mean      = 1.5
//! symbol.b.terms     = [(0.5, 1.0, 0.0)]        # b(t) = mean + Σ amp·cos(freq·t + phase)
//! symbol.omega.mean  = 0.0
//! symbol.omega.terms = []
//! # sampled_table instead uses symbol.table.start, symbol.table.step,
//! # symbol.b.values = [...] and symbol.omega.values = [...]
//!
//! grid.n     = 199
//! dt         = 1e-3
//! scheme     = implicit_euler                   # or crank_nicolson
//! policy     = "sign(beta=0.0)"                 # ignite(t0=1.5) | reg(eps=1e-2)
//! experiment = simulate                         # xi-m | section | equilibria | verify | cocycle | uniform
//! out        = results
//! seed       = 0
//! initial    = "sine(amp=1.0)"                  # zero | bump(amp=1, center=0.5, width=0.2) | random
//!
//! time.start = 0.0
//! time.end   = 2.0                              # required by simulate
//! output.every = 10                             # steps between recorded rows (0: about 100 rows)
//!
//! attractor.t      = 0.0
//! attractor.t_pull = 8.0
//! attractor.ages   = [0.1, 0.25, 0.5, 1.0, 2.0]
//! xi.times         = [0.0]
//!
//! hull.samples  = 8
//! hull.window   = 6.283185307179586             # default: longest period, or 8
//! hull.strategy = lattice                       # or torus
//! window.t_back = 8.0
//! window.t_fwd  = 8.0
//! window.ignitions = [-6.0, -4.0, -2.0, 0.0]
//!
//! cocycle.t = 0.5                               # required by cocycle
//! cocycle.s = 0.25                              # required by cocycle
//! cocycle.h = 0.5
//! ```
//!
//! Every run writes `fields.csv` (`t,x,u`, time-major, 17 significant digits)
//! and `manifest.json` (resolved config, version and flat diagnostics); some
//! experiments add a second CSV. Files are written to a temporary name and
//! renamed into place.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::attractor;
use crate::coefficients::{hull_sample, HullStrategy, Profile, Series, Symbol, Term};
use crate::error::Error;
use crate::fdsolver::{self, Discretization, Scheme, DEFAULT_DT, DEFAULT_NODES};
use crate::grid::{Field, Grid};
use crate::selections::SelectionPolicy;
use crate::skewflow::{self, GradientSettings};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Simulate,
    XiM,
    Section,
    Equilibria,
    Verify,
    Cocycle,
    Uniform,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Simulate,
        Experiment::XiM,
        Experiment::Section,
        Experiment::Equilibria,
        Experiment::Verify,
        Experiment::Cocycle,
        Experiment::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::XiM => "xi-m",
            Experiment::Section => "section",
            Experiment::Equilibria => "equilibria",
            Experiment::Verify => "verify",
            Experiment::Cocycle => "cocycle",
            Experiment::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: {message}")]
    Config { origin: String, message: String },
    #[error("{origin}: missing required key `{key}`")]
    MissingKey { origin: String, key: String },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Library(#[from] Error),
}

impl CliError {
    fn config(origin: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            origin: origin.to_string(),
            message: message.into(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// `(file name, contents)` pairs.
pub type Artifacts = Vec<(String, String)>;

const KNOWN_KEYS: &[&str] = &[
    "symbol.kind",
    "symbol.b.mean",
    "symbol.b.terms",
    "symbol.b.values",
    "symbol.omega.mean",
    "symbol.omega.terms",
    "symbol.omega.values",
    "symbol.table.start",
    "symbol.table.step",
    "grid.n",
    "dt",
    "scheme",
    "policy",
    "experiment",
    "out",
    "seed",
    "initial",
    "time.start",
    "time.end",
    "output.every",
    "attractor.t",
    "attractor.t_pull",
    "attractor.ages",
    "xi.times",
    "hull.samples",
    "hull.window",
    "hull.strategy",
    "window.t_back",
    "window.t_fwd",
    "window.ignitions",
    "cocycle.t",
    "cocycle.s",
    "cocycle.h",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    origin: String,
}

/// Key/value pairs as written, before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    source: String,
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    /// Parses configuration text; `source` names it in error messages.
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let mut cfg = RawConfig {
            source: source.to_string(),
            entries: BTreeMap::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let origin = format!("{source}:{}", i + 1);
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            cfg.insert(line, origin)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies a `key=value` override; `index` numbers it in error messages.
    pub fn set(&mut self, assignment: &str, index: usize) -> CliResult<()> {
        self.insert(assignment.trim(), format!("--set #{index}"))
    }

    fn insert(&mut self, line: &str, origin: String) -> CliResult<()> {
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(&origin, format!("expected `key = value`, found `{line}`"))
        })?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::config(&origin, format!("unknown key `{key}`")));
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(CliError::config(
                &origin,
                format!("empty value for `{key}`"),
            ));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin,
            },
        );
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn missing(&self, key: &str) -> CliError {
        CliError::MissingKey {
            origin: self.source.clone(),
            key: key.to_string(),
        }
    }

    fn origin(&self, key: &str) -> String {
        self.entries
            .get(key)
            .map_or_else(|| self.source.clone(), |e| e.origin.clone())
    }

    fn invalid(&self, key: &str, message: impl fmt::Display) -> CliError {
        CliError::config(
            &self.origin(key),
            format!("invalid value for `{key}`: {message}"),
        )
    }

    fn string(&self, key: &str) -> Option<String> {
        self.get(key).map(|v| unquote(v).to_string())
    }

    fn number(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key)
            .map(|v| parse_number(unquote(v)).map_err(|m| self.invalid(key, m)))
            .transpose()
    }

    fn number_or(&self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn required_number(&self, key: &str) -> CliResult<f64> {
        self.number(key)?.ok_or_else(|| self.missing(key))
    }

    fn count_or(&self, key: &str, default: u64) -> CliResult<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => unquote(v).parse::<u64>().map_err(|e| self.invalid(key, e)),
        }
    }

    fn numbers(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                list_items(v)
                    .and_then(|items| items.iter().map(|s| parse_number(s)).collect())
                    .map_err(|m| self.invalid(key, m))
            })
            .transpose()
    }

    fn terms(&self, key: &str) -> CliResult<Vec<Term>> {
        let Some(v) = self.get(key) else {
            return Ok(Vec::new());
        };
        let parse = || -> Result<Vec<Term>, String> {
            list_items(v)?
                .iter()
                .map(|item| {
                    let inner = item
                        .strip_prefix('(')
                        .and_then(|s| s.strip_suffix(')'))
                        .ok_or_else(|| format!("expected `(amp, freq, phase)`, found `{item}`"))?;
                    let parts: Vec<f64> = inner
                        .split(',')
                        .map(|p| parse_number(p.trim()))
                        .collect::<Result<_, _>>()?;
                    match parts[..] {
                        [a, f, p] => Ok(Term::new(a, f, p)),
                        _ => Err(format!("expected three numbers in `{item}`")),
                    }
                })
                .collect()
        };
        parse().map_err(|m| self.invalid(key, m))
    }

    /// Interprets the entries, filling defaults and checking experiment requirements.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let symbol = self.symbol()?;
        let nodes = self.count_or("grid.n", DEFAULT_NODES as u64)? as usize;
        let dt = self.number_or("dt", DEFAULT_DT)?;
        let scheme = match self.string("scheme").as_deref() {
            None | Some("implicit_euler") => Scheme::ImplicitEuler,
            Some("crank_nicolson") => Scheme::CrankNicolson,
            Some(other) => return Err(self.invalid("scheme", format!("unknown scheme `{other}`"))),
        };
        Grid::new(nodes).map_err(|e| self.invalid("grid.n", e))?;
        let disc = Discretization::new(nodes, dt)
            .map(|d| d.with_scheme(scheme))
            .map_err(|e| self.invalid("dt", e))?;
        disc.check_symbol(&symbol)
            .map_err(|e| self.invalid("dt", e))?;

        let policy = match self.get("policy") {
            None => SelectionPolicy::sign(0.0),
            Some(v) => v.parse().map_err(|e| self.invalid("policy", e))?,
        };
        let experiment: Experiment = match self.string("experiment") {
            None => return Err(self.missing("experiment")),
            Some(v) => v.parse().map_err(|e| self.invalid("experiment", e))?,
        };
        let initial = match self.get("initial") {
            None => InitialData::Sine { amp: 1.0 },
            Some(v) => v.parse().map_err(|e| self.invalid("initial", e))?,
        };

        let t_start = self.number_or("time.start", 0.0)?;
        let t_end = match experiment {
            Experiment::Simulate => self.required_number("time.end")?,
            _ => self.number_or("time.end", t_start + 1.0)?,
        };
        let (cocycle_t, cocycle_s) = match experiment {
            Experiment::Cocycle => (
                self.required_number("cocycle.t")?,
                self.required_number("cocycle.s")?,
            ),
            _ => (
                self.number_or("cocycle.t", 0.5)?,
                self.number_or("cocycle.s", 0.25)?,
            ),
        };

        let hull_window = match self.number("hull.window")? {
            Some(w) => w,
            None => default_window(&symbol),
        };
        let hull_strategy = match self.string("hull.strategy").as_deref() {
            None | Some("lattice") => HullStrategy::LatticeShifts {
                window: hull_window,
                dt,
            },
            Some("torus") => HullStrategy::TorusPhases,
            Some(other) => {
                return Err(self.invalid("hull.strategy", format!("unknown strategy `{other}`")))
            }
        };

        let cfg = RunConfig {
            symbol,
            disc,
            policy,
            experiment,
            out: self.string("out").map(PathBuf::from),
            seed: self.count_or("seed", 0)?,
            initial,
            t_start,
            t_end,
            record_every: self.count_or("output.every", 0)? as usize,
            section_t: self.number_or("attractor.t", 0.0)?,
            t_pull: self.number_or("attractor.t_pull", 8.0)?,
            ages: self
                .numbers("attractor.ages")?
                .unwrap_or_else(|| vec![0.1, 0.25, 0.5, 1.0, 2.0]),
            xi_times: self.numbers("xi.times")?.unwrap_or_else(|| vec![0.0]),
            hull_samples: self.count_or("hull.samples", 8)? as usize,
            hull_window,
            hull_strategy,
            t_back: self.number_or("window.t_back", 8.0)?,
            t_fwd: self.number_or("window.t_fwd", 8.0)?,
            ignitions: self
                .numbers("window.ignitions")?
                .unwrap_or_else(|| vec![-6.0, -4.0, -2.0, 0.0]),
            cocycle_t,
            cocycle_s,
            cocycle_h: self.number_or("cocycle.h", 0.5)?,
        };
        cfg.check().map_err(|(key, m)| self.invalid(key, m))?;
        Ok(cfg)
    }

    fn symbol(&self) -> CliResult<Symbol> {
        let kind = self
            .string("symbol.kind")
            .ok_or_else(|| self.missing("symbol.kind"))?;
        let built = match kind.as_str() {
            "constant" => {
                for key in ["symbol.b.terms", "symbol.omega.terms"] {
                    if self.get(key).is_some() {
                        return Err(self.invalid(key, "constant symbols take no terms"));
                    }
                }
                Symbol::constant(
                    self.required_number("symbol.b.mean")?,
                    self.number_or("symbol.omega.mean", 0.0)?,
                )
            }
            "quasiperiodic" => Symbol::quasiperiodic(
                Series::new(
                    self.required_number("symbol.b.mean")?,
                    self.terms("symbol.b.terms")?,
                ),
                Series::new(
                    self.number_or("symbol.omega.mean", 0.0)?,
                    self.terms("symbol.omega.terms")?,
                ),
            ),
            "sampled_table" => {
                let b = self
                    .numbers("symbol.b.values")?
                    .ok_or_else(|| self.missing("symbol.b.values"))?;
                let omega = self
                    .numbers("symbol.omega.values")?
                    .ok_or_else(|| self.missing("symbol.omega.values"))?;
                Symbol::sampled_table(
                    self.required_number("symbol.table.start")?,
                    self.required_number("symbol.table.step")?,
                    b,
                    omega,
                )
            }
            other => return Err(self.invalid("symbol.kind", format!("unknown kind `{other}`"))),
        };
        built.map_err(|e| self.invalid(self.culprit(), e))
    }

    /// The symbol key most likely responsible for a rejected bound.
    fn culprit(&self) -> &'static str {
        let range = |mean: &str, terms: &str| -> Option<(f64, f64)> {
            let m = parse_number(unquote(self.get(mean)?)).ok()?;
            let spread: f64 = self
                .terms(terms)
                .ok()?
                .iter()
                .map(|t| t.amplitude.abs())
                .sum();
            Some((m - spread, m + spread))
        };
        match (
            range("symbol.b.mean", "symbol.b.terms"),
            range("symbol.omega.mean", "symbol.omega.terms"),
        ) {
            (Some((lo, _)), _) if !(lo > 0.0) => {
                if self.get("symbol.b.terms").is_some() {
                    "symbol.b.terms"
                } else {
                    "symbol.b.mean"
                }
            }
            (_, Some((lo, hi))) if !(lo >= 0.0 && hi < crate::PI_SQUARED) => {
                if self.get("symbol.omega.terms").is_some() {
                    "symbol.omega.terms"
                } else {
                    "symbol.omega.mean"
                }
            }
            _ => "symbol.kind",
        }
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    v.strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(v)
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

/// Splits `[a, (b, c), d]` at top-level commas.
fn list_items(v: &str) -> Result<Vec<String>, String> {
    let inner = v
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| format!("expected a bracketed list, found `{v}`"))?;
    let mut items = Vec::new();
    let (mut depth, mut current) = (0i32, String::new());
    for c in inner.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                items.push(std::mem::take(&mut current).trim().to_string());
                continue;
            }
            _ => {}
        }
        if depth < 0 {
            return Err("unbalanced parentheses".into());
        }
        current.push(c);
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    let last = current.trim();
    if !last.is_empty() {
        items.push(last.to_string());
    } else if !items.is_empty() {
        return Err("trailing comma".into());
    }
    Ok(items)
}

/// `name(k=v, ...)` or a bare `name`.
fn parse_call(s: &str) -> Result<(String, BTreeMap<String, f64>), String> {
    let s = unquote(s);
    let Some((name, rest)) = s.split_once('(') else {
        return Ok((s.to_string(), BTreeMap::new()));
    };
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| format!("missing `)` in `{s}`"))?;
    let mut map = BTreeMap::new();
    for arg in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| format!("expected `key=value`, found `{arg}`"))?;
        map.insert(k.trim().to_string(), parse_number(v)?);
    }
    Ok((name.trim().to_string(), map))
}

/// Longest period among the symbol's frequencies, or 8 when it has none.
fn default_window(symbol: &Symbol) -> f64 {
    match symbol.profile() {
        Profile::Quasiperiodic { b, omega } => b
            .terms
            .iter()
            .chain(&omega.terms)
            .filter(|t| t.frequency != 0.0)
            .map(|t| 2.0 * std::f64::consts::PI / t.frequency.abs())
            .fold(None, |acc: Option<f64>, p| {
                Some(acc.map_or(p, |a| a.max(p)))
            })
            .unwrap_or(8.0),
        _ => 8.0,
    }
}

/// Initial field for `simulate` and the random probe data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    Zero,
    /// `amp · sin(πx)`.
    Sine {
        amp: f64,
    },
    /// Hat function of half-width `width` centred at `center`.
    Bump {
        amp: f64,
        center: f64,
        width: f64,
    },
    /// Seeded [`Field::random_nonnegative`].
    Random,
}

impl InitialData {
    pub fn field(&self, grid: Grid, seed: u64) -> Field {
        match *self {
            InitialData::Zero => Field::zeros(grid),
            InitialData::Sine { amp } => {
                Field::from_fn(grid, |x| amp * (std::f64::consts::PI * x).sin())
            }
            InitialData::Bump { amp, center, width } => {
                Field::from_fn(grid, |x| amp * (1.0 - (x - center).abs() / width).max(0.0))
            }
            InitialData::Random => {
                Field::random_nonnegative(grid, &mut ChaCha8Rng::seed_from_u64(seed))
            }
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Zero => write!(f, "zero"),
            InitialData::Sine { amp } => write!(f, "sine(amp={amp:?})"),
            InitialData::Bump { amp, center, width } => {
                write!(f, "bump(amp={amp:?}, center={center:?}, width={width:?})")
            }
            InitialData::Random => write!(f, "random"),
        }
    }
}

impl FromStr for InitialData {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, args) = parse_call(s)?;
        let arg = |k: &str, default: f64| args.get(k).copied().unwrap_or(default);
        let allowed: &[&str] = match name.as_str() {
            "zero" | "random" => &[],
            "sine" => &["amp"],
            "bump" => &["amp", "center", "width"],
            _ => return Err(format!("unknown initial data `{name}`")),
        };
        if let Some(k) = args.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("`{name}` takes no argument `{k}`"));
        }
        let data = match name.as_str() {
            "zero" => InitialData::Zero,
            "random" => InitialData::Random,
            "sine" => InitialData::Sine {
                amp: arg("amp", 1.0),
            },
            _ => InitialData::Bump {
                amp: arg("amp", 1.0),
                center: arg("center", 0.5),
                width: arg("width", 0.2),
            },
        };
        match data {
            InitialData::Bump { width, .. } if !(width > 0.0) => {
                Err("bump width must be positive".into())
            }
            _ => Ok(data),
        }
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub symbol: Symbol,
    pub disc: Discretization,
    pub policy: SelectionPolicy,
    pub experiment: Experiment,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub initial: InitialData,
    pub t_start: f64,
    pub t_end: f64,
    /// Steps between recorded rows; 0 picks about 100 rows.
    pub record_every: usize,
    pub section_t: f64,
    pub t_pull: f64,
    pub ages: Vec<f64>,
    pub xi_times: Vec<f64>,
    pub hull_samples: usize,
    pub hull_window: f64,
    pub hull_strategy: HullStrategy,
    pub t_back: f64,
    pub t_fwd: f64,
    pub ignitions: Vec<f64>,
    pub cocycle_t: f64,
    pub cocycle_s: f64,
    pub cocycle_h: f64,
}

impl RunConfig {
    fn check(&self) -> Result<(), (&'static str, String)> {
        let aligned = |key: &'static str, t: f64| {
            self.disc
                .step_index(t)
                .map(|_| ())
                .map_err(|e| (key, e.to_string()))
        };
        aligned("time.start", self.t_start)?;
        aligned("time.end", self.t_end)?;
        if !(self.t_start < self.t_end) {
            return Err((
                "time.end",
                format!("must exceed time.start = {}", self.t_start),
            ));
        }
        aligned("attractor.t", self.section_t)?;
        if !(self.t_pull > 0.0) {
            return Err(("attractor.t_pull", "must be positive".into()));
        }
        aligned("attractor.t_pull", self.t_pull)?;
        if let Some(a) = self.ages.iter().find(|&&a| !(a >= 0.0)) {
            return Err(("attractor.ages", format!("age {a} is negative")));
        }
        for &t in &self.xi_times {
            aligned("xi.times", t)?;
        }
        if self.hull_samples == 0 {
            return Err(("hull.samples", "must be at least 1".into()));
        }
        if !(self.hull_window > 0.0) {
            return Err(("hull.window", "must be positive".into()));
        }
        if !(self.t_back > 0.0 && self.t_fwd > 0.0) {
            return Err(("window.t_back", "window lengths must be positive".into()));
        }
        if let Some(t) = self
            .ignitions
            .iter()
            .find(|&&t| !(t >= -self.t_back && t < self.t_fwd))
        {
            return Err((
                "window.ignitions",
                format!("ignition {t} outside [-t_back, t_fwd)"),
            ));
        }
        if self.cocycle_t < 0.0 || self.cocycle_s < 0.0 {
            return Err(("cocycle.t", "cocycle times must be nonnegative".into()));
        }
        aligned("cocycle.t", self.cocycle_t)?;
        aligned("cocycle.s", self.cocycle_s)?;
        aligned("cocycle.h", self.cocycle_h)?;
        Ok(())
    }

    /// Every setting with defaults filled in, as written in a config file.
    pub fn resolved(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        let terms = |s: &Series| -> Value {
            s.terms
                .iter()
                .map(|t| json!([t.amplitude, t.frequency, t.phase]))
                .collect()
        };
        match self.symbol.profile() {
            Profile::Constant { b, omega } => {
                put("symbol.kind", json!("constant"));
                put("symbol.b.mean", json!(b));
                put("symbol.omega.mean", json!(omega));
            }
            Profile::Quasiperiodic { b, omega } => {
                put("symbol.kind", json!("quasiperiodic"));
                put("symbol.b.mean", json!(b.mean));
                put("symbol.b.terms", terms(b));
                put("symbol.omega.mean", json!(omega.mean));
                put("symbol.omega.terms", terms(omega));
            }
            Profile::SampledTable(table) => {
                put("symbol.kind", json!("sampled_table"));
                put("symbol.table.start", json!(table.start));
                put("symbol.table.step", json!(table.step));
                put("symbol.b.values", json!(table.b));
                put("symbol.omega.values", json!(table.omega));
            }
        }
        put("symbol.shift", json!(self.symbol.shift()));
        put("grid.n", json!(self.disc.grid.len()));
        put("dt", json!(self.disc.dt));
        put(
            "scheme",
            json!(match self.disc.scheme {
                Scheme::ImplicitEuler => "implicit_euler",
                Scheme::CrankNicolson => "crank_nicolson",
            }),
        );
        put("policy", json!(self.policy.to_string()));
        put("experiment", json!(self.experiment.name()));
        put(
            "out",
            json!(self.out.as_ref().map(|p| p.display().to_string())),
        );
        put("seed", json!(self.seed));
        put("initial", json!(self.initial.to_string()));
        put("time.start", json!(self.t_start));
        put("time.end", json!(self.t_end));
        put("output.every", json!(self.record_every));
        put("attractor.t", json!(self.section_t));
        put("attractor.t_pull", json!(self.t_pull));
        put("attractor.ages", json!(self.ages));
        put("xi.times", json!(self.xi_times));
        put("hull.samples", json!(self.hull_samples));
        put("hull.window", json!(self.hull_window));
        put(
            "hull.strategy",
            json!(match self.hull_strategy {
                HullStrategy::TorusPhases => "torus",
                _ => "lattice",
            }),
        );
        put("window.t_back", json!(self.t_back));
        put("window.t_fwd", json!(self.t_fwd));
        put("window.ignitions", json!(self.ignitions));
        put("cocycle.t", json!(self.cocycle_t));
        put("cocycle.s", json!(self.cocycle_s));
        put("cocycle.h", json!(self.cocycle_h));
        m
    }

    fn probe_data(&self, count: usize) -> Vec<Field> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..count)
            .map(|_| Field::random_nonnegative(self.disc.grid, &mut rng))
            .collect()
    }
}

/// One line of the `verify` report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: String,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status} {}: measured={:.6e} bound={}",
            self.name, self.measured, self.bound
        )
    }
}

/// Everything a run produced, before it is written anywhere.
#[derive(Debug, Clone)]
pub struct Report {
    pub config: RunConfig,
    /// `(file name, contents)`; always starts with `fields.csv`.
    pub files: Artifacts,
    pub diagnostics: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn manifest(&self) -> String {
        let value = json!({
            "version": VERSION,
            "config": self.config.resolved(),
            "diagnostics": self.diagnostics,
        });
        let mut s = serde_json::to_string_pretty(&value).expect("manifest is plain JSON");
        s.push('\n');
        s
    }

    /// Writes every CSV and `manifest.json` into `dir`, each via a rename.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest = self.manifest();
        let all = self
            .files
            .iter()
            .map(|(n, c)| (n.as_str(), c.as_str()))
            .chain([("manifest.json", manifest.as_str())]);
        for (name, contents) in all {
            let target = dir.join(name);
            let tmp = dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, contents).map_err(io_err(&tmp))?;
            fs::rename(&tmp, &target).map_err(io_err(&target))?;
        }
        Ok(())
    }
}

/// `t,x,u` rows, time-major.
pub fn fields_csv<'a>(rows: impl IntoIterator<Item = (f64, &'a Field)>) -> String {
    labelled_csv("t", rows)
}

fn labelled_csv<'a>(label: &str, rows: impl IntoIterator<Item = (f64, &'a Field)>) -> String {
    let mut s = format!("{label},x,u\n");
    for (t, u) in rows {
        for (x, v) in u.grid().nodes().zip(u.values()) {
            writeln!(s, "{t:.16e},{x:.16e},{v:.16e}").expect("writing to a String");
        }
    }
    s
}

struct Diagnostics(BTreeMap<String, Value>);

impl Diagnostics {
    fn put(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.0.insert(key.into(), value.into());
    }
}

/// Runs the configured experiment without touching the file system.
pub fn execute(config: &RunConfig) -> CliResult<Report> {
    let mut diag = Diagnostics(BTreeMap::new());
    let mut checks = Vec::new();
    let files = match config.experiment {
        Experiment::Simulate => simulate(config, &mut diag)?,
        Experiment::XiM => xi_m(config, &mut diag)?,
        Experiment::Section => section(config, &mut diag)?,
        Experiment::Equilibria => equilibria(config, &mut diag)?,
        Experiment::Verify => {
            let (files, found) = verify(config, &mut diag)?;
            checks = found;
            files
        }
        Experiment::Cocycle => cocycle(config, &mut diag)?,
        Experiment::Uniform => uniform(config, &mut diag)?,
    };
    Ok(Report {
        config: config.clone(),
        files,
        diagnostics: diag.0,
        checks,
    })
}

/// Runs the experiment and writes its artifacts to `config.out`, if set.
pub fn run(config: &RunConfig) -> CliResult<Report> {
    let report = execute(config)?;
    if let Some(dir) = &config.out {
        report.write(dir)?;
    }
    Ok(report)
}

fn stride(config: &RunConfig, steps: usize) -> usize {
    if config.record_every > 0 {
        config.record_every
    } else {
        (steps / 100).max(1)
    }
}

fn recorded_rows(traj: &fdsolver::Trajectory, every: usize) -> Vec<(f64, &Field)> {
    let last = traj.steps();
    (0..=last)
        .filter(|&n| n % every == 0 || n == last)
        .map(|n| (traj.time(n), &traj.states[n]))
        .collect()
}

fn simulate(cfg: &RunConfig, diag: &mut Diagnostics) -> CliResult<Artifacts> {
    let u0 = cfg.initial.field(cfg.disc.grid, cfg.seed);
    let traj = fdsolver::solve(
        &u0,
        cfg.t_start,
        cfg.t_end,
        cfg.disc,
        &cfg.symbol,
        &cfg.policy,
    )?;
    let last = traj.last();
    diag.put("steps", traj.steps());
    diag.put("final.l2", last.l2_norm());
    diag.put("final.sup", last.sup_norm());
    diag.put("final.min", last.min());
    let c = cfg.symbol.eval(traj.end_time())?;
    diag.put("final.energy", attractor::energy(last, c.b, c.omega));
    let audit = fdsolver::residual_audit(&traj, 10)?;
    diag.put("residual.inclusion", audit.inclusion_residual);
    diag.put("residual.pde", audit.pde_residual);
    match fdsolver::discrete_min_principle_check(&traj) {
        Ok(ok) => diag.put("min_principle", ok),
        Err(e) => diag.put("min_principle", format!("not applicable: {e}")),
    }
    let every = stride(cfg, traj.steps());
    Ok(vec![(
        "fields.csv".into(),
        fields_csv(recorded_rows(&traj, every)),
    )])
}

fn xi_m(cfg: &RunConfig, diag: &mut Diagnostics) -> CliResult<Artifacts> {
    let (lower, upper) = attractor::sandwich_bounds(&cfg.symbol, cfg.disc.grid)?;
    let mut rows = Vec::new();
    for (j, &t) in cfg.xi_times.iter().enumerate() {
        let (from_below, from_above) =
            attractor::xi_m_two_sided(t, &cfg.symbol, cfg.t_pull, cfg.disc)?;
        let below_lower = lower
            .field
            .values()
            .iter()
            .zip(from_above.values())
            .map(|(l, x)| l - x)
            .fold(0.0, f64::max);
        let above_upper = from_above
            .values()
            .iter()
            .zip(upper.field.values())
            .map(|(x, u)| x - u)
            .fold(0.0, f64::max);
        diag.put(format!("xi_m.{j}.t"), t);
        diag.put(format!("xi_m.{j}.l2"), from_above.l2_norm());
        diag.put(
            format!("xi_m.{j}.bracket_gap"),
            from_above.l2_distance(&from_below),
        );
        diag.put(format!("xi_m.{j}.below_lower"), below_lower);
        diag.put(format!("xi_m.{j}.above_upper"), above_upper);
        rows.push((t, from_above));
    }
    let delta = cfg.symbol.bounds().delta();
    diag.put("delta", delta);
    diag.put(
        "pullback.certificate",
        (-delta * cfg.t_pull).exp() * upper.field.l2_norm(),
    );
    Ok(vec![(
        "fields.csv".into(),
        fields_csv(rows.iter().map(|(t, u)| (*t, u))),
    )])
}

fn section(cfg: &RunConfig, diag: &mut Diagnostics) -> CliResult<Artifacts> {
    let taus: Vec<f64> = cfg.ages.iter().map(|a| cfg.section_t - a).collect();
    let sec = attractor::section(cfg.section_t, &cfg.symbol, &taus, cfg.t_pull, cfg.disc)?;
    diag.put("section.t", sec.t);
    diag.put("xi_m.l2", sec.xi_m.l2_norm());
    diag.put("ordering", sec.satisfies_ordering(1e-12));
    for (j, (tau, g)) in sec.connections.iter().enumerate() {
        diag.put(format!("connection.{j}.tau"), *tau);
        diag.put(format!("connection.{j}.l2"), g.l2_norm());
        diag.put(
            format!("connection.{j}.distance_to_xi"),
            g.l2_distance(&sec.xi_m),
        );
    }
    Ok(vec![
        ("fields.csv".into(), fields_csv([(sec.t, &sec.xi_m)])),
        (
            "connections.csv".into(),
            labelled_csv("tau", sec.connections.iter().map(|(tau, g)| (*tau, g))),
        ),
    ])
}

fn equilibria(cfg: &RunConfig, diag: &mut Diagnostics) -> CliResult<Artifacts> {
    let grid = cfg.disc.grid;
    let c = cfg.symbol.eval(cfg.t_start)?;
    let eq = attractor::v1_plus(c.b, c.omega, grid)?;
    let (lower, upper) = attractor::sandwich_bounds(&cfg.symbol, grid)?;
    let mid = attractor::v1_plus_at(c.b, c.omega, 0.5);
    diag.put("b", c.b);
    diag.put("omega", c.omega);
    diag.put("midpoint", mid);
    diag.put("residual.discrete_sup", eq.residual);
    diag.put("energy", attractor::energy(&eq.field, c.b, c.omega));
    diag.put("lower.l2", lower.field.l2_norm());
    diag.put("upper.l2", upper.field.l2_norm());
    let bounds = labelled_csv("bound", [(0.0, &lower.field), (1.0, &upper.field)]);
    Ok(vec![
        ("fields.csv".into(), fields_csv([(cfg.t_start, &eq.field)])),
        ("bounds.csv".into(), bounds),
    ])
}

fn cocycle(cfg: &RunConfig, diag: &mut Diagnostics) -> CliResult<Artifacts> {
    let u0 = cfg.initial.field(cfg.disc.grid, cfg.seed);
    let (t, s) = (cfg.cocycle_t, cfg.cocycle_s);
    diag.put(
        "cocycle.deviation",
        skewflow::cocycle_check(t, s, &cfg.symbol, &u0, &cfg.policy, cfg.disc)?,
    );
    diag.put(
        "translation.deviation",
        skewflow::translation_identity_check(
            &cfg.symbol,
            cfg.cocycle_h,
            cfg.t_start,
            cfg.t_start + t,
            &u0,
            &cfg.policy,
            cfg.disc,
        )?,
    );
    let traj = fdsolver::solve(&u0, 0.0, t + s, cfg.disc, &cfg.symbol, &cfg.policy)?;
    Ok(vec![(
        "fields.csv".into(),
        fields_csv(recorded_rows(&traj, stride(cfg, traj.steps()))),
    )])
}

fn hull(cfg: &RunConfig) -> CliResult<crate::coefficients::HullSample> {
    Ok(hull_sample(
        &cfg.symbol,
        cfg.hull_samples,
        cfg.hull_strategy,
    )?)
}

fn uniform(cfg: &RunConfig, diag: &mut Diagnostics) -> CliResult<Artifacts> {
    let hull = hull(cfg)?;
    let assembly = skewflow::uniform_attractor_assemble(
        &hull,
        cfg.section_t,
        &cfg.ages,
        cfg.t_pull,
        cfg.disc,
    )?;
    diag.put("fibers", assembly.fibers.len());
    diag.put("radius", assembly.radius);
    diag.put("envelope.l2", assembly.envelope.l2_norm());

    let morse = skewflow::morse_decomposition(&hull, cfg.t_pull, cfg.disc)?;
    diag.put("morse.separation_margin", morse.separation_margin);
    diag.put("morse.lower_bound_norm", morse.lower_bound_norm);
    diag.put("morse.disjoint", morse.is_disjoint(1e-6));

    let settings = GradientSettings {
        t_back: cfg.t_back,
        t_fwd: cfg.t_fwd,
        t_pull: cfg.t_pull,
        ..Default::default()
    };
    let report = skewflow::gradient_structure_check(&hull, &cfg.ignitions, settings, cfg.disc)?;
    diag.put("gradient.trajectories", report.entries.len());
    diag.put("gradient.counterexamples", report.counterexamples());

    let (sigma0, fiber0) = &assembly.fibers[0];
    let step = cfg
        .disc
        .time((cfg.hull_window / cfg.hull_samples as f64 / cfg.disc.dt).round() as i64);
    diag.put("invariance.duration", step);
    diag.put(
        "invariance.gap",
        skewflow::invariance_probe(sigma0, fiber0, step, cfg.t_pull, cfg.disc)?,
    );

    let data = cfg.probe_data(4);
    let horizons = [cfg.hull_window, 2.0 * cfg.hull_window]
        .map(|h| cfg.disc.time((h / cfg.disc.dt).round() as i64));
    let probe = skewflow::uniform_attraction_probe(&assembly, &data, &horizons, cfg.disc)?;
    for (h, d) in horizons.iter().zip(&probe) {
        diag.put(format!("attraction.horizon_{h}"), *d);
    }

    let mut fibers = String::from("fiber,x,u\n");
    for (j, (_, sec)) in assembly.fibers.iter().enumerate() {
        for (x, v) in cfg.disc.grid.nodes().zip(sec.xi_m.values()) {
            writeln!(fibers, "{j},{x:.16e},{v:.16e}").expect("writing to a String");
        }
    }
    Ok(vec![
        (
            "fields.csv".into(),
            fields_csv([(assembly.t, &assembly.envelope)]),
        ),
        ("fibers.csv".into(), fibers),
    ])
}

fn check(name: &str, measured: f64, bound: impl Into<String>, passed: bool) -> Check {
    Check {
        name: name.to_string(),
        measured,
        bound: bound.into(),
        passed,
    }
}

/// The property suite behind `verify`; also returns `ξ_M` at `attractor.t` as fields.
fn verify(cfg: &RunConfig, diag: &mut Diagnostics) -> CliResult<(Artifacts, Vec<Check>)> {
    let (sigma, disc, t0) = (&cfg.symbol, cfg.disc, cfg.t_start);
    let grid = disc.grid;
    let data = cfg.probe_data(20);
    let sign0 = SelectionPolicy::sign(0.0);
    let mut checks = Vec::new();

    // one implicit step from nonnegative data
    let mut min_after = f64::INFINITY;
    let mut all_positive = true;
    for u0 in &data {
        let h = sign0.select(u0, t0);
        let u1 = fdsolver::step(u0, t0, disc.with_scheme(Scheme::ImplicitEuler), sigma, &h)?;
        all_positive &= u1.is_strictly_positive();
        min_after = min_after.min(u1.min());
    }
    checks.push(check(
        "positivity_one_step",
        min_after,
        "> 0 at every node",
        all_positive,
    ));

    // delayed ignition from zero
    let ignite_at = disc.time(disc.step_index(t0 + 0.5)?);
    let late = disc.time(disc.step_index(t0 + 0.8)?);
    let end = t0 + 1.5;
    let zero = Field::zeros(grid);
    let early_traj = fdsolver::solve(
        &zero,
        t0,
        end,
        disc,
        sigma,
        &SelectionPolicy::ignite(ignite_at),
    )?;
    let late_traj = fdsolver::solve(&zero, t0, end, disc, sigma, &SelectionPolicy::ignite(late))?;
    let k_ignite = disc.step_index(ignite_at)? - early_traj.start_step;
    let before = early_traj.states[..=k_ignite as usize]
        .iter()
        .map(Field::sup_norm)
        .fold(0.0, f64::max);
    checks.push(check(
        "ignition_zero_before_t0",
        before,
        "== 0",
        before == 0.0,
    ));
    let after = early_traj.states[k_ignite as usize + 1..]
        .iter()
        .map(Field::min)
        .fold(f64::INFINITY, f64::min);
    checks.push(check(
        "ignition_positive_after_t0",
        after,
        "> 0 from t0 + dt",
        after > 0.0,
    ));
    let ordered = fdsolver::comparison_check(&late_traj, &early_traj)?;
    checks.push(check(
        "comparison_ignition_order",
        if ordered { 1.0 } else { 0.0 },
        "later ignition stays below",
        ordered,
    ));

    // minimum principle and audit on sign trajectories
    let short_end = t0 + 0.5;
    let mut principle = true;
    for u0 in data.iter().take(5) {
        let traj = fdsolver::solve(
            u0,
            t0,
            short_end,
            disc.with_scheme(Scheme::ImplicitEuler),
            sigma,
            &sign0,
        )?;
        principle &= fdsolver::discrete_min_principle_check(&traj)?;
    }
    checks.push(check(
        "min_principle",
        if principle { 1.0 } else { 0.0 },
        "holds on 5 trajectories",
        principle,
    ));
    let traj = fdsolver::solve(&data[0], t0, short_end, disc, sigma, &sign0)?;
    let audit = fdsolver::residual_audit(&traj, 5)?;
    checks.push(check(
        "inclusion_residual",
        audit.inclusion_residual,
        "== 0",
        audit.inclusion_residual == 0.0,
    ));
    // the oracle is the continuum mild solution, so the gap is the discretization error
    checks.push(check(
        "pde_residual",
        audit.pde_residual,
        "<= 1e-3",
        audit.pde_residual <= 1e-3,
    ));

    // sandwich and pullback convergence
    let (lower, upper) = attractor::sandwich_bounds(sigma, grid)?;
    let slack = 1e-6 + 1e-3;
    let mut worst: f64 = 0.0;
    for j in 0..5 {
        let t = disc.time(disc.step_index(cfg.section_t + 0.5 * j as f64)?);
        let xi = attractor::xi_m(t, sigma, cfg.t_pull, disc)?;
        for ((l, x), u) in lower
            .field
            .values()
            .iter()
            .zip(xi.values())
            .zip(upper.field.values())
        {
            worst = worst.max(l - x).max(x - u);
        }
    }
    checks.push(check(
        "sandwich",
        worst,
        format!("<= {slack:e}"),
        worst <= slack,
    ));

    let delta = sigma.bounds().delta();
    let half = disc.time(disc.step_index(0.5 * cfg.t_pull)?);
    let short = attractor::xi_m(cfg.section_t, sigma, half, disc)?;
    let long = attractor::xi_m(cfg.section_t, sigma, cfg.t_pull, disc)?;
    let cauchy = short.l2_distance(&long);
    let certificate = (-delta * half).exp() * upper.field.l2_norm() + 1e-6;
    checks.push(check(
        "pullback_cauchy",
        cauchy,
        format!("<= {certificate:e}"),
        cauchy <= certificate,
    ));

    // decay toward the positive branch
    let (rate, target, rate_ok) = decay_rate(cfg)?;
    checks.push(check("decay_rate", rate, target, rate_ok));

    // cocycle and translation
    let co = skewflow::cocycle_check(0.5, 0.25, sigma, &data[1], &sign0, disc)?;
    checks.push(check("cocycle_bitwise", co, "== 0", co == 0.0));
    let tr =
        skewflow::translation_identity_check(sigma, 0.5, t0, t0 + 0.5, &data[1], &sign0, disc)?;
    checks.push(check("translation_bitwise", tr, "== 0", tr == 0.0));

    // energy descent is a statement about autonomous problems
    if let Profile::Constant { b, omega } = *sigma.profile() {
        let mut worst_violation: f64 = 0.0;
        for (j, u0) in data.iter().take(10).enumerate() {
            let beta = [0.0, 0.5, 1.0][j % 3];
            let policy = SelectionPolicy::sign(beta);
            let mut energies = Vec::new();
            fdsolver::evolve_with(
                u0,
                disc.step_index(t0)?,
                500,
                disc.with_scheme(Scheme::ImplicitEuler),
                sigma,
                &policy,
                |_, u, _| {
                    energies.push(attractor::energy(u, b, omega));
                },
            )?;
            for w in energies.windows(2) {
                worst_violation = worst_violation.max((w[1] - w[0]) / (1.0 + w[0].abs()));
            }
        }
        checks.push(check(
            "energy_monotone",
            worst_violation,
            "< 1e-10 relative",
            worst_violation < 1e-10,
        ));
        let e = attractor::energy(&attractor::v1_plus(b, omega, grid)?.field, b, omega);
        checks.push(check("equilibrium_energy_negative", e, "< 0", e < 0.0));
        diag.put("energy.worst_violation", worst_violation);
    }

    for c in &checks {
        diag.put(format!("verify.{}.measured", c.name), c.measured);
        diag.put(format!("verify.{}.passed", c.name), c.passed);
    }
    diag.put("verify.delta", delta);
    Ok((
        vec![("fields.csv".into(), fields_csv([(cfg.section_t, &long)]))],
        checks,
    ))
}

/// Constant symbols: rate of `‖γ(t) − v*‖` over `[1, 3]` after ignition,
/// within 10% of `δ`, where `v*` is the discrete steady state. Otherwise: the
/// rate at which two positive-branch solutions from the sandwich bounds merge,
/// at least `0.9·δ`.
fn decay_rate(cfg: &RunConfig) -> CliResult<(f64, String, bool)> {
    let (sigma, disc, t0) = (
        &cfg.symbol,
        cfg.disc.with_scheme(Scheme::ImplicitEuler),
        cfg.t_start,
    );
    let delta = sigma.bounds().delta();
    let k0 = disc.step_index(t0)?;
    let every = (0.1 / disc.dt).round() as usize;
    let mut samples = Vec::new();
    if let Profile::Constant { b, omega } = *sigma.profile() {
        let target = attractor::discrete_equilibrium(b, omega, disc.grid)?;
        fdsolver::evolve_with(
            &Field::zeros(disc.grid),
            k0,
            3 * 10 * every,
            disc,
            sigma,
            &SelectionPolicy::ignite(t0),
            |n, u, _| {
                let t = n as f64 * disc.dt;
                if n % every == 0 && t >= 1.0 - 1e-9 {
                    samples.push((t, u.l2_distance(&target)));
                }
            },
        )?;
        let rate = attractor::exponential_rate(&samples)?;
        Ok((
            rate,
            format!("within 10% of {delta:.6}"),
            ((rate - delta) / delta).abs() <= 0.1,
        ))
    } else {
        let (lower, upper) = attractor::sandwich_bounds(sigma, disc.grid)?;
        let positive = SelectionPolicy::positive_branch();
        let mut a = lower.field;
        let mut traj_b = Vec::new();
        fdsolver::evolve_with(
            &upper.field,
            k0,
            3 * 10 * every,
            disc,
            sigma,
            &positive,
            |n, u, _| {
                if n % every == 0 {
                    traj_b.push(u.clone());
                }
            },
        )?;
        let mut n_done = 0;
        for (j, ub) in traj_b.iter().enumerate() {
            let target_n = j * every;
            a = fdsolver::evolve_with(
                &a,
                k0 + n_done as i64,
                target_n - n_done,
                disc,
                sigma,
                &positive,
                |_, _, _| {},
            )?;
            n_done = target_n;
            let t = target_n as f64 * disc.dt;
            if t >= 1.0 - 1e-9 {
                samples.push((t, a.l2_distance(ub)));
            }
        }
        let rate = attractor::exponential_rate(&samples)?;
        Ok((rate, format!(">= 0.9 * {delta:.6}"), rate >= 0.9 * delta))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "pullback-heaviside",
    version,
    about = "Simulate the Heaviside reaction-diffusion inclusion and verify its pullback attractor"
)]
pub struct Args {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Experiment to run; overrides `experiment` in the config.
    #[arg(long)]
    pub experiment: Option<String>,
    /// `key=value` override, applied after the config file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Builds the run configuration from parsed arguments.
pub fn config_from_args(args: &Args) -> CliResult<RunConfig> {
    let mut raw = RawConfig::load(&args.config)?;
    for (i, s) in args.overrides.iter().enumerate() {
        raw.set(s, i + 1)?;
    }
    if let Some(e) = &args.experiment {
        raw.set(&format!("experiment = {e}"), 0)
            .map_err(|_| CliError::config("--experiment", "invalid value"))?;
    }
    if let Some(out) = &args.out {
        raw.set(&format!("out = \"{}\"", out.display()), 0)?;
    }
    raw.resolve()
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args(
    args: impl IntoIterator<Item = String>,
    stdout: &mut impl io::Write,
    stderr: &mut impl io::Write,
) -> i32 {
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(
                if e.use_stderr() {
                    stderr as &mut dyn io::Write
                } else {
                    stdout as &mut dyn io::Write
                },
                "{e}"
            );
            return code;
        }
    };
    let result = config_from_args(&args).and_then(|cfg| {
        if cfg.out.is_none() {
            return Err(CliError::MissingKey {
                origin: args.config.display().to_string(),
                key: "out".into(),
            });
        }
        run(&cfg)
    });
    match result {
        Ok(report) => {
            for c in &report.checks {
                let _ = writeln!(stdout, "{c}");
            }
            if report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}
