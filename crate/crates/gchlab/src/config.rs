//! Experiment configuration: a flat `key = value` document with optional
//! `[section]` headers, read with TOML syntax.
//!
//! Every kind has a complete table of defaults. A document is checked key by
//! key against that table (unknown keys, type mismatches and invalid values
//! are reported with the offending key and line), merged over the defaults
//! and deserialized. [`echo`] writes the fully resolved configuration, and
//! parsing the echo yields the same configuration.

use std::fmt;

use gchlab_core::dynamics::{RhsForm, SolverConfig, TimeStep};
use gchlab_core::grid::{Grid1D, RealField};
use gchlab_core::peakon_weak::{peakon_field, PeakonParams, DEFAULT_LEVELS};
use gchlab_core::{corpus, Result as CoreResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

/// Experiment kinds, named as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Simulate,
    PeakonVerify,
    BlowupStudy,
    Picard,
    BesovAudit,
    TransportTest,
}

impl Kind {
    pub const ALL: [Kind; 6] =
        [Kind::Simulate, Kind::PeakonVerify, Kind::BlowupStudy, Kind::Picard, Kind::BesovAudit, Kind::TransportTest];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::PeakonVerify => "peakon-verify",
            Kind::BlowupStudy => "blowup-study",
            Kind::Picard => "picard",
            Kind::BesovAudit => "besov-audit",
            Kind::TransportTest => "transport-test",
        }
    }

    fn parse(name: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape of an initial profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Peakon of speed `c` at `t = 0`.
    Peakon,
    /// `A exp(-(x - x0)^2 / (2 w^2))`.
    Gaussian,
    /// `A sech^2((x - x0) / w)`.
    Sech2,
    Zero,
    /// `A` times a seeded sum of `bumps` Gaussian bumps.
    Random,
}

/// Initial data fields shared by several kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    pub profile: Profile,
    pub c: f64,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub bumps: usize,
}

impl InitialSpec {
    fn new(profile: Profile, amplitude: f64, width: f64) -> Self {
        Self { profile, c: 1.0, amplitude, width, center: 0.0, bumps: 3 }
    }

    /// Samples the profile on `grid`; `seed` drives the random profile.
    pub fn sample(&self, grid: Grid1D, seed: u64) -> CoreResult<RealField> {
        let (a, x0, w) = (self.amplitude, self.center, self.width);
        Ok(match self.profile {
            Profile::Peakon => peakon_field(PeakonParams::new(self.c)?, grid, 0.0),
            Profile::Gaussian => RealField::from_fn(grid, |x| a * (-(x - x0).powi(2) / (2.0 * w * w)).exp()),
            Profile::Sech2 => RealField::from_fn(grid, |x| a / ((x - x0) / w).cosh().powi(2)),
            Profile::Zero => RealField::zeros(grid),
            Profile::Random => corpus::random_decaying(grid, self.bumps, seed).scale(a),
        })
    }
}

/// Integrator settings; `dt = 0` selects the adaptive step and
/// `snapshot_every = 0` disables snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub cfl: f64,
    pub rate: f64,
    pub dt: f64,
    pub monitor_every: usize,
    pub tail_tolerance: f64,
    pub rhs_form: RhsForm,
    pub dealias: bool,
    pub snapshot_every: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            cfl: 0.3,
            rate: 0.05,
            dt: 0.0,
            monitor_every: 10,
            tail_tolerance: 1e-3,
            rhs_form: RhsForm::SpectralForm,
            dealias: true,
            snapshot_every: 0,
        }
    }
}

impl SolverSpec {
    pub fn solver_config(&self, grid: Grid1D, t_end: f64) -> SolverConfig {
        let mut cfg = SolverConfig::new(grid, t_end);
        cfg.time_step = if self.dt > 0.0 {
            TimeStep::Fixed { dt: self.dt }
        } else {
            TimeStep::Adaptive { cfl: self.cfl, rate: self.rate }
        };
        cfg.monitor_every = self.monitor_every;
        cfg.tail_tolerance = self.tail_tolerance;
        cfg.rhs_form = self.rhs_form;
        cfg.dealias = self.dealias;
        cfg.snapshot_every = (self.snapshot_every > 0).then_some(self.snapshot_every);
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateParams {
    #[serde(flatten)]
    pub initial: InitialSpec,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakonVerifyParams {
    pub c: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    /// Also run with twice the points and report the error reduction.
    pub refine: bool,
    /// Quadrature levels of the weak-residual study.
    pub levels: Vec<usize>,
    pub crest_split: bool,
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupParams {
    #[serde(flatten)]
    pub initial: InitialSpec,
    /// End time used when the criterion fails and no horizon exists.
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    /// Point count of the refinement run; 0 skips it.
    pub refine_n: usize,
    pub window: usize,
    pub fit_tail_tol: f64,
    pub min_window: usize,
    /// Amplitude multipliers of an optional sweep over the profile.
    pub amplitudes: Vec<f64>,
    /// Peakon control run.
    pub control: bool,
    pub control_c: f64,
    pub control_t: f64,
    pub control_l: f64,
    pub control_n: usize,
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardParams {
    /// Run the built-in small-data suite instead of the profile below.
    pub suite: bool,
    #[serde(flatten)]
    pub initial: InitialSpec,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub n_max: usize,
    pub dt: f64,
    pub s: f64,
    pub c_cal: f64,
    /// Compare the last iterate with the direct solver.
    pub compare_direct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesovAuditParams {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub corpus_size: usize,
    /// Bumps per field of the decaying corpus used by the fitted audits.
    pub bumps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportParams {
    /// Constant advection speed.
    pub velocity: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub dt: f64,
    /// Point count of the manufactured-solution box `[-pi, pi)`.
    pub manufactured_n: usize,
    pub manufactured_dts: Vec<f64>,
    /// Smoothness of the a-priori audit.
    pub sigma: f64,
    /// Base point count of the a-priori audit (two doublings follow).
    pub audit_n: usize,
    pub audit_l: f64,
    pub audit_dt: f64,
}

/// Kind-specific parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Simulate(SimulateParams),
    PeakonVerify(PeakonVerifyParams),
    BlowupStudy(BlowupParams),
    Picard(PicardParams),
    BesovAudit(BesovAuditParams),
    TransportTest(TransportParams),
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn kind(&self) -> Kind {
        match self.params {
            Params::Simulate(_) => Kind::Simulate,
            Params::PeakonVerify(_) => Kind::PeakonVerify,
            Params::BlowupStudy(_) => Kind::BlowupStudy,
            Params::Picard(_) => Kind::Picard,
            Params::BesovAudit(_) => Kind::BesovAudit,
            Params::TransportTest(_) => Kind::TransportTest,
        }
    }

    /// Defaults of `kind`; required keys hold placeholders.
    pub fn defaults(kind: Kind) -> Self {
        let params = match kind {
            Kind::Simulate => Params::Simulate(SimulateParams {
                initial: InitialSpec::new(Profile::Peakon, 1.0, 1.0),
                t_end: 1.0,
                half_width: 40.0,
                n_points: 4096,
                solver: SolverSpec::default(),
            }),
            Kind::PeakonVerify => Params::PeakonVerify(PeakonVerifyParams {
                c: 1.0,
                t_end: 1.0,
                half_width: 40.0,
                n_points: 4096,
                refine: true,
                levels: DEFAULT_LEVELS.to_vec(),
                crest_split: false,
                solver: SolverSpec::default(),
            }),
            Kind::BlowupStudy => Params::BlowupStudy(BlowupParams {
                initial: InitialSpec::new(Profile::Gaussian, 1.0, 0.035),
                t_end: 0.01,
                half_width: 2.0,
                n_points: 4096,
                refine_n: 8192,
                window: 20,
                fit_tail_tol: 1e-11,
                min_window: 5,
                amplitudes: Vec::new(),
                control: true,
                control_c: 1.0,
                control_t: 1.0,
                control_l: 40.0,
                control_n: 4096,
                solver: SolverSpec::default(),
            }),
            Kind::Picard => Params::Picard(PicardParams {
                suite: true,
                initial: InitialSpec::new(Profile::Gaussian, 0.1, 0.5f64.sqrt()),
                t_end: 0.5,
                half_width: 30.0,
                n_points: 1024,
                n_max: 10,
                dt: 0.01,
                s: 1.5,
                c_cal: 1.0,
                compare_direct: true,
            }),
            Kind::BesovAudit => {
                Params::BesovAudit(BesovAuditParams { half_width: 4.0, n_points: 512, corpus_size: 100, bumps: 3 })
            }
            Kind::TransportTest => Params::TransportTest(TransportParams {
                velocity: 0.7,
                t_end: 1.0,
                half_width: 20.0,
                n_points: 2048,
                dt: 0.1,
                manufactured_n: 1024,
                manufactured_dts: vec![0.5, 0.25, 0.125],
                sigma: 1.5,
                audit_n: 128,
                audit_l: 8.0,
                audit_dt: 0.05,
            }),
        };
        Self { seed: 0, params }
    }
}

/// Keys that have no default.
fn required_keys(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Simulate | Kind::PeakonVerify => &["T"],
        _ => &[],
    }
}

/// A configuration problem, located by key and line where possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key `{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: Option<&str>, line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.map(str::to_string), line, message: message.into() }
}

/// Line numbers (1-based) of the `key = value` lines, by dotted key path.
fn key_lines(text: &str) -> Vec<(String, usize)> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            section = rest.trim_end_matches(']').trim().to_string();
        } else if let Some((key, _)) = line.split_once('=') {
            let key = key.trim().trim_matches('"');
            if !key.is_empty() && !key.starts_with('#') {
                let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
                out.push((path, i + 1));
            }
        }
    }
    out
}

fn line_of(lines: &[(String, usize)], path: &str) -> Option<usize> {
    lines.iter().find(|(p, _)| p == path).map(|&(_, l)| l)
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "number",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "section",
    }
}

/// Whether `given` may stand where `default` sits; integers are accepted for
/// numbers and converted.
fn coerce(default: &Value, given: &Value) -> Option<Value> {
    match (default, given) {
        (Value::Float(_), Value::Integer(i)) => Some(Value::Float(*i as f64)),
        (Value::Integer(_), Value::Integer(i)) if *i < 0 => None,
        (Value::Array(d), Value::Array(g)) => {
            let proto = d.first();
            let items = g
                .iter()
                .map(|item| match proto {
                    Some(p) => coerce(p, item),
                    None => Some(item.clone()),
                })
                .collect::<Option<Vec<_>>>()?;
            Some(Value::Array(items))
        }
        (d, g) if std::mem::discriminant(d) == std::mem::discriminant(g) => Some(g.clone()),
        _ => None,
    }
}

/// Overlays `given` on `base`, refusing unknown keys and mismatched types.
fn merge(base: &mut Table, given: &Table, prefix: &str, lines: &[(String, usize)]) -> Result<(), ConfigError> {
    for (key, value) in given {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        let line = line_of(lines, &path).or_else(|| line_of(lines, key));
        let Some(slot) = base.get_mut(key) else {
            return Err(err(Some(&path), line, "unknown key"));
        };
        match (slot, value) {
            (Value::Table(inner), Value::Table(sub)) => merge(inner, sub, &path, lines)?,
            (slot, value) => match coerce(slot, value) {
                Some(v) => *slot = v,
                None if matches!(value, Value::Integer(i) if *i < 0) => {
                    return Err(err(Some(&path), line, "expected a nonnegative integer"));
                }
                None => {
                    return Err(err(
                        Some(&path),
                        line,
                        format!("expected {}, found {}", type_name(slot), type_name(value)),
                    ))
                }
            },
        }
    }
    Ok(())
}

fn to_table<T: Serialize>(value: &T) -> Table {
    Table::try_from(value).expect("configuration types serialize to tables")
}

fn decode<T: DeserializeOwned>(table: Table) -> Result<T, String> {
    Value::Table(table).try_into::<T>().map_err(|e| e.message().to_string())
}

/// Deserializes the merged table; on failure, finds the first given key that
/// cannot be decoded on its own over the defaults, to name it.
fn resolve<T: DeserializeOwned>(
    defaults: &Table,
    given: &Table,
    lines: &[(String, usize)],
) -> Result<T, ConfigError> {
    let mut merged = defaults.clone();
    merge(&mut merged, given, "", lines)?;
    decode::<T>(merged).map_err(|message| {
        let culprit = given.keys().find(|key| {
            let mut single = defaults.clone();
            let mut one = Table::new();
            one.insert((*key).clone(), given[*key].clone());
            merge(&mut single, &one, "", lines).is_ok() && decode::<T>(single).is_err()
        });
        match culprit {
            Some(key) => err(Some(key), line_of(lines, key), message),
            None => err(None, None, message),
        }
    })
}

fn params_table(params: &Params) -> Table {
    match params {
        Params::Simulate(p) => to_table(p),
        Params::PeakonVerify(p) => to_table(p),
        Params::BlowupStudy(p) => to_table(p),
        Params::Picard(p) => to_table(p),
        Params::BesovAudit(p) => to_table(p),
        Params::TransportTest(p) => to_table(p),
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let lines = key_lines(text);
    let mut doc: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        let key = lines.iter().find(|(_, l)| Some(*l) == line).map(|(k, _)| k.as_str());
        err(key, line, format!("malformed value: {}", e.message().trim()))
    })?;
    let kind_value = doc.remove("kind").ok_or_else(|| err(Some("kind"), None, "missing required key"))?;
    let kind_line = line_of(&lines, "kind");
    let kind = match &kind_value {
        Value::String(s) => Kind::parse(s).ok_or_else(|| {
            let names: Vec<&str> = Kind::ALL.iter().map(|k| k.name()).collect();
            err(Some("kind"), kind_line, format!("unknown kind `{s}`, expected one of {}", names.join(", ")))
        })?,
        other => return Err(err(Some("kind"), kind_line, format!("expected string, found {}", type_name(other)))),
    };
    let seed = match doc.remove("seed") {
        None => 0,
        Some(Value::Integer(i)) if i >= 0 => i as u64,
        Some(other) => {
            return Err(err(
                Some("seed"),
                line_of(&lines, "seed"),
                format!("expected a nonnegative integer, found {}", type_name(&other)),
            ))
        }
    };
    for key in required_keys(kind) {
        if !doc.contains_key(*key) {
            return Err(err(Some(key), None, format!("missing required key for kind `{kind}`")));
        }
    }
    let defaults = params_table(&ExperimentConfig::defaults(kind).params);
    let params = match kind {
        Kind::Simulate => Params::Simulate(resolve(&defaults, &doc, &lines)?),
        Kind::PeakonVerify => Params::PeakonVerify(resolve(&defaults, &doc, &lines)?),
        Kind::BlowupStudy => Params::BlowupStudy(resolve(&defaults, &doc, &lines)?),
        Kind::Picard => Params::Picard(resolve(&defaults, &doc, &lines)?),
        Kind::BesovAudit => Params::BesovAudit(resolve(&defaults, &doc, &lines)?),
        Kind::TransportTest => Params::TransportTest(resolve(&defaults, &doc, &lines)?),
    };
    let cfg = ExperimentConfig { seed, params };
    validate(&cfg).map_err(|mut e| {
        e.line = e.key.as_deref().and_then(|k| line_of(&lines, k).or_else(|| line_of(&lines, &format!("solver.{k}"))));
        e
    })?;
    Ok(cfg)
}

fn check(ok: bool, key: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(err(Some(key), None, message))
    }
}

fn positive(v: f64, key: &str) -> Result<(), ConfigError> {
    check(v.is_finite() && v > 0.0, key, "must be positive and finite")
}

fn grid_ok(l: f64, n: usize, key: &str) -> Result<(), ConfigError> {
    Grid1D::new(l, n).map(|_| ()).map_err(|e| err(Some(key), None, e.to_string()))
}

fn validate_initial(init: &InitialSpec) -> Result<(), ConfigError> {
    check(init.amplitude.is_finite(), "amplitude", "must be finite")?;
    check(init.center.is_finite(), "center", "must be finite")?;
    positive(init.width, "width")?;
    if init.profile == Profile::Peakon {
        positive(init.c, "c")?;
    }
    Ok(())
}

fn validate_solver(s: &SolverSpec, grid: Grid1D) -> Result<(), ConfigError> {
    s.solver_config(grid, 1.0).validate().map_err(|e| err(Some("solver"), None, e.to_string()))
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    match &cfg.params {
        Params::Simulate(p) => {
            positive(p.t_end, "T")?;
            grid_ok(p.half_width, p.n_points, "N")?;
            validate_initial(&p.initial)?;
            validate_solver(&p.solver, Grid1D::new(p.half_width, p.n_points).expect("checked"))
        }
        Params::PeakonVerify(p) => {
            positive(p.c, "c")?;
            positive(p.t_end, "T")?;
            grid_ok(p.half_width, p.n_points, "N")?;
            check(p.levels.len() >= 2, "levels", "needs at least two quadrature levels")?;
            check(p.levels.iter().all(|&n| n >= 4), "levels", "every level needs at least 4 points")?;
            validate_solver(&p.solver, Grid1D::new(p.half_width, p.n_points).expect("checked"))
        }
        Params::BlowupStudy(p) => {
            positive(p.t_end, "T")?;
            grid_ok(p.half_width, p.n_points, "N")?;
            if p.refine_n > 0 {
                grid_ok(p.half_width, p.refine_n, "refine_n")?;
            }
            validate_initial(&p.initial)?;
            check(p.window >= 3, "window", "must be at least 3")?;
            check(p.min_window >= 3 && p.min_window <= p.window, "min_window", "must lie in [3, window]")?;
            positive(p.fit_tail_tol, "fit_tail_tol")?;
            check(p.amplitudes.iter().all(|a| a.is_finite()), "amplitudes", "must be finite")?;
            if p.control {
                positive(p.control_c, "control_c")?;
                positive(p.control_t, "control_t")?;
                grid_ok(p.control_l, p.control_n, "control_n")?;
            }
            validate_solver(&p.solver, Grid1D::new(p.half_width, p.n_points).expect("checked"))
        }
        Params::Picard(p) => {
            positive(p.t_end, "T")?;
            positive(p.dt, "dt")?;
            grid_ok(p.half_width, p.n_points, "N")?;
            check(p.s > 1.0 && p.s.is_finite(), "s", "must exceed 1")?;
            check(p.c_cal.is_finite() && p.c_cal >= 0.0, "c_cal", "must be nonnegative")?;
            validate_initial(&p.initial)
        }
        Params::BesovAudit(p) => {
            grid_ok(p.half_width, p.n_points, "N")?;
            check(p.corpus_size > 0, "corpus_size", "must be positive")?;
            check(p.bumps > 0, "bumps", "must be positive")
        }
        Params::TransportTest(p) => {
            check(p.velocity.is_finite(), "velocity", "must be finite")?;
            positive(p.t_end, "T")?;
            positive(p.dt, "dt")?;
            positive(p.audit_dt, "audit_dt")?;
            grid_ok(p.half_width, p.n_points, "N")?;
            grid_ok(std::f64::consts::PI, p.manufactured_n, "manufactured_n")?;
            grid_ok(p.audit_l, p.audit_n, "audit_n")?;
            check(p.manufactured_dts.len() >= 2, "manufactured_dts", "needs at least two steps")?;
            check(
                p.manufactured_dts.iter().all(|d| d.is_finite() && *d > 0.0),
                "manufactured_dts",
                "steps must be positive",
            )?;
            check(p.sigma > 0.5 && p.sigma.is_finite(), "sigma", "must exceed 1/2")
        }
    }
}

/// The resolved configuration as a document that [`parse_config`] reads back
/// to the same value.
pub fn echo(cfg: &ExperimentConfig) -> String {
    let mut out = format!("kind = \"{}\"\nseed = {}\n", cfg.kind(), cfg.seed);
    out.push_str(&toml::to_string(&params_table(&cfg.params)).expect("tables serialize"));
    out
}
