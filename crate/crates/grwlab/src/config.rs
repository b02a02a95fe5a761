//! Run configuration: `[section]` headers, `key = value` lines, `#` comments.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use grwlab_core::fiber::FiberMesh;
use grwlab_core::identities::{Profile, Suite, DEFAULT_LEVELS, EL_DIRECTIONS, EL_STEP};
use grwlab_core::solver::{InitialData, Method, SolveConfig};
use grwlab_core::testfield::sine_values;
use grwlab_core::warp::{Interval, WarpSpec};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Text,
    Real,
    Integer,
    List,
}

/// Every accepted key with its value type.
const SCHEMA: &[(&str, &[(&str, Kind)])] = &[
    (
        "fiber",
        &[
            ("type", Kind::Text),
            ("resolution", Kind::Integer),
            ("resolutions", Kind::List),
            ("length", Kind::Real),
            ("lengths", Kind::List),
            ("subdivisions", Kind::Integer),
        ],
    ),
    (
        "warp",
        &[
            ("type", Kind::Text),
            ("value", Kind::Real),
            ("scale", Kind::Real),
            ("rate", Kind::Real),
            ("coeffs", Kind::List),
            ("domain", Kind::List),
            ("knots", Kind::List),
            ("values", Kind::List),
            ("start_slope", Kind::Real),
            ("end_slope", Kind::Real),
            ("anchor", Kind::Real),
        ],
    ),
    (
        "solver",
        &[
            ("method", Kind::Text),
            ("tol", Kind::Real),
            ("max_iterations", Kind::Integer),
            ("margin", Kind::Real),
            ("backtrack_factor", Kind::Real),
            ("max_backtracks", Kind::Integer),
            ("levenberg_initial", Kind::Real),
            ("levenberg_increase", Kind::Real),
            ("levenberg_decrease", Kind::Real),
            ("descent_step", Kind::Real),
            ("gmres_tol", Kind::Real),
            ("gmres_restart", Kind::Integer),
            ("gmres_max_iterations", Kind::Integer),
            ("min_step", Kind::Real),
            ("constancy_relative", Kind::Real),
        ],
    ),
    (
        "init",
        &[
            ("kind", Kind::Text),
            ("base", Kind::Real),
            ("amplitude", Kind::Real),
            ("seed", Kind::Integer),
            ("file", Kind::Text),
        ],
    ),
    (
        "verify",
        &[
            ("suite", Kind::Text),
            ("levels", Kind::Integer),
            ("lk_index", Kind::Integer),
            ("el_directions", Kind::Integer),
            ("el_step", Kind::Real),
        ],
    ),
    ("output", &[("directory", Kind::Text), ("formats", Kind::List)]),
];

fn kind_of(section: &str, key: &str) -> Option<Kind> {
    SCHEMA
        .iter()
        .find(|(s, _)| *s == section)
        .and_then(|(_, keys)| keys.iter().find(|(k, _)| *k == key))
        .map(|(_, kind)| *kind)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub value: String,
    #[serde(skip)]
    pub line: usize,
}

/// Parsed but untyped configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
    #[serde(skip)]
    origin: String,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut cfg = RawConfig { sections: BTreeMap::new(), origin: origin.to_string() };
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| cfg.error(line, None, "unterminated section header"))?
                    .trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return Err(cfg.error(line, None, &format!("unknown section [{name}]")));
                }
                if cfg.sections.contains_key(name) {
                    return Err(cfg.error(line, None, &format!("section [{name}] appears twice")));
                }
                cfg.sections.insert(name.to_string(), BTreeMap::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| cfg.error(line, None, "expected 'key = value'"))?;
            let key = key.trim();
            let value = unquote(value.trim());
            let section = current
                .clone()
                .ok_or_else(|| cfg.error(line, Some(key), "key outside of any section"))?;
            let full = format!("{section}.{key}");
            if kind_of(&section, key).is_none() {
                return Err(cfg.error(line, Some(&full), "unknown key"));
            }
            let map = cfg.sections.get_mut(&section).expect("section exists");
            if map.contains_key(key) {
                return Err(cfg.error(line, Some(&full), "duplicate key"));
            }
            map.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn error(&self, line: usize, key: Option<&str>, message: &str) -> CliError {
        CliError::Config(ConfigError {
            origin: self.origin.clone(),
            line: (line > 0).then_some(line),
            key: key.map(str::to_string),
            message: message.to_string(),
        })
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    /// Replace (or add) `section.key`, as a sweep does for its axis.
    pub fn set(&mut self, dotted: &str, value: &str) -> Result<(), CliError> {
        let (section, key) = split_key(dotted).ok_or_else(|| self.error(0, Some(dotted), "expected section.key"))?;
        if kind_of(section, key).is_none() {
            return Err(self.error(0, Some(dotted), "unknown key"));
        }
        let map = self.sections.entry(section.to_string()).or_default();
        let line = map.get(key).map_or(0, |e| e.line);
        map.insert(key.to_string(), Entry { value: value.to_string(), line });
        Ok(())
    }

    fn keys_of(&self, section: &str) -> impl Iterator<Item = (&String, &Entry)> {
        self.sections.get(section).into_iter().flat_map(|m| m.iter())
    }

    fn text(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.entry(section, key).map(|e| (e.value.as_str(), e.line))
    }

    fn real(&self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        let Some(e) = self.entry(section, key) else { return Ok(None) };
        parse_real(&e.value)
            .map(Some)
            .ok_or_else(|| self.error(e.line, Some(&format!("{section}.{key}")), &format!("'{}' is not a number", e.value)))
    }

    fn real_or(&self, section: &str, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.real(section, key)?.unwrap_or(default))
    }

    fn integer(&self, section: &str, key: &str) -> Result<Option<u64>, CliError> {
        let Some(e) = self.entry(section, key) else { return Ok(None) };
        e.value.parse::<u64>().map(Some).map_err(|_| {
            self.error(e.line, Some(&format!("{section}.{key}")), &format!("'{}' is not a non-negative integer", e.value))
        })
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.integer(section, key)?.map_or(default, |v| v as usize))
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(e) = self.entry(section, key) else { return Ok(None) };
        let mut out = Vec::new();
        for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            out.push(parse_real(item).ok_or_else(|| {
                self.error(e.line, Some(&format!("{section}.{key}")), &format!("'{item}' is not a number"))
            })?);
        }
        Ok(Some(out))
    }

    /// Reject keys of `section` that do not apply to the chosen variant.
    fn only(&self, section: &str, allowed: &[&str], variant: &str) -> Result<(), CliError> {
        for (key, e) in self.keys_of(section) {
            if !allowed.contains(&key.as_str()) {
                return Err(self.error(
                    e.line,
                    Some(&format!("{section}.{key}")),
                    &format!("key does not apply to {section} type '{variant}'"),
                ));
            }
        }
        Ok(())
    }

    /// Error attached to a key, with its line when present in the file.
    fn key_error(&self, section: &str, key: &str, message: &str) -> CliError {
        let line = self.entry(section, key).map_or(0, |e| e.line);
        self.error(line, Some(&format!("{section}.{key}")), message)
    }

    /// Whether `section.key` exists in the schema and holds a number.
    pub fn is_numeric_key(dotted: &str) -> bool {
        split_key(dotted)
            .and_then(|(s, k)| kind_of(s, k))
            .is_some_and(|k| matches!(k, Kind::Real | Kind::Integer))
    }

    pub fn is_integer_key(dotted: &str) -> bool {
        split_key(dotted).and_then(|(s, k)| kind_of(s, k)) == Some(Kind::Integer)
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }
}

fn split_key(dotted: &str) -> Option<(&str, &str)> {
    dotted.split_once('.')
}

fn unquote(v: &str) -> &str {
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// A real literal, optionally a multiple of pi: `0.5`, `pi`, `2pi`, `-1.5*pi`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(head) = s.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().ok()?,
        };
        return Some(factor * PI);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.origin)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        write!(f, ": ")?;
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        write!(f, "{}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FiberConfig {
    Circle { resolution: usize, length: f64 },
    Torus { resolutions: [usize; 2], lengths: [f64; 2] },
    Sphere { subdivisions: usize },
}

impl FiberConfig {
    pub fn build(&self) -> grwlab_core::Result<FiberMesh> {
        match *self {
            FiberConfig::Circle { resolution, length } => FiberMesh::circle(resolution, length),
            FiberConfig::Torus { resolutions, lengths } => FiberMesh::torus(resolutions, lengths),
            FiberConfig::Sphere { subdivisions } => FiberMesh::sphere(subdivisions),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitConfig {
    Constant { base: f64 },
    RandomBump { base: f64, amplitude: f64, seed: u64 },
    /// `base + amplitude·Π sin(2π x_i / L_i)` on grids, `base + amplitude·z` on the sphere.
    Sine { base: f64, amplitude: f64 },
    Custom { file: PathBuf },
}

impl InitConfig {
    pub fn seed(&self) -> Option<u64> {
        match self {
            InitConfig::RandomBump { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn initial_data(&self, mesh: &FiberMesh) -> Result<InitialData, CliError> {
        Ok(match self {
            InitConfig::Constant { base } => InitialData::Constant { level: *base },
            InitConfig::RandomBump { base, amplitude, seed } => {
                InitialData::RandomBump { base: *base, amplitude: *amplitude, seed: *seed }
            }
            InitConfig::Sine { base, amplitude } => {
                InitialData::Custom { values: sine_values(mesh, *base, *amplitude) }
            }
            InitConfig::Custom { file } => InitialData::Custom { values: read_values(file)? },
        })
    }
}

fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("");
        for tok in content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let v = parse_real(tok).ok_or_else(|| {
                CliError::Config(ConfigError {
                    origin: path.display().to_string(),
                    line: Some(idx + 1),
                    key: None,
                    message: format!("'{tok}' is not a number"),
                })
            })?;
            out.push(v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub suite: Option<String>,
    pub levels: usize,
    pub lk_index: usize,
    pub el_directions: usize,
    pub el_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub json: bool,
    pub csv: bool,
    pub off: bool,
}

/// A fully typed run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub fiber: FiberConfig,
    pub warp: WarpSpec,
    pub solver: SolveConfig,
    pub init: InitConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Type-check a raw configuration. `seed_override` replaces `init.seed`.
    pub fn from_raw(raw: RawConfig, base_dir: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let fiber = fiber_config(&raw)?;
        let warp = warp_config(&raw)?;
        let solver = solver_config(&raw)?;
        let init = init_config(&raw, base_dir, seed_override)?;
        let verify = VerifyConfig {
            suite: raw.text("verify", "suite").map(|(s, _)| s.to_string()),
            levels: raw.usize_or("verify", "levels", DEFAULT_LEVELS)?,
            lk_index: raw.usize_or("verify", "lk_index", 1)?,
            el_directions: raw.usize_or("verify", "el_directions", EL_DIRECTIONS)?,
            el_step: raw.real_or("verify", "el_step", EL_STEP)?,
        };
        if let Some(s) = &verify.suite {
            if Suite::parse(s).is_none() {
                return Err(raw.key_error("verify", "suite", &format!("unknown suite '{s}'")));
            }
        }
        if verify.levels == 0 {
            return Err(raw.key_error("verify", "levels", "must be at least 1"));
        }
        let output = output_config(&raw)?;
        Ok(Self { raw, fiber, warp, solver, init, verify, output })
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let raw = RawConfig::load(path)?;
        Self::from_raw(raw, path.parent().unwrap_or(Path::new(".")), seed_override)
    }

    /// The graph profile used by identity ladders.
    pub fn profile(&self) -> Result<Profile, CliError> {
        match self.init {
            InitConfig::Constant { base } => Ok(Profile::Constant { level: base }),
            InitConfig::RandomBump { base, amplitude, seed } => Ok(Profile::Random { base, amplitude, seed }),
            InitConfig::Sine { base, amplitude } => Ok(Profile::Sine { base, amplitude }),
            InitConfig::Custom { .. } => Err(self.raw.key_error(
                "init",
                "kind",
                "identity ladders resample the graph on every level; init.kind = custom has a single resolution",
            )),
        }
    }
}

fn fiber_config(raw: &RawConfig) -> Result<FiberConfig, CliError> {
    let (ty, line) = raw.text("fiber", "type").ok_or_else(|| raw.error(0, Some("fiber.type"), "missing"))?;
    let two_pi = 2.0 * PI;
    match ty {
        "circle" => {
            raw.only("fiber", &["type", "resolution", "length"], ty)?;
            Ok(FiberConfig::Circle {
                resolution: raw.usize_or("fiber", "resolution", 64)?,
                length: raw.real_or("fiber", "length", two_pi)?,
            })
        }
        "torus" => {
            raw.only("fiber", &["type", "resolution", "resolutions", "lengths"], ty)?;
            let resolutions = match (raw.integer("fiber", "resolution")?, raw.list("fiber", "resolutions")?) {
                (Some(_), Some(_)) => {
                    return Err(raw.key_error("fiber", "resolutions", "give either fiber.resolution or fiber.resolutions"))
                }
                (Some(n), None) => [n as usize; 2],
                (None, Some(v)) => {
                    if v.len() != 2 || v.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
                        return Err(raw.key_error("fiber", "resolutions", "expected two non-negative integers"));
                    }
                    [v[0] as usize, v[1] as usize]
                }
                (None, None) => [64, 64],
            };
            let lengths = match raw.list("fiber", "lengths")? {
                Some(v) if v.len() == 2 => [v[0], v[1]],
                Some(_) => return Err(raw.key_error("fiber", "lengths", "expected two lengths")),
                None => [two_pi, two_pi],
            };
            Ok(FiberConfig::Torus { resolutions, lengths })
        }
        "sphere" => {
            raw.only("fiber", &["type", "subdivisions"], ty)?;
            Ok(FiberConfig::Sphere { subdivisions: raw.usize_or("fiber", "subdivisions", 3)? })
        }
        other => Err(raw.error(
            line,
            Some("fiber.type"),
            &format!("unknown fiber type '{other}' (expected circle, torus or sphere)"),
        )),
    }
}

fn warp_config(raw: &RawConfig) -> Result<WarpSpec, CliError> {
    let (ty, line) = raw.text("warp", "type").ok_or_else(|| raw.error(0, Some("warp.type"), "missing"))?;
    let core = |r: grwlab_core::Result<WarpSpec>, key: &str| r.map_err(|e| raw.key_error("warp", key, &e.to_string()));
    let warp = match ty {
        "constant" => {
            raw.only("warp", &["type", "value", "anchor"], ty)?;
            core(WarpSpec::constant(raw.real_or("warp", "value", 1.0)?), "value")?
        }
        "exponential" | "exp" => {
            raw.only("warp", &["type", "scale", "rate", "anchor"], ty)?;
            core(WarpSpec::exponential(raw.real_or("warp", "scale", 1.0)?, raw.real_or("warp", "rate", 1.0)?), "rate")?
        }
        "cosh" => {
            raw.only("warp", &["type", "anchor"], ty)?;
            WarpSpec::cosh()
        }
        "polynomial" => {
            raw.only("warp", &["type", "coeffs", "domain", "anchor"], ty)?;
            let coeffs = raw.list("warp", "coeffs")?.ok_or_else(|| raw.key_error("warp", "coeffs", "missing"))?;
            let domain = interval(raw, "warp", "domain")?.ok_or_else(|| raw.key_error("warp", "domain", "missing"))?;
            core(WarpSpec::polynomial(coeffs, domain), "coeffs")?
        }
        "tabulated" => {
            raw.only("warp", &["type", "knots", "values", "start_slope", "end_slope", "anchor"], ty)?;
            let knots = raw.list("warp", "knots")?.ok_or_else(|| raw.key_error("warp", "knots", "missing"))?;
            let values = raw.list("warp", "values")?.ok_or_else(|| raw.key_error("warp", "values", "missing"))?;
            core(
                WarpSpec::tabulated(knots, values, raw.real("warp", "start_slope")?, raw.real("warp", "end_slope")?),
                "knots",
            )?
        }
        other => {
            return Err(raw.error(
                line,
                Some("warp.type"),
                &format!("unknown warp type '{other}' (expected constant, exponential, cosh, polynomial or tabulated)"),
            ))
        }
    };
    match raw.real("warp", "anchor")? {
        Some(a) => core(warp.with_anchor(a), "anchor"),
        None => Ok(warp),
    }
}

fn interval(raw: &RawConfig, section: &str, key: &str) -> Result<Option<Interval>, CliError> {
    match raw.list(section, key)? {
        None => Ok(None),
        Some(v) if v.len() == 2 => {
            Interval::new(v[0], v[1]).map(Some).map_err(|e| raw.key_error(section, key, &e.to_string()))
        }
        Some(_) => Err(raw.key_error(section, key, "expected 'lo, hi'")),
    }
}

fn solver_config(raw: &RawConfig) -> Result<SolveConfig, CliError> {
    let d = SolveConfig::default();
    let method = match raw.text("solver", "method") {
        None | Some(("newton", _)) => Method::Newton,
        Some(("descent", _)) => Method::Descent,
        Some((other, line)) => {
            return Err(raw.error(
                line,
                Some("solver.method"),
                &format!("unknown method '{other}' (expected newton or descent)"),
            ))
        }
    };
    let cfg = SolveConfig {
        method,
        tol: raw.real_or("solver", "tol", d.tol)?,
        max_iterations: raw.usize_or("solver", "max_iterations", d.max_iterations)?,
        margin: raw.real_or("solver", "margin", d.margin)?,
        backtrack_factor: raw.real_or("solver", "backtrack_factor", d.backtrack_factor)?,
        max_backtracks: raw.usize_or("solver", "max_backtracks", d.max_backtracks)?,
        levenberg_initial: raw.real_or("solver", "levenberg_initial", d.levenberg_initial)?,
        levenberg_increase: raw.real_or("solver", "levenberg_increase", d.levenberg_increase)?,
        levenberg_decrease: raw.real_or("solver", "levenberg_decrease", d.levenberg_decrease)?,
        descent_step: raw.real_or("solver", "descent_step", d.descent_step)?,
        gmres_tol: raw.real_or("solver", "gmres_tol", d.gmres_tol)?,
        gmres_restart: raw.usize_or("solver", "gmres_restart", d.gmres_restart)?,
        gmres_max_iterations: raw.usize_or("solver", "gmres_max_iterations", d.gmres_max_iterations)?,
        min_step: raw.real_or("solver", "min_step", d.min_step)?,
        constancy_relative: raw.real_or("solver", "constancy_relative", d.constancy_relative)?,
    };
    cfg.validate().map_err(|e| {
        let msg = e.to_string();
        let key = SCHEMA[2].1.iter().map(|(k, _)| *k).find(|k| msg.contains(&format!("solver.{k} "))).unwrap_or("");
        if key.is_empty() {
            raw.error(0, Some("solver"), &msg)
        } else {
            raw.key_error("solver", key, &msg)
        }
    })?;
    Ok(cfg)
}

fn init_config(raw: &RawConfig, base_dir: &Path, seed_override: Option<u64>) -> Result<InitConfig, CliError> {
    let (kind, line) = raw.text("init", "kind").unwrap_or(("constant", 0));
    let base = raw.real_or("init", "base", 0.0)?;
    match kind {
        "constant" => {
            raw.only("init", &["kind", "base", "seed"], kind)?;
            Ok(InitConfig::Constant { base })
        }
        "random-bump" => {
            raw.only("init", &["kind", "base", "amplitude", "seed"], kind)?;
            let amplitude = raw.real_or("init", "amplitude", 0.3)?;
            if amplitude < 0.0 {
                return Err(raw.key_error("init", "amplitude", "must be non-negative"));
            }
            let seed = match seed_override {
                Some(s) => s,
                None => raw.integer("init", "seed")?.unwrap_or(0),
            };
            Ok(InitConfig::RandomBump { base, amplitude, seed })
        }
        "sine" => {
            raw.only("init", &["kind", "base", "amplitude", "seed"], kind)?;
            Ok(InitConfig::Sine { base, amplitude: raw.real_or("init", "amplitude", 0.3)? })
        }
        "custom" => {
            raw.only("init", &["kind", "file"], kind)?;
            let (file, _) = raw.text("init", "file").ok_or_else(|| raw.key_error("init", "file", "missing"))?;
            Ok(InitConfig::Custom { file: base_dir.join(file) })
        }
        other => Err(raw.error(
            line,
            Some("init.kind"),
            &format!("unknown initial data kind '{other}' (expected constant, random-bump, sine or custom)"),
        )),
    }
}

fn output_config(raw: &RawConfig) -> Result<OutputConfig, CliError> {
    let directory = raw.text("output", "directory").map_or_else(|| PathBuf::from("out"), |(d, _)| PathBuf::from(d));
    let mut out = OutputConfig { directory, json: true, csv: true, off: false };
    if let Some(e) = raw.entry("output", "formats") {
        out.json = false;
        out.csv = false;
        for f in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match f {
                "json" => out.json = true,
                "csv" => out.csv = true,
                "off" => out.off = true,
                other => {
                    return Err(raw.error(
                        e.line,
                        Some("output.formats"),
                        &format!("unknown format '{other}' (expected json, csv or off)"),
                    ))
                }
            }
        }
    }
    Ok(out)
}
