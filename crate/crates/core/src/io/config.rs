//! Flat sectioned `key = value` configuration.
//!
//! ```text
//! [grid]
//! nx = 64
//! ny = 32
//! [porosity]
//! K = 120
//! ```
//!
//! Every key has a default except `grid.nx` and `grid.ny`. Parsing never
//! stops at the first problem; all errors come back together, each tied to
//! its line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::bench::{BenchmarkCase, CaseKind};
use crate::cellperm::UnitCellSpec;
use crate::error::{ConfigError, Error, Result};
use crate::lattice::{Boundaries, EdgeKind, InitialCondition, SimulationConfig, MAX_LATTICE_SPEED};
use crate::regime::{porosity_control, Permeability};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Vtk,
    Both,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Vtk => "vtk",
            OutputFormat::Both => "both",
        }
    }
}

/// Every setting, resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub nx: usize,
    pub ny: usize,
    pub steps: u64,
    pub tau: f64,
    pub force: [f64; 2],
    pub rho0: f64,
    pub u0: [f64; 2],
    /// Lattice permeability.
    pub permeability: Permeability,
    pub boundaries: Boundaries,
    pub cell_delta: f64,
    pub cell_resolution: usize,
    pub cell_tolerance: f64,
    pub bench_case: CaseKind,
    /// Empty means the case's default ladder.
    pub bench_ladder: Vec<usize>,
    pub out_dir: PathBuf,
    pub run_name: String,
    pub format: OutputFormat,
    /// Snapshot cadence; 0 writes only the first and last state.
    pub output_every: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            nx: 64,
            ny: 64,
            steps: 1000,
            tau: 0.8,
            force: [0.0, 0.0],
            rho0: 1.0,
            u0: [0.0, 0.0],
            permeability: Permeability::Infinite,
            boundaries: Boundaries::PERIODIC,
            cell_delta: 0.5,
            cell_resolution: 64,
            cell_tolerance: 1e-9,
            bench_case: CaseKind::BrinkmanChannel,
            bench_ladder: Vec::new(),
            out_dir: PathBuf::from("."),
            run_name: "run".into(),
            format: OutputFormat::Csv,
            output_every: 0,
        }
    }
}

/// Where a configuration came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub version: String,
    /// Seconds since the Unix epoch, stamped by the caller.
    pub timestamp: Option<u64>,
    pub source: String,
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub settings: Settings,
    pub provenance: Provenance,
}

impl ResolvedConfig {
    /// Defaults plus overrides, for runs without a file.
    pub fn from_overrides(overrides: &[String]) -> Result<Self> {
        resolve(None, overrides)
    }

    pub fn stamp_now(mut self) -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.provenance.timestamp = Some(secs);
        self
    }

    /// The settings in the input format, numbers at 17 significant digits.
    pub fn to_text(&self) -> String {
        serialize(&self.settings)
    }

    /// Provenance and settings as `# ` comment lines.
    pub fn header(&self) -> String {
        let mut s = format!("# hlbm {}\n", self.provenance.version);
        if let Some(t) = self.provenance.timestamp {
            let _ = writeln!(s, "# timestamp {t}");
        }
        for o in &self.provenance.overrides {
            let _ = writeln!(s, "# --set {o}");
        }
        for line in self.to_text().lines() {
            let _ = writeln!(s, "# {line}");
        }
        s
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        let s = &self.settings;
        SimulationConfig::new(s.nx, s.ny, s.tau)
            .with_permeability(s.permeability)
            .with_force(s.force)
            .with_boundaries(s.boundaries)
            .with_initial(InitialCondition::Uniform {
                rho: s.rho0,
                u: s.u0,
            })
            .with_steps(s.steps, s.output_every)
    }

    pub fn unit_cell_spec(&self) -> Result<UnitCellSpec> {
        let s = &self.settings;
        let mut spec = UnitCellSpec::new(s.cell_delta, s.cell_resolution)?;
        spec.tolerance = s.cell_tolerance;
        Ok(spec)
    }

    pub fn benchmark_case(&self) -> Result<BenchmarkCase> {
        let s = &self.settings;
        let ladder = if s.bench_ladder.is_empty() {
            BenchmarkCase::default_sizes(s.bench_case)
        } else {
            s.bench_ladder.clone()
        };
        BenchmarkCase::by_kind(s.bench_case, &ladder)
    }
}

pub fn parse_config(text: &str) -> Result<ResolvedConfig> {
    parse_config_with(text, &[])
}

/// Parses `text`, then applies `section.key=value` overrides on top.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<ResolvedConfig> {
    resolve(Some(text), overrides)
}

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["nx", "ny", "steps"]),
    (
        "physics",
        &["tau_lb", "force_x", "force_y", "rho0", "ux0", "uy0"],
    ),
    ("porosity", &["K"]),
    ("boundary", &["x", "y"]),
    ("cellperm", &["delta", "resolution", "tolerance"]),
    ("bench", &["case", "ladder"]),
    ("output", &["dir", "name", "format", "every"]),
];

fn canonical_key(section: &str, key: &str) -> Option<&'static str> {
    KEYS.iter()
        .find(|(s, _)| *s == section)
        .and_then(|(_, keys)| keys.iter().find(|k| k.eq_ignore_ascii_case(key)).copied())
}

struct Collector {
    errors: Vec<ConfigError>,
    lines: HashMap<&'static str, Option<usize>>,
}

impl Collector {
    fn push(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            message: message.into(),
        });
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied().flatten()
    }
}

fn resolve(text: Option<&str>, overrides: &[String]) -> Result<ResolvedConfig> {
    let mut settings = Settings::default();
    let mut c = Collector {
        errors: Vec::new(),
        lines: HashMap::new(),
    };
    let mut seen: HashMap<String, usize> = HashMap::new();

    if let Some(text) = text {
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let mut line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                match rest.split_once(']') {
                    Some((name, tail)) => {
                        let name = name.trim().to_ascii_lowercase();
                        if KEYS.iter().any(|(s, _)| *s == name) {
                            section = Some(name);
                        } else {
                            c.push(Some(line_no), format!("unknown section [{name}]"));
                            section = None;
                        }
                        line = tail.trim();
                        if line.is_empty() {
                            continue;
                        }
                    }
                    None => {
                        c.push(Some(line_no), "unterminated section header");
                        continue;
                    }
                }
            }
            let Some(sec) = section.clone() else {
                c.push(
                    Some(line_no),
                    format!("'{line}' appears outside a known section"),
                );
                continue;
            };
            for (key, value) in split_pairs(line) {
                let Some(key) = key else {
                    c.push(
                        Some(line_no),
                        format!("expected key = value, got '{value}'"),
                    );
                    continue;
                };
                let Some(canon) = canonical_key(&sec, key) else {
                    c.push(Some(line_no), format!("unknown key '{key}' in [{sec}]"));
                    continue;
                };
                let full = format!("{sec}.{canon}");
                if let Some(first) = seen.insert(full.clone(), line_no) {
                    c.push(
                        Some(line_no),
                        format!("duplicate key {full} (first set on line {first})"),
                    );
                    continue;
                }
                c.lines.insert(canon, Some(line_no));
                if let Err(msg) = assign(&mut settings, canon, value) {
                    c.push(Some(line_no), format!("{full}: {msg}"));
                }
            }
        }
        for required in ["grid.nx", "grid.ny"] {
            if !seen.contains_key(required) && !overrides.iter().any(|o| o.starts_with(required)) {
                c.push(None, format!("missing required key {required}"));
            }
        }
    }

    for o in overrides {
        let parsed = o.split_once('=').and_then(|(path, value)| {
            path.split_once('.')
                .map(|(s, k)| (s.trim(), k.trim(), value.trim()))
        });
        let Some((sec, key, value)) = parsed else {
            c.push(None, format!("override '{o}' is not section.key=value"));
            continue;
        };
        let sec = sec.to_ascii_lowercase();
        let Some(canon) = canonical_key(&sec, key) else {
            c.push(None, format!("override '{o}': unknown key {sec}.{key}"));
            continue;
        };
        c.lines.insert(canon, None);
        if let Err(msg) = assign(&mut settings, canon, value) {
            c.push(None, format!("override {sec}.{canon}: {msg}"));
        }
    }

    validate(&settings, &mut c);
    if !c.errors.is_empty() {
        return Err(Error::Config(c.errors));
    }
    Ok(ResolvedConfig {
        settings,
        provenance: Provenance {
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: None,
            source: text.unwrap_or_default().into(),
            overrides: overrides.to_vec(),
        },
    })
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find(['#', ';']).unwrap_or(line.len());
    &line[..cut]
}

/// One `key = value` per line, or several whitespace-separated `key=value`
/// tokens. A token without `=` comes back with `None` as key.
fn split_pairs(line: &str) -> Vec<(Option<&str>, &str)> {
    if line.matches('=').count() <= 1 {
        return vec![match line.split_once('=') {
            Some((k, v)) => (Some(k.trim()), v.trim()),
            None => (None, line),
        }];
    }
    line.split_whitespace()
        .map(|tok| match tok.split_once('=') {
            Some((k, v)) => (Some(k), v),
            None => (None, tok),
        })
        .collect()
}

fn number(value: &str) -> std::result::Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("'{value}' is not a number"))
}

fn count<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("'{value}' is not a non-negative integer"))
}

fn edge(value: &str) -> std::result::Result<EdgeKind, String> {
    match value.to_ascii_lowercase().as_str() {
        "periodic" => Ok(EdgeKind::Periodic),
        "wall" | "bounce_back" => Ok(EdgeKind::Wall),
        _ => Err(format!("'{value}' is not periodic, wall or bounce_back")),
    }
}

fn assign(s: &mut Settings, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "nx" => s.nx = count(value)?,
        "ny" => s.ny = count(value)?,
        "steps" => s.steps = count(value)?,
        "tau_lb" => s.tau = number(value)?,
        "force_x" => s.force[0] = number(value)?,
        "force_y" => s.force[1] = number(value)?,
        "rho0" => s.rho0 = number(value)?,
        "ux0" => s.u0[0] = number(value)?,
        "uy0" => s.u0[1] = number(value)?,
        "K" => {
            let k = number(value)?;
            s.permeability = if k == f64::INFINITY {
                Permeability::Infinite
            } else {
                Permeability::Finite(k)
            };
        }
        "x" => s.boundaries.x = edge(value)?,
        "y" => s.boundaries.y = edge(value)?,
        "delta" => s.cell_delta = number(value)?,
        "resolution" => s.cell_resolution = count(value)?,
        "tolerance" => s.cell_tolerance = number(value)?,
        "case" => s.bench_case = CaseKind::parse(value).map_err(|e| e.to_string())?,
        "ladder" => {
            s.bench_ladder = value
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| count(t.trim()))
                .collect::<std::result::Result<_, _>>()?;
        }
        "dir" => s.out_dir = PathBuf::from(value),
        "name" => {
            if value.is_empty() || value.contains(['/', '\\']) {
                return Err(format!(
                    "run name '{value}' must be non-empty without path separators"
                ));
            }
            s.run_name = value.into();
        }
        "format" => {
            s.format = match value.to_ascii_lowercase().as_str() {
                "csv" => OutputFormat::Csv,
                "vtk" => OutputFormat::Vtk,
                "both" => OutputFormat::Both,
                _ => return Err(format!("'{value}' is not csv, vtk or both")),
            }
        }
        "every" => s.output_every = count(value)?,
        _ => unreachable!("key table and assign disagree on {key}"),
    }
    Ok(())
}

fn validate(s: &Settings, c: &mut Collector) {
    if s.nx == 0 || s.ny == 0 {
        let key = if s.nx == 0 { "nx" } else { "ny" };
        c.push(c.line_of(key), "grid dimensions must be at least 1");
    }
    if !(s.tau > 0.5) || !s.tau.is_finite() {
        c.push(
            c.line_of("tau_lb"),
            format!("relaxation time must exceed 0.5, got {}", s.tau),
        );
    }
    if !s.force.iter().all(|f| f.is_finite()) {
        c.push(
            c.line_of("force_x").or(c.line_of("force_y")),
            "force must be finite",
        );
    }
    if !(s.rho0 > 0.0) || !s.rho0.is_finite() {
        c.push(
            c.line_of("rho0"),
            format!("initial density must be positive, got {}", s.rho0),
        );
    }
    let speed = s.u0[0].hypot(s.u0[1]);
    if !(speed <= MAX_LATTICE_SPEED) {
        c.push(
            c.line_of("ux0").or(c.line_of("uy0")),
            format!("initial speed {speed} exceeds the lattice limit {MAX_LATTICE_SPEED}"),
        );
    }
    match s.permeability {
        Permeability::Finite(k) if !(k > 0.0) => c.push(
            c.line_of("K"),
            format!(
                "permeability K = {k} violates the porosity-control constraint: \
                 varpi = 1 - nu*tau/K needs K > 0"
            ),
        ),
        k if s.tau > 0.5 => {
            let nu = (s.tau - 0.5) / 3.0;
            if porosity_control(nu, s.tau, k).is_err() {
                c.push(
                    c.line_of("K"),
                    format!(
                        "permeability K = {} violates the porosity-control constraint: \
                         varpi = 1 - nu*tau/K lies in [0, 1] only for K >= nu*tau = {}",
                        k.value(),
                        nu * s.tau
                    ),
                );
            }
        }
        _ => {}
    }
    if !(s.cell_delta > 0.0 && s.cell_delta < 1.0) {
        c.push(
            c.line_of("delta"),
            format!("obstacle diameter must lie in (0, 1), got {}", s.cell_delta),
        );
    }
    if s.cell_resolution < 4 {
        c.push(
            c.line_of("resolution"),
            "cell resolution must be at least 4",
        );
    }
    if !(s.cell_tolerance > 0.0) {
        c.push(c.line_of("tolerance"), "cell tolerance must be positive");
    }
    if !s.bench_ladder.is_empty() {
        if let Err(e) = BenchmarkCase::by_kind(s.bench_case, &s.bench_ladder) {
            c.push(c.line_of("ladder"), e.to_string());
        }
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn serialize(s: &Settings) -> String {
    let ladder: Vec<String> = s.bench_ladder.iter().map(|n| n.to_string()).collect();
    let mut t = String::new();
    let _ = writeln!(
        t,
        "[grid]\nnx = {}\nny = {}\nsteps = {}",
        s.nx, s.ny, s.steps
    );
    let _ = writeln!(
        t,
        "[physics]\ntau_lb = {}\nforce_x = {}\nforce_y = {}\nrho0 = {}\nux0 = {}\nuy0 = {}",
        fmt_f64(s.tau),
        fmt_f64(s.force[0]),
        fmt_f64(s.force[1]),
        fmt_f64(s.rho0),
        fmt_f64(s.u0[0]),
        fmt_f64(s.u0[1])
    );
    let _ = writeln!(t, "[porosity]\nK = {}", fmt_f64(s.permeability.value()));
    let _ = writeln!(
        t,
        "[boundary]\nx = {}\ny = {}",
        s.boundaries.x.name(),
        s.boundaries.y.name()
    );
    let _ = writeln!(
        t,
        "[cellperm]\ndelta = {}\nresolution = {}\ntolerance = {}",
        fmt_f64(s.cell_delta),
        s.cell_resolution,
        fmt_f64(s.cell_tolerance)
    );
    let _ = writeln!(
        t,
        "[bench]\ncase = {}\nladder = {}",
        s.bench_case.name(),
        ladder.join(",")
    );
    let _ = writeln!(
        t,
        "[output]\ndir = {}\nname = {}\nformat = {}\nevery = {}",
        s.out_dir.display(),
        s.run_name,
        s.format.name(),
        s.output_every
    );
    t
}
