//! Scenario files: sectioned TOML with a fixed schema.
//!
//! ```toml
//! name = "heat-kernel"
//! model = "qdd"            # kinetic | qdd | both | validate:<suite>
//! seed = 7
//!
//! [grid]                   # lx1 lx2 nx1 nx2 pmax np1 np2 dt
//! [params]                 # epsilon alpha tau kappa qdd_dt
//! [potential]              # kind = zero | constant | linear | quadratic | gaussian | fourier | tabulated
//! [initial]                # kind = uniform | gaussian-bump | spin-helix | tabulated
//! [output]                 # t_end interval encoding
//! [validate]               # suite knobs, see `ValidateSection`
//! ```
//!
//! Every section is optional and falls back to the defaults below. Unknown
//! keys are rejected.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rashba_core::grid::snapshot::{Encoding, Snapshot};
use rashba_core::grid::{FourierMode, Grid, GridSpec, PotentialField, PotentialKind, SpinDensityField, MIN_PMAX, MIN_RESOLUTION};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub model: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub validate: ValidateSection,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub lx1: f64,
    pub lx2: f64,
    pub nx1: usize,
    pub nx2: usize,
    pub pmax: f64,
    pub np1: usize,
    pub np2: usize,
    /// Kinetic time step; also the drift-diffusion step unless
    /// `params.qdd_dt` is set.
    pub dt: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        let s = GridSpec::default();
        Self { lx1: s.lx1, lx2: s.lx2, nx1: s.nx1, nx2: s.nx2, pmax: s.pmax, np1: s.np1, np2: s.np2, dt: s.dt }
    }
}

impl GridSection {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            lx1: self.lx1,
            lx2: self.lx2,
            nx1: self.nx1,
            nx2: self.nx2,
            pmax: self.pmax,
            np1: self.np1,
            np2: self.np2,
            dt: self.dt,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub epsilon: f64,
    pub alpha: f64,
    /// Relaxation time; `inf` switches collisions off.
    pub tau: f64,
    /// Drift-diffusion prefactor.
    pub kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qdd_dt: Option<f64>,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { epsilon: 0.1, alpha: 1.0, tau: 1.0, kappa: 1.0, qdd_dt: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Linear {
        field: [f64; 2],
    },
    Quadratic {
        curvature: [f64; 2],
        center: [f64; 2],
    },
    Gaussian {
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
    Fourier {
        modes: Vec<ModeSpec>,
    },
    Tabulated {
        file: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub m: [i64; 2],
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Uniform {
        #[serde(default = "one")]
        n0: f64,
        #[serde(default)]
        spin: [f64; 3],
    },
    /// `n0 = background + amplitude·G`, `n⃗ = spin·G` with `G` the periodized
    /// unit-mass Gaussian of standard deviation `width`.
    GaussianBump {
        #[serde(default)]
        background: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<[f64; 2]>,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        spin: [f64; 3],
    },
    /// Spin rotating in the plane spanned by `σ1` and `σ3` along `axis`.
    SpinHelix {
        #[serde(default = "one")]
        n0: f64,
        #[serde(default = "half")]
        amplitude: f64,
        #[serde(default = "one_i64")]
        wavenumber: i64,
        #[serde(default)]
        axis: usize,
    },
    Tabulated {
        file: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn one_i64() -> i64 {
    1
}

fn default_width() -> f64 {
    0.3
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Uniform { n0: 1.0, spin: [0.0; 3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub t_end: f64,
    /// Time between density snapshots; the final time is always written.
    pub interval: f64,
    /// Snapshot payload encoding, `csv` or `binary`.
    pub encoding: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { t_end: 0.1, interval: 0.1, encoding: "csv".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    /// Random trials, states or pairs, depending on the suite.
    pub trials: usize,
    /// Pass threshold of the suite's main check.
    pub tolerance: f64,
    pub epsilons: Vec<f64>,
    pub taus: Vec<f64>,
    pub min_order: f64,
    /// Largest relative `⟨TTg⟩` deviation accepted at the smallest `ε`.
    pub max_relative_deviation: f64,
    /// Hand-set Lagrange multiplier for the residual-current check.
    pub multiplier: [f64; 3],
}

impl Default for ValidateSection {
    fn default() -> Self {
        Self {
            trials: 20,
            tolerance: 1e-7,
            epsilons: vec![0.2, 0.1, 0.05],
            taus: vec![0.2, 0.1, 0.05],
            min_order: 0.8,
            max_relative_deviation: 5e-2,
            multiplier: [0.7, -0.4, 1.1],
        }
    }
}

/// One invalid field, with the line that set it when known.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub key: String,
    pub line: Option<usize>,
    pub overridden: bool,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.overridden, self.line) {
            (true, _) => write!(f, "--set {}: {}", self.key, self.message),
            (false, Some(l)) => write!(f, "line {l}: {}: {}", self.key, self.message),
            (false, None) => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Syntax { origin: String, message: String },
    #[error("bad override {0:?}: expected key=value")]
    Override(String),
    #[error("{origin}: {} invalid field(s)\n  {}", .issues.len(), .issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid { origin: String, issues: Vec<Issue> },
}

/// A `key=value` command-line override. The value is read as a TOML value
/// and falls back to a bare string.
#[derive(Clone, Debug, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: toml::Value,
}

impl std::str::FromStr for Override {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let (key, raw) = s.split_once('=').ok_or_else(|| ConfigError::Override(s.into()))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(ConfigError::Override(s.into()));
        }
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        Ok(Override { key: key.to_string(), value })
    }
}

fn apply_override(table: &mut toml::Table, o: &Override) -> Result<(), Issue> {
    let issue = |message: String| Issue { key: o.key.clone(), line: None, overridden: true, message };
    let mut parts: Vec<&str> = o.key.split('.').collect();
    let leaf = parts.pop().expect("non-empty key");
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| issue(format!("{p} is not a section")))?;
    }
    cur.insert(leaf.to_string(), o.value.clone());
    Ok(())
}

/// Parses scenario text. `origin` names the source in messages.
pub fn parse_str(src: &str, origin: &str, overrides: &[Override]) -> Result<Scenario, ConfigError> {
    let syntax = |e: toml::de::Error| ConfigError::Syntax { origin: origin.to_string(), message: e.to_string() };
    let scenario: Scenario = toml::from_str(src).map_err(syntax)?;
    let scenario = if overrides.is_empty() {
        scenario
    } else {
        let mut table: toml::Table = toml::from_str(src).map_err(syntax)?;
        let mut issues = Vec::new();
        for o in overrides {
            if let Err(i) = apply_override(&mut table, o) {
                issues.push(i);
            }
        }
        if !issues.is_empty() {
            return Err(ConfigError::Invalid { origin: origin.to_string(), issues });
        }
        Scenario::deserialize(table).map_err(|e| ConfigError::Syntax {
            origin: format!("{origin} after --set overrides"),
            message: e.to_string(),
        })?
    };
    let issues: Vec<Issue> = scenario
        .check()
        .into_iter()
        .map(|(key, message)| {
            let overridden = overrides.iter().any(|o| o.key == key || key.starts_with(&format!("{}.", o.key)));
            let line = if overridden { None } else { locate(src, &key) };
            Issue { key, line, overridden, message }
        })
        .collect();
    if issues.is_empty() {
        Ok(scenario)
    } else {
        Err(ConfigError::Invalid { origin: origin.to_string(), issues })
    }
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path, overrides: &[Override]) -> Result<Scenario, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let mut s = parse_str(&src, &path.display().to_string(), overrides)?;
    s.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    let issues: Vec<Issue> = s
        .missing_files()
        .into_iter()
        .map(|(key, message)| Issue { line: locate(&src, &key), key, overridden: false, message })
        .collect();
    if issues.is_empty() {
        Ok(s)
    } else {
        Err(ConfigError::Invalid { origin: path.display().to_string(), issues })
    }
}

/// Line (1-based) of `section.key = …` in `src`, or of the section header
/// when the key itself is not written out.
pub fn locate(src: &str, dotted: &str) -> Option<usize> {
    let (section, leaf) = match dotted.rsplit_once('.') {
        Some((s, l)) => (s, l),
        None => ("", dotted),
    };
    let leaf = leaf.split('[').next().unwrap_or(leaf);
    let mut current = String::new();
    let mut header = None;
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[').and_then(|r| r.split(']').next()) {
            current = h.trim().trim_start_matches('[').to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(rest) = t.strip_prefix(leaf) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    header
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl Scenario {
    /// Canonical TOML form; parsing it yields an equal scenario.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("scenario is always representable")
    }

    /// Field-level precondition checks as `(key, message)` pairs.
    pub fn check(&self) -> Vec<(String, String)> {
        let mut bad = Vec::new();
        let mut push = |k: &str, m: String| bad.push((k.to_string(), m));
        if !crate::registry::Registry::builtin().contains(&self.model) {
            push(
                "model",
                format!(
                    "unknown model {:?} (one of: {})",
                    self.model,
                    crate::registry::Registry::builtin().names().join(", ")
                ),
            );
        }
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            push("name", "name must be non-empty and contain no path separators".into());
        }
        let g = &self.grid;
        for (k, n) in [("nx1", g.nx1), ("nx2", g.nx2), ("np1", g.np1), ("np2", g.np2)] {
            if n < MIN_RESOLUTION || n % 2 != 0 {
                push(&format!("grid.{k}"), format!("resolution must be even and at least {MIN_RESOLUTION}, got {n}"));
            }
        }
        for (k, l) in [("lx1", g.lx1), ("lx2", g.lx2)] {
            if !positive(l) {
                push(&format!("grid.{k}"), format!("box length must be positive, got {l}"));
            }
        }
        if !(g.pmax >= MIN_PMAX && g.pmax.is_finite()) {
            push("grid.pmax", format!("pmax must be at least {MIN_PMAX}, got {}", g.pmax));
        }
        if !positive(g.dt) {
            push("grid.dt", format!("dt must be positive, got {}", g.dt));
        }
        let p = &self.params;
        if !positive(p.epsilon) {
            push("params.epsilon", format!("ε must be positive, got {}", p.epsilon));
        }
        if !(p.alpha >= 0.0 && p.alpha.is_finite()) {
            push("params.alpha", format!("α must be non-negative, got {}", p.alpha));
        }
        if !(p.tau > 0.0) {
            push("params.tau", format!("τ must be positive, got {}", p.tau));
        }
        if !positive(p.kappa) {
            push("params.kappa", format!("κ must be positive, got {}", p.kappa));
        }
        if let Some(dt) = p.qdd_dt {
            if !positive(dt) {
                push("params.qdd_dt", format!("qdd_dt must be positive, got {dt}"));
            }
        }
        match &self.potential {
            PotentialSpec::Gaussian { width, .. } if !positive(*width) => {
                push("potential.width", format!("width must be positive, got {width}"));
            }
            PotentialSpec::Fourier { modes } if modes.is_empty() => {
                push("potential.modes", "a Fourier potential needs at least one mode".into());
            }
            _ => {}
        }
        match &self.initial {
            InitialSpec::Uniform { n0, spin } => {
                if !(rashba_core::pauli::norm3(spin) < *n0) {
                    push("initial.spin", format!("need |n⃗| < n0 for a physical state, got |n⃗| = {} and n0 = {n0}", rashba_core::pauli::norm3(spin)));
                }
            }
            InitialSpec::GaussianBump { background, amplitude, width, spin, .. } => {
                if !positive(*width) {
                    push("initial.width", format!("width must be positive, got {width}"));
                }
                if !(*background >= 0.0 && *amplitude > 0.0) {
                    push("initial.amplitude", "need background ≥ 0 and amplitude > 0".into());
                }
                if !(rashba_core::pauli::norm3(spin) < *amplitude) {
                    push("initial.spin", "need |spin| < amplitude for a physical state".into());
                }
            }
            InitialSpec::SpinHelix { n0, amplitude, axis, .. } => {
                if !(amplitude.abs() < *n0) {
                    push("initial.amplitude", format!("need |amplitude| < n0, got {amplitude} and {n0}"));
                }
                if *axis > 1 {
                    push("initial.axis", format!("axis must be 0 or 1, got {axis}"));
                }
            }
            InitialSpec::Tabulated { .. } => {}
        }
        let o = &self.output;
        if !positive(o.t_end) {
            push("output.t_end", format!("t_end must be positive, got {}", o.t_end));
        }
        if !positive(o.interval) {
            push("output.interval", format!("interval must be positive, got {}", o.interval));
        }
        if Encoding::parse(&o.encoding).is_err() {
            push("output.encoding", format!("encoding must be csv or binary, got {:?}", o.encoding));
        }
        let v = &self.validate;
        if v.trials == 0 {
            push("validate.trials", "trials must be at least 1".into());
        }
        if !positive(v.tolerance) {
            push("validate.tolerance", format!("tolerance must be positive, got {}", v.tolerance));
        }
        for (k, list) in [("epsilons", &v.epsilons), ("taus", &v.taus)] {
            let ok = list.len() >= 3 && list.iter().all(|x| positive(*x)) && list.windows(2).all(|w| w[1] < w[0]);
            if !ok {
                push(&format!("validate.{k}"), "need at least three positive, strictly decreasing values".into());
            }
        }
        if !positive(v.max_relative_deviation) {
            push("validate.max_relative_deviation", "must be positive".into());
        }
        bad
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let PotentialSpec::Tabulated { file } = &mut self.potential {
            fix(file);
        }
        if let InitialSpec::Tabulated { file } = &mut self.initial {
            fix(file);
        }
    }

    fn missing_files(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (key, file) in [
            ("potential.file", match &self.potential {
                PotentialSpec::Tabulated { file } => Some(file),
                _ => None,
            }),
            ("initial.file", match &self.initial {
                InitialSpec::Tabulated { file } => Some(file),
                _ => None,
            }),
        ] {
            if let Some(f) = file {
                if !f.is_file() {
                    out.push((key.to_string(), format!("file {} does not exist", f.display())));
                }
            }
        }
        out
    }

    pub fn encoding(&self) -> Encoding {
        Encoding::parse(&self.output.encoding).unwrap_or(Encoding::Csv)
    }

    pub fn build_grid(&self) -> rashba_core::Result<Grid> {
        Grid::new(self.grid.spec())
    }

    pub fn build_potential(&self, grid: &Grid) -> rashba_core::Result<PotentialField> {
        let kind = match &self.potential {
            PotentialSpec::Zero => return Ok(PotentialField::zero(grid)),
            PotentialSpec::Constant { value } => PotentialKind::Constant { value: *value },
            PotentialSpec::Linear { field } => PotentialKind::Linear { field: *field },
            PotentialSpec::Quadratic { curvature, center } => {
                PotentialKind::Quadratic { curvature: *curvature, center: *center }
            }
            PotentialSpec::Gaussian { amplitude, center, width } => {
                PotentialKind::Gaussian { amplitude: *amplitude, center: *center, width: *width }
            }
            PotentialSpec::Fourier { modes } => PotentialKind::Fourier {
                modes: modes.iter().map(|m| FourierMode { m: m.m, amplitude: m.amplitude, phase: m.phase }).collect(),
            },
            PotentialSpec::Tabulated { file } => {
                let snap = read_snapshot(file)?;
                return PotentialField::tabulated(grid, snap.to_array2()?);
            }
        };
        PotentialField::new(grid, kind)
    }

    pub fn build_initial(&self, grid: &Grid) -> rashba_core::Result<SpinDensityField> {
        let s = grid.spec();
        let n = match &self.initial {
            InitialSpec::Uniform { n0, spin } => SpinDensityField::uniform(grid, *n0, *spin),
            InitialSpec::GaussianBump { background, amplitude, center, width, spin } => {
                let c = center.unwrap_or([0.5 * s.lx1, 0.5 * s.lx2]);
                let var = width * width;
                SpinDensityField::from_fn(grid, |x| {
                    let g = periodic_gaussian(x, c, var, [s.lx1, s.lx2]);
                    [background + amplitude * g, spin[0] * g, spin[1] * g, spin[2] * g]
                })
            }
            InitialSpec::SpinHelix { n0, amplitude, wavenumber, axis } => {
                let l = if *axis == 0 { s.lx1 } else { s.lx2 };
                let k = 2.0 * PI * *wavenumber as f64 / l;
                SpinDensityField::from_fn(grid, |x| {
                    let phase = k * x[*axis];
                    [*n0, amplitude * phase.cos(), 0.0, amplitude * phase.sin()]
                })
            }
            InitialSpec::Tabulated { file } => read_snapshot(file)?.to_density()?,
        };
        for c in n.comps() {
            if c.shape() != grid.shape2() {
                return Err(rashba_core::Error::ShapeMismatch { expected: grid.shape2().to_vec(), found: c.shape().to_vec() });
            }
        }
        Ok(n)
    }

    /// Exact charge density at time `t` when the drift-diffusion charge
    /// equation reduces to the heat equation.
    pub fn heat_reference(&self, grid: &Grid, t: f64) -> Option<ndarray::Array2<f64>> {
        let flat = matches!(self.potential, PotentialSpec::Zero | PotentialSpec::Constant { .. });
        let InitialSpec::GaussianBump { background, amplitude, center, width, .. } = &self.initial else {
            return None;
        };
        if !flat {
            return None;
        }
        let s = grid.spec();
        let c = center.unwrap_or([0.5 * s.lx1, 0.5 * s.lx2]);
        let var = width * width + 2.0 * self.params.kappa * t;
        Some(grid.position_fn(|x| background + amplitude * periodic_gaussian(x, c, var, [s.lx1, s.lx2])))
    }
}

fn read_snapshot(path: &Path) -> rashba_core::Result<Snapshot> {
    let f = std::fs::File::open(path)?;
    Snapshot::read(std::io::BufReader::new(f))
}

/// Unit-mass Gaussian of variance `var` centered at `c`, summed over the
/// nearest periodic images.
pub fn periodic_gaussian(x: [f64; 2], c: [f64; 2], var: f64, l: [f64; 2]) -> f64 {
    const IMAGES: i32 = 2;
    let mut total = 0.0;
    for a in -IMAGES..=IMAGES {
        for b in -IMAGES..=IMAGES {
            let d0 = x[0] - c[0] + l[0] * a as f64;
            let d1 = x[1] - c[1] + l[1] * b as f64;
            total += (-(d0 * d0 + d1 * d1) / (2.0 * var)).exp();
        }
    }
    total / (2.0 * PI * var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Result<Scenario, ConfigError> {
        parse_str(src, "test.toml", &[])
    }

    fn issues(e: ConfigError) -> Vec<Issue> {
        match e {
            ConfigError::Invalid { issues, .. } => issues,
            other => panic!("expected field errors, got {other}"),
        }
    }

    #[test]
    fn minimal_file_takes_documented_defaults() {
        let s = parse("model = \"qdd\"\n").unwrap();
        assert_eq!(s.name, "scenario");
        assert_eq!(s.seed, 0);
        assert_eq!(s.grid, GridSection::default());
        assert_eq!(s.grid.spec(), GridSpec::default());
        assert_eq!(s.params, ParamsSection::default());
        assert_eq!(s.potential, PotentialSpec::Zero);
        assert_eq!(s.initial, InitialSpec::Uniform { n0: 1.0, spin: [0.0; 3] });
        assert_eq!(s.output, OutputSection::default());
        assert_eq!(s.validate, ValidateSection::default());
    }

    #[test]
    fn negative_epsilon_is_rejected_with_its_line() {
        let e = issues(parse("model = \"kinetic\"\n\n[params]\nalpha = 1.0\nepsilon = -1\n").unwrap_err());
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].key, "params.epsilon");
        assert_eq!(e[0].line, Some(5));
        assert!(e[0].message.contains("ε must be positive"), "{}", e[0].message);
    }

    #[test]
    fn every_invalid_field_is_reported() {
        let src = "model = \"qdd\"\n[grid]\nnx1 = 7\ndt = 0\n[params]\nkappa = -2\n[output]\nencoding = \"hdf5\"\n";
        let keys: Vec<String> = issues(parse(src).unwrap_err()).into_iter().map(|i| i.key).collect();
        assert_eq!(keys, ["grid.nx1", "grid.dt", "params.kappa", "output.encoding"]);
    }

    #[test]
    fn unknown_keys_are_errors() {
        for src in [
            "model = \"qdd\"\nsede = 3\n",
            "model = \"qdd\"\n[params]\nepsilonn = 0.1\n",
            "model = \"qdd\"\n[potential]\nkind = \"constant\"\nvalue = 1.0\nwidth = 2.0\n",
            "model = \"qdd\"\n[bogus]\n",
        ] {
            let e = parse(src).unwrap_err();
            assert!(matches!(e, ConfigError::Syntax { .. }), "{src}: {e}");
            assert!(e.to_string().contains("line"), "{e}");
        }
    }

    #[test]
    fn unknown_model_lists_the_registry() {
        let e = issues(parse("model = \"validate:everything\"\n").unwrap_err());
        assert_eq!(e[0].key, "model");
        assert_eq!(e[0].line, Some(1));
        assert!(e[0].message.contains("validate:identities"));
    }

    #[test]
    fn missing_model_is_a_syntax_error() {
        assert!(matches!(parse("seed = 1\n"), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn canonical_form_round_trips() {
        let src = r#"
name = "rt"
description = "round trip"
model = "both"
seed = 42
[grid]
nx1 = 16
np2 = 32
dt = 0.0025
[params]
tau = inf
qdd_dt = 1e-4
[potential]
kind = "fourier"
modes = [{ m = [1, 0], amplitude = 0.3 }, { m = [-2, 3], amplitude = 0.1, phase = 0.7 }]
[initial]
kind = "gaussian-bump"
background = 1.0
center = [1.0, 2.5]
spin = [0.1, 0.0, -0.2]
[validate]
taus = [0.3, 0.2, 0.1, 0.05]
"#;
        let s = parse(src).unwrap();
        assert!(s.params.tau.is_infinite());
        let again = parse(&s.to_canonical()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.to_canonical(), s.to_canonical());
    }

    #[test]
    fn overrides_replace_and_create_keys() {
        let o: Vec<Override> = ["params.epsilon=0.05", "initial.kind=spin-helix", "name=custom", "seed = 9"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let s = parse_str("model = \"kinetic\"\n[params]\nepsilon = 0.2\n", "t", &o).unwrap();
        assert_eq!(s.params.epsilon, 0.05);
        assert_eq!(s.name, "custom");
        assert_eq!(s.seed, 9);
        assert!(matches!(s.initial, InitialSpec::SpinHelix { wavenumber: 1, .. }));
    }

    #[test]
    fn invalid_override_is_attributed_to_the_flag() {
        let o = vec!["params.epsilon=-1".parse().unwrap()];
        let e = issues(parse_str("model = \"kinetic\"\n[params]\nepsilon = 0.2\n", "t", &o).unwrap_err());
        assert!(e[0].overridden);
        assert!(e[0].to_string().starts_with("--set params.epsilon"));
        assert!("novalue".parse::<Override>().is_err());
        assert!("a..b=1".parse::<Override>().is_err());
    }

    #[test]
    fn locate_finds_keys_and_headers() {
        let src = "model = \"x\"\n[grid]\nnx1 = 8\n[params]\n  tau = 2\n[potential]\nkind = \"zero\"\n";
        assert_eq!(locate(src, "model"), Some(1));
        assert_eq!(locate(src, "grid.nx1"), Some(3));
        assert_eq!(locate(src, "params.tau"), Some(5));
        assert_eq!(locate(src, "params.alpha"), Some(4));
        assert_eq!(locate(src, "potential.width"), Some(6));
        assert_eq!(locate(src, "output.t_end"), None);
    }

    #[test]
    fn initial_conditions_are_physical_and_shaped() {
        for kind in ["uniform", "gaussian-bump", "spin-helix"] {
            let s = parse(&format!("model = \"qdd\"\n[grid]\nnx1 = 16\nnx2 = 8\n[initial]\nkind = \"{kind}\"\n")).unwrap();
            let g = s.build_grid().unwrap();
            let n = s.build_initial(&g).unwrap();
            assert_eq!(n.shape(), &[16, 8]);
            assert_eq!(n.physicality_violations(), 0, "{kind}");
        }
    }

    #[test]
    fn gaussian_bump_has_requested_mass() {
        let s = parse("model = \"qdd\"\n[initial]\nkind = \"gaussian-bump\"\nbackground = 0.5\namplitude = 2.0\n").unwrap();
        let g = s.build_grid().unwrap();
        let n = s.build_initial(&g).unwrap();
        let area = g.spec().lx1 * g.spec().lx2;
        assert!((n.total_charge(&g) - (0.5 * area + 2.0)).abs() < 1e-10);
        let exact = s.heat_reference(&g, 0.0).unwrap();
        assert!((&exact - n.charge()).iter().all(|d| d.abs() < 1e-14));
    }
}
