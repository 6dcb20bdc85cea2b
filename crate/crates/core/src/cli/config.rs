//! Run configuration in TOML.
//!
//! ```toml
//! gamma = 0.0
//! epsilon = 0.1              # or eps_sequence = [0.1, 0.05, 0.025]
//! delta = 0.17               # optional, defaults to half the admissible maximum
//! ramp = "linear"            # or "smoothstep"
//! dim = 1
//! geometry = "box"           # 2D only: "box" or "disk"
//! R = 1.0
//! h = 0.001
//! stencil = "line"           # "line" (1D), "eight" or "sixteen" (2D)
//! boundary = "radial_compat" # or a number, or a table (see below)
//! output_dir = "runs"
//! deterministic = true
//!
//! [boundary]                 # table form
//! kind = "constant"          # radial_compat | radial_limit | constant | tabulated
//! value = 1.0                # constant only
//! file = "data.csv"          # tabulated only, last column in grid order
//! pin_origin = false
//! [[boundary.plateau]]
//! center = [0.0, 0.0]
//! radius = 0.25
//! value = 0.0
//!
//! [solver]                   # tol, max_iters, damping_safety, log_every, sweep
//! [analysis]                 # checks, kappa_0, kappa, rho_max, radii, iota
//! [verify]                   # etas, samples, radial_tol
//! [sweep]                    # gammas
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discrete::{DirectionSet, Geometry, Grid, Stencil};
use crate::error::{Error, Result};
use crate::model::{derive_params, ProblemParams, RampShape};
use crate::solver::{BoundaryDatum, BoundarySpec, Plateau, ProblemTemplate, SolveOptions, Sweep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    RadialCompat,
    RadialLimit,
    Constant,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub kind: BoundaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub pin_origin: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plateau: Vec<Plateau>,
}

impl BoundaryConfig {
    fn of_kind(kind: BoundaryKind) -> Self {
        BoundaryConfig {
            kind,
            value: None,
            file: None,
            pin_origin: false,
            plateau: Vec::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoundaryInput {
    Named(BoundaryKind),
    Constant(f64),
    Table(BoundaryConfig),
}

fn boundary_input<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<BoundaryConfig, D::Error> {
    Ok(match BoundaryInput::deserialize(d)? {
        BoundaryInput::Named(kind) => BoundaryConfig::of_kind(kind),
        BoundaryInput::Constant(c) => BoundaryConfig {
            value: Some(c),
            ..BoundaryConfig::of_kind(BoundaryKind::Constant)
        },
        BoundaryInput::Table(t) => t,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Growth,
    Oscillation,
    Nondegeneracy,
    Flatness,
    Gradient,
    Density,
    Porosity,
    Scaling,
    Lipschitz,
}

impl CheckName {
    pub const ALL: [CheckName; 9] = [
        CheckName::Growth,
        CheckName::Oscillation,
        CheckName::Nondegeneracy,
        CheckName::Flatness,
        CheckName::Gradient,
        CheckName::Density,
        CheckName::Porosity,
        CheckName::Scaling,
        CheckName::Lipschitz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Growth => "growth",
            CheckName::Oscillation => "oscillation",
            CheckName::Nondegeneracy => "nondegeneracy",
            CheckName::Flatness => "flatness",
            CheckName::Gradient => "gradient",
            CheckName::Density => "density",
            CheckName::Porosity => "porosity",
            CheckName::Scaling => "scaling",
            CheckName::Lipschitz => "lipschitz",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub checks: Vec<CheckName>,
    /// Largest normalized radius of the oscillation scan.
    pub kappa_0: f64,
    /// Density ball radius; `R/8` when absent.
    pub kappa: Option<f64>,
    /// Largest radius of the flatness and porosity scans; `R/4` when absent.
    pub rho_max: Option<f64>,
    /// Growth-fit radii; dyadic in `[4h, R/2]` when absent.
    pub radii: Option<Vec<f64>>,
    pub iota: Vec<u32>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            checks: CheckName::ALL.to_vec(),
            kappa_0: 0.5,
            kappa: None,
            rho_max: None,
            radii: None,
            iota: vec![2, 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub etas: Vec<f64>,
    pub samples: usize,
    /// Allowed relative residual of the radial identity.
    pub radial_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            etas: vec![1.0, 2.0, 10.0],
            samples: 4000,
            radial_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gammas: vec![0.0, 0.3, 0.6, 0.9],
        }
    }
}

fn default_solver() -> SolveOptions {
    SolveOptions {
        tol: 1e-12,
        ..SolveOptions::newton()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverInput {
    tol: Option<f64>,
    max_iters: Option<usize>,
    damping_safety: Option<f64>,
    log_every: Option<usize>,
    sweep: Option<Sweep>,
}

/// Missing solver keys take the command-line defaults, not the library ones.
fn solver_input<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<SolveOptions, D::Error> {
    let i = SolverInput::deserialize(d)?;
    let base = match i.sweep {
        Some(Sweep::Jacobi) | Some(Sweep::GaussSeidel) => SolveOptions::default(),
        _ => default_solver(),
    };
    Ok(SolveOptions {
        tol: i.tol.unwrap_or(base.tol),
        max_iters: i.max_iters.unwrap_or(base.max_iters),
        damping_safety: i.damping_safety.unwrap_or(base.damping_safety),
        log_every: i.log_every.unwrap_or(base.log_every),
        sweep: i.sweep.unwrap_or(base.sweep),
    })
}

fn default_geometry() -> Geometry {
    Geometry::Box
}

fn default_output() -> PathBuf {
    PathBuf::from("runs")
}

fn yes() -> bool {
    true
}

/// Fully resolved run configuration; serializes back as the config echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_sequence: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub ramp: RampShape,
    pub dim: usize,
    #[serde(default = "default_geometry")]
    pub geometry: Geometry,
    #[serde(rename = "R")]
    pub radius: f64,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stencil: Option<Stencil>,
    #[serde(deserialize_with = "boundary_input")]
    pub boundary: BoundaryConfig,
    #[serde(default = "default_solver", deserialize_with = "solver_input")]
    pub solver: SolveOptions,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Run single-threaded unless a thread count is given explicitly.
    #[serde(default = "yes")]
    pub deterministic: bool,
    /// Directory relative paths are resolved against; not part of the echo.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub h: Option<f64>,
    pub gamma: Option<f64>,
    pub out: Option<PathBuf>,
}

/// 1-based line on which `path` (dotted, e.g. `solver.tol`) is assigned.
pub(crate) fn line_of(text: &str, path: &str) -> Option<usize> {
    let (table, leaf) = match path.rsplit_once('.') {
        Some((t, l)) => (t, l),
        None => ("", path),
    };
    let mut current = String::new();
    let mut table_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == table && table_line.is_none() {
                table_line = Some(i + 1);
            }
            continue;
        }
        let Some((key, _)) = line.split_once('=') else { continue };
        let key = key.trim().trim_matches('"');
        if current == table && key == leaf {
            return Some(i + 1);
        }
        if current.is_empty() && !table.is_empty() && key == table {
            table_line = table_line.or(Some(i + 1));
        }
    }
    table_line
}

fn config_error(text: &str, key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        line: line_of(text, key),
        message: message.into(),
    }
}

/// Parses, applies overrides and validates.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let de = toml::Deserializer::new(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        let key = match message.split('`').nth(1) {
            Some(name) if message.starts_with("unknown field") && !path.ends_with(name) => {
                if path == "." || path.is_empty() {
                    name.to_string()
                } else {
                    format!("{path}.{name}")
                }
            }
            _ => path,
        };
        let line = inner
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .or_else(|| line_of(text, &key));
        Error::Config { key, line, message }
    })?;
    if let Some(h) = overrides.h {
        cfg.h = h;
    }
    if let Some(g) = overrides.gamma {
        cfg.gamma = g;
    }
    if let Some(out) = &overrides.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate(text)?;
    Ok(cfg)
}

/// Reads and parses a config file; relative paths in it resolve against its directory.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text, overrides)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(cfg)
}

impl RunConfig {
    fn validate(&self, text: &str) -> Result<()> {
        let err = |key: &str, msg: String| config_error(text, key, msg);
        let eps = match (&self.epsilon, &self.eps_sequence) {
            (Some(_), Some(_)) => {
                return Err(err("eps_sequence", "give either epsilon or eps_sequence, not both".into()))
            }
            (None, None) => return Err(err("epsilon", "one of epsilon or eps_sequence is required".into())),
            (Some(e), None) => vec![*e],
            (None, Some(seq)) => {
                if seq.is_empty() {
                    return Err(err("eps_sequence", "must not be empty".into()));
                }
                if seq.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(err("eps_sequence", "must be strictly decreasing".into()));
                }
                seq.clone()
            }
        };
        let eps_key = if self.epsilon.is_some() { "epsilon" } else { "eps_sequence" };
        for &e in &eps {
            derive_params(self.gamma, e, self.delta).map_err(|e| match e {
                Error::ParameterDomain { field, value, constraint } => {
                    let key = if field == "epsilon" { eps_key } else { field };
                    err(key, format!("{value} violates {constraint}"))
                }
                other => other,
            })?;
        }
        if !(self.dim == 1 || self.dim == 2) {
            return Err(err("dim", format!("{} violates dim in {{1, 2}}", self.dim)));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(err("R", format!("{} violates R > 0", self.radius)));
        }
        let stencil = self.stencil();
        if (stencil == Stencil::Line) != (self.dim == 1) {
            return Err(err("stencil", format!("{stencil:?} stencil does not fit a {}D grid", self.dim)));
        }
        self.grid().map_err(|e| err("h", e.to_string()))?;
        let b = &self.boundary;
        match b.kind {
            BoundaryKind::Constant => match b.value {
                Some(v) if v.is_finite() && v >= 0.0 => {}
                Some(v) => return Err(err("boundary.value", format!("{v} violates value >= 0"))),
                None => return Err(err("boundary.value", "required for a constant boundary".into())),
            },
            BoundaryKind::Tabulated if b.file.is_none() => {
                return Err(err("boundary.file", "required for a tabulated boundary".into()))
            }
            _ => {}
        }
        for p in &b.plateau {
            if !(p.radius >= 0.0 && p.value >= 0.0 && p.value.is_finite()) {
                return Err(err("boundary.plateau", "radius and value must be >= 0".into()));
            }
        }
        self.solver.validate().map_err(|e| match e {
            Error::ParameterDomain { field, value, constraint } => {
                err(&format!("solver.{field}"), format!("{value} violates {constraint}"))
            }
            other => other,
        })?;
        let a = &self.analysis;
        if !(a.kappa_0 > 0.0) {
            return Err(err("analysis.kappa_0", format!("{} violates kappa_0 > 0", a.kappa_0)));
        }
        for (key, v) in [("analysis.kappa", a.kappa), ("analysis.rho_max", a.rho_max)] {
            if let Some(v) = v {
                if !(v > 0.0 && v <= self.radius) {
                    return Err(err(key, format!("{v} violates 0 < value <= R")));
                }
            }
        }
        if let Some(radii) = &a.radii {
            if radii.iter().any(|r| !(*r > 0.0)) {
                return Err(err("analysis.radii", "radii must be positive".into()));
            }
        }
        if a.iota.iter().any(|i| !i.is_power_of_two() || *i < 2) {
            return Err(err("analysis.iota", "each iota must be a power of two >= 2".into()));
        }
        if self.verify.etas.iter().any(|e| !(*e >= 1.0)) {
            return Err(err("verify.etas", "each eta must be >= 1".into()));
        }
        if self.verify.samples < 100 {
            return Err(err("verify.samples", format!("{} violates samples >= 100", self.verify.samples)));
        }
        if self.sweep.gammas.iter().any(|g| !(0.0..1.0).contains(g)) {
            return Err(err("sweep.gammas", "each gamma must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil.unwrap_or(if self.dim == 1 { Stencil::Line } else { Stencil::Eight })
    }

    /// ε values in solve order.
    pub fn epsilons(&self) -> Vec<f64> {
        match (&self.epsilon, &self.eps_sequence) {
            (_, Some(seq)) => seq.clone(),
            (Some(e), None) => vec![*e],
            (None, None) => Vec::new(),
        }
    }

    /// Parameters at the first ε.
    pub fn params(&self) -> Result<ProblemParams> {
        let eps = self.epsilons().first().copied().unwrap_or(f64::NAN);
        Ok(derive_params(self.gamma, eps, self.delta)?.with_ramp(self.ramp))
    }

    pub fn grid(&self) -> Result<Grid> {
        let dirs = DirectionSet::new(self.stencil());
        match self.dim {
            1 => Grid::interval(self.radius, self.h),
            _ => Grid::plane(self.radius, self.h, self.geometry, dirs.reach()),
        }
    }

    pub fn template(&self) -> Result<ProblemTemplate> {
        let grid = self.grid()?;
        let b = &self.boundary;
        let datum = match b.kind {
            BoundaryKind::RadialCompat => BoundaryDatum::RadialCompat,
            BoundaryKind::RadialLimit => BoundaryDatum::RadialLimit,
            BoundaryKind::Constant => BoundaryDatum::Constant {
                value: b.value.unwrap_or(0.0),
            },
            BoundaryKind::Tabulated => BoundaryDatum::Tabulated {
                values: self.read_table(&grid)?,
            },
        };
        let mut spec = BoundarySpec::new(datum);
        spec.pin_origin = b.pin_origin;
        spec.plateaus = b.plateau.clone();
        Ok(ProblemTemplate::new(self.params()?, grid, DirectionSet::new(self.stencil()), spec))
    }

    fn read_table(&self, grid: &Grid) -> Result<Vec<f64>> {
        let rel = self.boundary.file.as_ref().expect("validated");
        let path = self.base_dir.join(rel);
        let text = std::fs::read_to_string(&path)?;
        let mut values = Vec::with_capacity(grid.len());
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let last = line.rsplit(',').next().unwrap_or("").trim();
            let v: f64 = last.parse().map_err(|_| Error::Config {
                key: "boundary.file".into(),
                line: None,
                message: format!("{}: row {} has no numeric last column", path.display(), i + 1),
            })?;
            values.push(v);
        }
        Ok(values)
    }

    /// Same configuration at another γ.
    pub fn with_gamma(&self, gamma: f64) -> RunConfig {
        RunConfig {
            gamma,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "gamma = 0\ndim = 1\nR = 1\nh = 0.001\nboundary = \"radial_compat\"\nepsilon = 0.1\n";

    #[test]
    fn minimal_config_is_valid() {
        let cfg = parse_config(MINIMAL, &Overrides::default()).unwrap();
        assert_eq!(cfg.boundary.kind, BoundaryKind::RadialCompat);
        assert_eq!(cfg.epsilons(), vec![0.1]);
        assert_eq!(cfg.stencil(), Stencil::Line);
        assert_eq!(cfg.solver.sweep, Sweep::Newton);
        assert_eq!(cfg.analysis.checks.len(), CheckName::ALL.len());
        cfg.template().unwrap().problem().unwrap();
    }

    #[test]
    fn delta_above_bound_names_the_bound() {
        let text = format!("{MINIMAL}delta = 0.5\n");
        let e = parse_config(&text, &Overrides::default()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("`delta`") && msg.contains("line 7"), "{msg}");
        assert!(msg.contains("3.40710"), "{msg}");
    }

    #[test]
    fn eps_sequence_configures_continuation() {
        let text = MINIMAL.replace("epsilon = 0.1", "eps_sequence = [0.1, 0.05, 0.025]");
        let cfg = parse_config(&text, &Overrides::default()).unwrap();
        assert_eq!(cfg.epsilons(), vec![0.1, 0.05, 0.025]);
        let bad = MINIMAL.replace("epsilon = 0.1", "eps_sequence = [0.1, 0.2]");
        assert!(parse_config(&bad, &Overrides::default()).is_err());
    }

    #[test]
    fn unknown_keys_and_type_errors_carry_key_and_line() {
        let text = format!("{MINIMAL}\n[solver]\ntol = 1e-9\n");
        let cfg = parse_config(&text, &Overrides::default()).unwrap();
        assert_eq!((cfg.solver.tol, cfg.solver.sweep), (1e-9, Sweep::Newton));
        let text = format!("{MINIMAL}\n[solver]\ntol = 1e-9\nbogus = 1\n");
        match parse_config(&text, &Overrides::default()).unwrap_err() {
            Error::Config { key, line, .. } => {
                assert_eq!(key, "solver.bogus");
                assert_eq!(line, Some(10));
            }
            e => panic!("{e}"),
        }
        let text = MINIMAL.replace("h = 0.001", "h = \"small\"");
        match parse_config(&text, &Overrides::default()).unwrap_err() {
            Error::Config { key, line, .. } => {
                assert_eq!(key, "h");
                assert_eq!(line, Some(4));
            }
            e => panic!("{e}"),
        }
        let text = format!("{MINIMAL}\n[solver]\ntol = -1.0\n");
        match parse_config(&text, &Overrides::default()).unwrap_err() {
            Error::Config { key, line, message } => {
                assert_eq!(key, "solver.tol");
                assert_eq!(line, Some(9));
                assert!(message.contains("tol > 0"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn boundary_forms_and_overrides() {
        let text = MINIMAL.replace("boundary = \"radial_compat\"", "boundary = 2.5");
        let cfg = parse_config(&text, &Overrides::default()).unwrap();
        assert_eq!((cfg.boundary.kind, cfg.boundary.value), (BoundaryKind::Constant, Some(2.5)));

        let text = "gamma = 0.5\nepsilon = 0.05\ndim = 2\nR = 1\nh = 0.125\n\
                    [boundary]\nkind = \"constant\"\nvalue = 1.0\n\
                    [[boundary.plateau]]\ncenter = [0.0, 0.0]\nradius = 0.25\nvalue = 0.0\n";
        let o = Overrides { h: Some(0.0625), gamma: Some(0.3), out: None };
        let cfg = parse_config(text, &o).unwrap();
        assert_eq!((cfg.h, cfg.gamma), (0.0625, 0.3));
        assert_eq!(cfg.boundary.plateau.len(), 1);
        assert_eq!(cfg.stencil(), Stencil::Eight);
        assert!(cfg.template().unwrap().grid.interior_nodes().count() > 0);

        let bad = MINIMAL.replace("h = 0.001", "h = 0.3");
        match parse_config(&bad, &Overrides::default()).unwrap_err() {
            Error::Config { key, .. } => assert_eq!(key, "h"),
            e => panic!("{e}"),
        }
    }
}
