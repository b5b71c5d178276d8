//! Config files: one JSON object naming a command and carrying the section
//! for it. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use randhom::capacity::Truncation;
use randhom::homogenization::{ErgodicSpec, GeometrySpec, GridRule, ModelKind, SourceSpec, SweepSpec};
use randhom::random_geometry::HoleModel;
use randhom::{AxisBox, Coord};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Command {
    Geometry,
    Solve,
    Capacity,
    Sweep,
    Ergodic,
    DensityCheck,
}

impl Command {
    /// Key of the config section for this command.
    pub fn section(self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Solve => "solve",
            Command::Capacity => "capacity",
            Command::Sweep => "sweep",
            Command::Ergodic => "ergodic",
            Command::DensityCheck => "density_check",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::DensityCheck => "density-check",
            c => c.section(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub format_version: u32,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ergodic: Option<ErgodicSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_check: Option<DensityCheckConfig>,
}

/// One realization at scale `epsilon`, drawn exactly as replica 0 of a sweep
/// with the same seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub model: ModelKind,
    pub domain: AxisBox,
    pub intensity: f64,
    pub geometry: GeometrySpec,
    pub epsilon: f64,
    pub dx: f64,
    #[serde(default)]
    pub hole_model: HoleModel,
    pub seed: u64,
    /// Width of the boundary layer counted in the stats.
    #[serde(default = "default_layer")]
    pub boundary_layer: f64,
}

fn default_layer() -> f64 {
    0.1
}

impl GeometryConfig {
    pub fn as_sweep(&self) -> SweepSpec {
        SweepSpec {
            model: self.model,
            domain: self.domain,
            intensity: self.intensity,
            geometry: self.geometry.clone(),
            epsilons: vec![self.epsilon],
            hs: Vec::new(),
            reaction: 1.0,
            source: SourceSpec::Constant(-1.0),
            grid: GridRule {
                dx: self.dx,
                min_feature_cells: 2.0,
                min_cube_cells: 32.0,
            },
            replicas: 1,
            seed: self.seed,
            hole_model: self.hole_model,
            c_override: None,
            tol: 1e-8,
            capacity_bound: None,
        }
    }

    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Err(e) = AxisBox::new(self.domain.dim, self.domain.lower, self.domain.upper) {
            out.push(format!("domain: {e}"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            out.push(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if !(self.dx > 0.0) {
            out.push("dx must be positive".into());
        }
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            out.push(format!("intensity must be finite and >= 0, got {}", self.intensity));
        }
        match self.model {
            ModelKind::Boolean if self.geometry.ball_radius.is_none() => {
                out.push("boolean model needs geometry.ball_radius".into())
            }
            ModelKind::Rcm if self.geometry.connectivity.is_none() || self.geometry.tube_radius.is_none() => {
                out.push("rcm model needs geometry.connectivity and geometry.tube_radius".into())
            }
            _ => {}
        }
        if let Err(e) = self.geometry.exponent(self.domain.dim) {
            out.push(format!("geometry.exponent: {e}"));
        }
        out
    }
}

/// Right-hand side given inline or as a grid-field file on the mask grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceInput {
    Value(SourceSpec),
    File(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub geometry: GeometryConfig,
    #[serde(default = "default_reaction")]
    pub reaction: f64,
    pub source: SourceInput,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_reaction() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapacityConfig {
    /// Newton capacity of one ball, refined over `dxs` and extrapolated.
    BallOracle {
        radius: f64,
        outer_radius: f64,
        /// Decreasing spacings; the last two feed the extrapolation.
        dxs: Vec<f64>,
        #[serde(default = "default_truncation")]
        truncation: Truncation,
        #[serde(default = "default_capacity_tol")]
        tol: f64,
    },
    /// Local capacities of a sweep family and the strange term.
    Strange { spec: SweepSpec },
    /// Conductivity tensor of a cube cut from one realization.
    Tensor {
        geometry: GeometryConfig,
        center: Coord,
        h: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default = "default_capacity_tol")]
        tol: f64,
    },
}

fn default_truncation() -> Truncation {
    Truncation::Sphere
}

fn default_gamma() -> f64 {
    1.0
}

fn default_capacity_tol() -> f64 {
    1e-10
}

impl CapacityConfig {
    pub fn diagnostics(&self) -> (Vec<String>, Vec<String>) {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        match self {
            CapacityConfig::BallOracle {
                radius,
                outer_radius,
                dxs,
                tol,
                ..
            } => {
                if !(*radius > 0.0 && radius < outer_radius) {
                    errors.push(format!("need 0 < radius < outer_radius, got {radius} and {outer_radius}"));
                }
                if dxs.len() < 2 {
                    errors.push("need at least two spacings to extrapolate".into());
                }
                if dxs.iter().any(|d| !(*d > 0.0)) || dxs.windows(2).any(|w| !(w[1] < w[0])) {
                    errors.push("dxs must be positive and strictly decreasing".into());
                }
                if !(*tol > 0.0) {
                    errors.push("tol must be positive".into());
                }
            }
            CapacityConfig::Strange { spec } => {
                let (e, w) = spec.diagnostics();
                errors.extend(e);
                warnings.extend(w);
                if spec.hs.is_empty() {
                    errors.push("strange mode needs at least one cube side in hs".into());
                }
            }
            CapacityConfig::Tensor {
                geometry, h, gamma, tol, ..
            } => {
                errors.extend(geometry.diagnostics());
                if !(*gamma > 0.0 && *gamma < 2.0) {
                    errors.push(format!("gamma must lie in (0, 2), got {gamma}"));
                }
                if !(*h > 0.0) {
                    errors.push(format!("cube side h must be positive, got {h}"));
                } else if *h <= geometry.epsilon {
                    errors.push(format!(
                        "scale ordering eps << h violated: eps = {} >= h = {h}",
                        geometry.epsilon
                    ));
                }
                if !(*tol > 0.0) {
                    errors.push("tol must be positive".into());
                }
            }
        }
        (errors, warnings)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityCheckConfig {
    pub geometry: GeometryConfig,
    pub radius: f64,
    pub probes: usize,
    #[serde(default = "default_true")]
    pub interior_only: bool,
}

fn default_true() -> bool {
    true
}

impl ConfigFile {
    /// Master seed of the active section; `None` for deterministic runs.
    pub fn seed_mut(&mut self) -> Option<&mut u64> {
        match self.command {
            Command::Geometry => self.geometry.as_mut().map(|g| &mut g.seed),
            Command::Solve => self.solve.as_mut().map(|s| &mut s.geometry.seed),
            Command::Capacity => match self.capacity.as_mut()? {
                CapacityConfig::BallOracle { .. } => None,
                CapacityConfig::Strange { spec } => Some(&mut spec.seed),
                CapacityConfig::Tensor { geometry, .. } => Some(&mut geometry.seed),
            },
            Command::Sweep => self.sweep.as_mut().map(|s| &mut s.seed),
            Command::Ergodic => self.ergodic.as_mut().map(|s| &mut s.seed),
            Command::DensityCheck => self.density_check.as_mut().map(|d| &mut d.geometry.seed),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.clone().seed_mut().map(|s| *s)
    }

    /// Every violated rule, plus warnings that do not block a run.
    pub fn diagnostics(&self) -> (Vec<String>, Vec<String>) {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        if self.format_version != FORMAT_VERSION {
            errors.push(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        let present = [
            ("geometry", self.geometry.is_some()),
            ("solve", self.solve.is_some()),
            ("capacity", self.capacity.is_some()),
            ("sweep", self.sweep.is_some()),
            ("ergodic", self.ergodic.is_some()),
            ("density_check", self.density_check.is_some()),
        ];
        for (key, here) in present {
            if here && key != self.command.section() {
                errors.push(format!("section `{key}` does not belong to command `{}`", self.command.name()));
            }
        }
        let missing = || format!("command `{}` needs a `{}` section", self.command.name(), self.command.section());
        match self.command {
            Command::Geometry => match &self.geometry {
                Some(g) => errors.extend(g.diagnostics()),
                None => errors.push(missing()),
            },
            Command::Solve => match &self.solve {
                Some(s) => {
                    errors.extend(s.geometry.diagnostics());
                    if !(s.reaction >= 0.0) {
                        errors.push(format!("reaction must be >= 0, got {}", s.reaction));
                    }
                    if !(s.tol > 0.0) {
                        errors.push("tol must be positive".into());
                    }
                }
                None => errors.push(missing()),
            },
            Command::Capacity => match &self.capacity {
                Some(c) => {
                    let (e, w) = c.diagnostics();
                    errors.extend(e);
                    warnings.extend(w);
                }
                None => errors.push(missing()),
            },
            Command::Sweep => match &self.sweep {
                Some(s) => {
                    let (e, w) = s.diagnostics();
                    errors.extend(e);
                    warnings.extend(w);
                }
                None => errors.push(missing()),
            },
            Command::Ergodic => match &self.ergodic {
                Some(s) => errors.extend(s.diagnostics()),
                None => errors.push(missing()),
            },
            Command::DensityCheck => match &self.density_check {
                Some(d) => {
                    errors.extend(d.geometry.diagnostics());
                    if !(d.radius > 0.0) || d.probes == 0 {
                        errors.push("radius and probes must be positive".into());
                    }
                }
                None => errors.push(missing()),
            },
        }
        (errors, warnings)
    }
}

/// Parses a config, reporting the line, column and field of any schema
/// violation.
pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(vec![format!("config: {e}")]))
}

/// Applies `key=value` overrides to the raw JSON. Dotted keys walk nested
/// objects, creating them as needed; values are read as JSON when they
/// parse and as strings otherwise.
pub fn apply_overrides(text: &str, sets: &[String]) -> Result<String, CliError> {
    if sets.is_empty() {
        return Ok(text.to_string());
    }
    let mut root: Value = serde_json::from_str(text).map_err(|e| CliError::Validation(vec![format!("config: {e}")]))?;
    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| CliError::Validation(vec![format!("override `{set}` is not key=value")]))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| CliError::Validation(vec![format!("override `{key}`: `{part}` is not inside an object")]))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
        }
    }
    Ok(serde_json::to_string_pretty(&root).expect("json value serializes"))
}
