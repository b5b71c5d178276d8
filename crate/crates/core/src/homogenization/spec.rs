use serde::{Deserialize, Serialize};

use crate::capacity::check_scales;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geom::AxisBox;
use crate::grid_solver::Source;
use crate::random_geometry::{BallRadiusRule, ConnectivityFunction, HoleModel, TubeRadius};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Boolean,
    Rcm,
}

/// Obstacle parameters in the unscaled picture (points of intensity
/// `intensity` in `D / eps`). Absolute radii are multiplied by
/// `eps^(exponent - 1)` before the configuration is scaled by `eps`, so the
/// physical obstacle size is `radius * eps^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    #[serde(default)]
    pub ball_radius: Option<BallRadiusRule>,
    #[serde(default)]
    pub connectivity: Option<ConnectivityFunction>,
    #[serde(default)]
    pub tube_radius: Option<TubeRadius>,
    /// Scaling exponent `s`; defaults to the critical `n / (n - 2)` in 3D.
    #[serde(default)]
    pub exponent: Option<f64>,
}

/// Right-hand side as written in configs: a number or an expression in
/// `x`, `y`, `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    Constant(f64),
    Expr(Expr),
}

impl SourceSpec {
    pub fn to_source(&self) -> Source {
        match self {
            SourceSpec::Constant(c) => Source::Constant(*c),
            SourceSpec::Expr(e) => Source::Expr(e.clone()),
        }
    }
}

/// Grid rule: a fixed spacing plus the resolution targets that are checked
/// against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRule {
    pub dx: f64,
    /// Cells across the smallest obstacle radius below which a resolution
    /// warning is attached.
    #[serde(default = "default_feature_cells")]
    pub min_feature_cells: f64,
    /// Cells across the smallest cube side below which a warning is attached.
    #[serde(default = "default_cube_cells")]
    pub min_cube_cells: f64,
}

fn default_feature_cells() -> f64 {
    2.0
}

fn default_cube_cells() -> f64 {
    32.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub domain: AxisBox,
    pub intensity: f64,
    pub geometry: GeometrySpec,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Cube sides for the strange-term estimate.
    pub hs: Vec<f64>,
    #[serde(default = "default_reaction")]
    pub reaction: f64,
    #[serde(default = "default_source")]
    pub source: SourceSpec,
    pub grid: GridRule,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default)]
    pub hole_model: HoleModel,
    /// Uses this value for `c` instead of the capacity pipeline (required
    /// in 2D).
    #[serde(default)]
    pub c_override: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Threshold `A` for `cap / h^n`.
    #[serde(default)]
    pub capacity_bound: Option<f64>,
}

fn default_reaction() -> f64 {
    1.0
}

fn default_source() -> SourceSpec {
    SourceSpec::Constant(-1.0)
}

fn default_tol() -> f64 {
    1e-8
}

/// Multiplies the absolute length parameters of a ball rule by `factor`.
pub fn scale_ball_rule(rule: &BallRadiusRule, factor: f64) -> BallRadiusRule {
    match *rule {
        BallRadiusRule::Fixed { radius } => BallRadiusRule::Fixed { radius: radius * factor },
        BallRadiusRule::MinDistanceFraction { theta } => BallRadiusRule::MinDistanceFraction { theta: theta * factor },
        BallRadiusRule::IidUniformCapped { max, theta } => BallRadiusRule::IidUniformCapped { max: max * factor, theta },
        BallRadiusRule::NearestNeighborCapped { radius, theta } => BallRadiusRule::NearestNeighborCapped {
            radius: radius * factor,
            theta,
        },
    }
}

pub fn scale_tube_radius(rule: &TubeRadius, factor: f64) -> TubeRadius {
    match *rule {
        TubeRadius::Constant { radius } => TubeRadius::Constant { radius: radius * factor },
        TubeRadius::Uniform { min, max, seed } => TubeRadius::Uniform {
            min: min * factor,
            max: max * factor,
            seed,
        },
    }
}

/// Largest absolute radius the geometry can produce at scale `eps`, after
/// scaling; `None` when the rule has no absolute bound.
pub fn nominal_radius(geometry: &GeometrySpec, dim: usize, eps: f64) -> Option<f64> {
    let f = eps.powf(geometry.exponent(dim).ok()?);
    match (&geometry.ball_radius, &geometry.tube_radius) {
        (Some(BallRadiusRule::Fixed { radius }), _) => Some(radius * f),
        (Some(BallRadiusRule::NearestNeighborCapped { radius, .. }), _) => Some(radius * f),
        (Some(BallRadiusRule::IidUniformCapped { max, .. }), _) => Some(max * f),
        (Some(BallRadiusRule::MinDistanceFraction { .. }), _) => None,
        (None, Some(TubeRadius::Constant { radius })) => Some(radius * f),
        (None, Some(TubeRadius::Uniform { min, .. })) => Some(min * f),
        (None, None) => None,
    }
}

impl GeometrySpec {
    pub fn exponent(&self, dim: usize) -> Result<f64> {
        match (self.exponent, dim) {
            (Some(s), _) => Ok(s),
            (None, 3) => Ok(3.0),
            (None, _) => Err(Error::invalid("geometry.exponent is required in 2D")),
        }
    }
}

impl SweepSpec {
    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    /// Every violated requirement, one message each. Hard errors come first
    /// in the returned pair, resolution warnings second.
    pub fn diagnostics(&self) -> (Vec<String>, Vec<String>) {
        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        if let Err(e) = AxisBox::new(self.domain.dim, self.domain.lower, self.domain.upper) {
            errors.push(format!("domain: {e}"));
        }
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            errors.push(format!("intensity must be finite and >= 0, got {}", self.intensity));
        }
        if self.epsilons.is_empty() {
            errors.push("epsilons: at least one value is required".into());
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            errors.push("epsilons must be strictly decreasing".into());
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            errors.push("epsilons must be positive".into());
        }
        if self.c_override.is_none() {
            if let Err(e) = check_scales(&self.hs, &self.epsilons) {
                errors.push(format!("scale ordering eps << h: {e}"));
            }
            if self.dim() != 3 {
                errors.push(format!(
                    "the capacity pipeline for c needs n = 3 (got n = {}); set c_override",
                    self.dim()
                ));
            }
        }
        if let Some(c) = self.c_override {
            if !(c >= 0.0) || !c.is_finite() {
                errors.push(format!("c_override must be >= 0, got {c}"));
            }
        }
        let diam = self.domain.diameter();
        if let Some(h) = self.hs.iter().copied().find(|&h| !(h > 0.0 && h < diam)) {
            errors.push(format!("cube side h = {h} must satisfy 0 < h < diam D = {diam}"));
        }
        if self.replicas == 0 {
            errors.push("replicas must be >= 1".into());
        }
        if !(self.reaction >= 0.0) || !self.reaction.is_finite() {
            errors.push(format!("reaction must be >= 0, got {}", self.reaction));
        }
        if !(self.tol > 0.0) {
            errors.push("tol must be positive".into());
        }
        match self.geometry.exponent(self.dim()) {
            Ok(s) if s > 0.0 && s.is_finite() => {}
            Ok(s) => errors.push(format!("exponent must be positive, got {s}")),
            Err(e) => errors.push(e.to_string()),
        }
        match self.model {
            ModelKind::Boolean => {
                if self.geometry.ball_radius.is_none() {
                    errors.push("boolean model needs geometry.ball_radius".into());
                }
            }
            ModelKind::Rcm => {
                match &self.geometry.connectivity {
                    None => errors.push("rcm model needs geometry.connectivity".into()),
                    Some(g) => {
                        if let Err(e) = g.validate() {
                            errors.push(format!("connectivity: {e}"));
                        }
                    }
                }
                if self.geometry.tube_radius.is_none() {
                    errors.push("rcm model needs geometry.tube_radius".into());
                }
            }
        }
        let dx = self.grid.dx;
        if !(dx > 0.0) || self.domain.divisions(dx, 1e-9).is_none() {
            errors.push(format!("grid.dx = {dx} must divide every side of the domain"));
        } else {
            for &eps in &self.epsilons {
                if let Some(r) = nominal_radius(&self.geometry, self.dim(), eps) {
                    if r < self.grid.min_feature_cells * dx {
                        warnings.push(format!(
                            "eps = {eps}: obstacle radius {r:.3e} spans fewer than {} cells of dx = {dx}",
                            self.grid.min_feature_cells
                        ));
                    }
                }
            }
            if let Some(h) = self.hs.iter().copied().reduce(f64::min) {
                if h < self.grid.min_cube_cells * dx {
                    warnings.push(format!(
                        "cube side {h} spans fewer than {} cells of dx = {dx}",
                        self.grid.min_cube_cells
                    ));
                }
            }
        }
        (errors, warnings)
    }

    /// Errors out on the first hard violation, listing all of them.
    pub fn validate(&self) -> Result<Vec<String>> {
        let (errors, warnings) = self.diagnostics();
        if errors.is_empty() {
            Ok(warnings)
        } else {
            Err(Error::invalid(errors.join("; ")))
        }
    }
}
