use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_segment_dist2, AxisBox, Coord};
use crate::point_process::{self, PointConfiguration};
use crate::rng;

use super::EdgeSet;

/// Radius assignment for tubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TubeRadius {
    Constant { radius: f64 },
    /// Independent uniform radius per edge in `[min, max]`.
    Uniform { min: f64, max: f64, seed: u64 },
}

/// Radius assignment for balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BallRadiusRule {
    Fixed { radius: f64 },
    /// Common radius `theta * min_{i != j} |x_i - x_j|`.
    MinDistanceFraction { theta: f64 },
    /// I.i.d. uniform radii on `[0, min(max, theta * min pairwise distance)]`.
    IidUniformCapped { max: f64, theta: f64 },
    /// `min(radius, theta * nearest-neighbour distance)` per point.
    NearestNeighborCapped { radius: f64, theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObstacleShape {
    /// Closed tubes `{x : dist(x, [x_i, x_j]) <= radii[e]}` around edges.
    Tubes { edges: EdgeSet, radii: Vec<f64> },
    /// Closed balls `B(x_i, radii[i])`.
    Balls { radii: Vec<f64> },
}

/// The obstacle set `F` (or `F^ε` once scaled).
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSet {
    pub points: PointConfiguration,
    pub shape: ObstacleShape,
    /// Product of all scale factors applied since construction.
    pub scale_applied: f64,
    pub warnings: Vec<String>,
}

impl ObstacleSet {
    pub fn empty(points: PointConfiguration) -> Self {
        ObstacleSet {
            points,
            shape: ObstacleShape::Balls { radii: Vec::new() },
            scale_applied: 1.0,
            warnings: Vec::new(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.shape {
            ObstacleShape::Tubes { .. } => "tubes",
            ObstacleShape::Balls { .. } => "balls",
        }
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// Number of elementary pieces (tubes or balls).
    pub fn len(&self) -> usize {
        match &self.shape {
            ObstacleShape::Tubes { edges, .. } => edges.len(),
            ObstacleShape::Balls { radii } => radii.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Radius of the thinnest piece.
    pub fn min_feature_radius(&self) -> Option<f64> {
        match &self.shape {
            ObstacleShape::Tubes { radii, .. } | ObstacleShape::Balls { radii } => {
                radii.iter().copied().reduce(f64::min)
            }
        }
    }

    /// Membership predicate of the closed obstacle set; the indicator
    /// `a(x) = 1 - min(1, 1_F(x))` is `!contains(x)`.
    pub fn contains(&self, p: &Coord) -> bool {
        self.pieces().any(|piece| piece.contains(p))
    }

    pub(crate) fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        let pts = &self.points.points;
        let (tubes, balls) = match &self.shape {
            ObstacleShape::Tubes { edges, radii } => (Some((edges, radii)), None),
            ObstacleShape::Balls { radii } => (None, Some(radii)),
        };
        let t = tubes.into_iter().flat_map(move |(edges, radii)| {
            edges.edges.iter().zip(radii).map(move |(&(i, j), &r)| Piece::Tube {
                a: pts[i],
                b: pts[j],
                radius: r,
            })
        });
        let b = balls.into_iter().flat_map(move |radii| {
            pts.iter().zip(radii).map(|(&c, &r)| Piece::Ball { center: c, radius: r })
        });
        t.chain(b)
    }

    /// True if every pair of balls satisfies `|c_i - c_j| >= r_i + r_j`.
    pub fn balls_disjoint(&self) -> bool {
        let ObstacleShape::Balls { radii } = &self.shape else {
            return true;
        };
        let pts = &self.points.points;
        let rmax = radii.iter().copied().fold(0.0, f64::max);
        if pts.len() < 2 || rmax == 0.0 {
            return true;
        }
        let index = super::CellIndex::new(pts, &self.points.bbox, 2.0 * rmax);
        pts.iter().enumerate().all(|(i, p)| {
            let mut ok = true;
            index.for_each_within(pts, p, 2.0 * rmax, |j, d| {
                if j != i && d < radii[i] + radii[j] {
                    ok = false;
                }
            });
            ok
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Piece {
    Tube { a: Coord, b: Coord, radius: f64 },
    Ball { center: Coord, radius: f64 },
}

impl Piece {
    #[inline]
    pub(crate) fn contains(&self, p: &Coord) -> bool {
        match self {
            Piece::Tube { a, b, radius } => point_segment_dist2(p, a, b) <= radius * radius,
            Piece::Ball { center, radius } => {
                let d = crate::geom::sub(p, center);
                crate::geom::norm2(&d) <= radius * radius
            }
        }
    }

    /// A ball containing the piece.
    pub(crate) fn enclosing_ball(&self) -> (Coord, f64) {
        match self {
            Piece::Tube { a, b, radius } => {
                let mut m = [0.0; 3];
                for d in 0..3 {
                    m[d] = 0.5 * (a[d] + b[d]);
                }
                (m, 0.5 * crate::geom::dist(a, b) + radius)
            }
            Piece::Ball { center, radius } => (*center, *radius),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub(crate) fn bounds(&self) -> (Coord, Coord) {
        match self {
            Piece::Tube { a, b, radius } => {
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for d in 0..3 {
                    lo[d] = a[d].min(b[d]) - radius;
                    hi[d] = a[d].max(b[d]) + radius;
                }
                (lo, hi)
            }
            Piece::Ball { center, radius } => {
                let mut lo = *center;
                let mut hi = *center;
                for d in 0..3 {
                    lo[d] -= radius;
                    hi[d] += radius;
                }
                (lo, hi)
            }
        }
    }
}

/// Tubes of the given radius around every edge.
///
/// `c1` is the inner radius of the connection annulus; a radius above
/// `c1 / 2` is allowed but recorded as a warning.
pub fn build_tubes(
    config: &PointConfiguration,
    edges: &EdgeSet,
    radius: &TubeRadius,
    c1: Option<f64>,
) -> Result<ObstacleSet> {
    if let Some(&(i, j)) = edges.edges.iter().find(|&&(i, j)| i >= config.len() || j >= config.len()) {
        return Err(Error::invalid(format!("edge ({i}, {j}) out of range")));
    }
    let radii: Vec<f64> = match radius {
        TubeRadius::Constant { radius } => {
            if !(*radius > 0.0) || !radius.is_finite() {
                return Err(Error::invalid("tube radius must be positive"));
            }
            vec![*radius; edges.len()]
        }
        TubeRadius::Uniform { min, max, seed } => {
            if !(*min > 0.0) || !(max >= min) || !max.is_finite() {
                return Err(Error::invalid("tube radius range must satisfy 0 < min <= max"));
            }
            let mut r = rng::stream(*seed);
            edges
                .edges
                .iter()
                .map(|_| min + (max - min) * r.random::<f64>())
                .collect()
        }
    };
    let mut warnings = Vec::new();
    if let (Some(c1), Some(rmax)) = (c1, radii.iter().copied().reduce(f64::max)) {
        if rmax > 0.5 * c1 {
            warnings.push(format!(
                "tube radius {rmax} exceeds c1/2 = {}; tubes from one point may merge",
                0.5 * c1
            ));
        }
    }
    Ok(ObstacleSet {
        points: config.clone(),
        shape: ObstacleShape::Tubes {
            edges: edges.clone(),
            radii,
        },
        scale_applied: 1.0,
        warnings,
    })
}

/// Balls centred at every point.
pub fn build_balls(config: &PointConfiguration, rule: &BallRadiusRule, seed: u64) -> Result<ObstacleSet> {
    let n = config.len();
    let min_distance = || -> Result<f64> {
        point_process::min_pairwise_distance(config).ok_or_else(|| {
            Error::DegenerateConfiguration(
                "minimum pairwise distance needs at least two points".into(),
            )
        })
    };
    let check_theta = |theta: f64| -> Result<()> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::invalid(format!("theta must be positive, got {theta}")));
        }
        Ok(())
    };
    let mut warnings = Vec::new();
    let radii = match *rule {
        BallRadiusRule::Fixed { radius } => {
            if !(radius > 0.0) || !radius.is_finite() {
                return Err(Error::invalid("ball radius must be positive"));
            }
            vec![radius; n]
        }
        BallRadiusRule::MinDistanceFraction { theta } => {
            check_theta(theta)?;
            vec![theta * min_distance()?; n]
        }
        BallRadiusRule::IidUniformCapped { max, theta } => {
            check_theta(theta)?;
            let cap = max.min(theta * min_distance()?);
            let mut r = rng::stream(seed);
            (0..n).map(|_| cap * r.random::<f64>()).collect()
        }
        BallRadiusRule::NearestNeighborCapped { radius, theta } => {
            check_theta(theta)?;
            if !(radius > 0.0) {
                return Err(Error::invalid("ball radius must be positive"));
            }
            point_process::nearest_neighbor_distances(config)
                .into_iter()
                .map(|d| radius.min(theta * d))
                .collect()
        }
    };
    let theta = match *rule {
        BallRadiusRule::MinDistanceFraction { theta }
        | BallRadiusRule::IidUniformCapped { theta, .. }
        | BallRadiusRule::NearestNeighborCapped { theta, .. } => Some(theta),
        BallRadiusRule::Fixed { .. } => None,
    };
    if theta.is_some_and(|t| t > 0.5) {
        warnings.push("theta > 1/2: balls may intersect".to_string());
    }
    Ok(ObstacleSet {
        points: config.clone(),
        shape: ObstacleShape::Balls { radii },
        scale_applied: 1.0,
        warnings,
    })
}

/// Multiplies centres, radii and edge geometry by `eps`.
pub fn scale_obstacles(obstacles: &ObstacleSet, eps: f64) -> Result<ObstacleSet> {
    let points = point_process::scale(&obstacles.points, eps)?;
    let shape = match &obstacles.shape {
        ObstacleShape::Tubes { edges, radii } => ObstacleShape::Tubes {
            edges: edges.clone(),
            radii: radii.iter().map(|r| r * eps).collect(),
        },
        ObstacleShape::Balls { radii } => ObstacleShape::Balls {
            radii: radii.iter().map(|r| r * eps).collect(),
        },
    };
    Ok(ObstacleSet {
        points,
        shape,
        scale_applied: obstacles.scale_applied * eps,
        warnings: obstacles.warnings.clone(),
    })
}

/// Monte Carlo estimate of `|F ∩ region|` from `probes` uniform samples.
pub fn monte_carlo_volume(obstacles: &ObstacleSet, region: &AxisBox, probes: usize, seed: u64) -> f64 {
    let pieces: Vec<Piece> = obstacles.pieces().collect();
    let mut r = rng::stream(seed);
    let mut hits = 0usize;
    for _ in 0..probes {
        let mut p = [0.0; 3];
        for d in 0..region.dim {
            p[d] = region.lower[d] + region.side(d) * r.random::<f64>();
        }
        if pieces.iter().any(|pc| pc.contains(&p)) {
            hits += 1;
        }
    }
    region.volume() * hits as f64 / probes as f64
}

/// Exhaustive pair check used as a test oracle.
#[cfg(test)]
pub(crate) fn balls_disjoint_brute(obstacles: &ObstacleSet) -> bool {
    let ObstacleShape::Balls { radii } = &obstacles.shape else {
        return true;
    };
    let pts = &obstacles.points.points;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if crate::geom::dist(&pts[i], &pts[j]) < radii[i] + radii[j] {
                return false;
            }
        }
    }
    true
}
