use crate::capacity::MaskFamily;
use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::point_process::{self, PointConfiguration};
use crate::random_geometry::{
    build_balls, build_rcm_edges, build_tubes, rasterize_with, scale_obstacles, ObstacleSet, PerforatedMask,
    RasterOptions,
};
use crate::rng;

use super::spec::{scale_ball_rule, scale_tube_radius, ModelKind, SweepSpec};

/// Stream identifier for geometry realizations in the seed path.
pub const STAGE_GEOMETRY: u64 = 1;

/// One realization of the random medium at scale `eps`.
#[derive(Debug, Clone)]
pub struct Realization {
    pub eps: f64,
    pub replica: usize,
    pub seed: u64,
    /// Unscaled configuration in `D / eps`.
    pub points: PointConfiguration,
    /// Obstacles after scaling by `eps`.
    pub obstacles: ObstacleSet,
    pub mask: PerforatedMask,
}

/// Seed of the realization `(eps, replica)`: `[STAGE_GEOMETRY, bits(eps), replica]`.
pub fn realization_seed(master: u64, eps: f64, replica: usize) -> u64 {
    rng::derive_seed(master, &[STAGE_GEOMETRY, eps.to_bits(), replica as u64])
}

/// Samples points in `D / eps`, builds the obstacles with radii scaled by
/// `eps^(s-1)`, scales everything by `eps` and rasterizes.
pub fn realize(spec: &SweepSpec, eps: f64, replica: usize) -> Result<Realization> {
    let seed = realization_seed(spec.seed, eps, replica);
    let domain = spec.domain;
    let unscaled = domain.scaled(1.0 / eps);
    let points = point_process::sample_poisson(&unscaled, spec.intensity, rng::derive_seed(seed, &[0]))?;
    let factor = eps.powf(spec.geometry.exponent(domain.dim)? - 1.0);
    let raw = if points.is_empty() {
        ObstacleSet::empty(points.clone())
    } else {
        match spec.model {
            ModelKind::Boolean => {
                let rule = spec
                    .geometry
                    .ball_radius
                    .as_ref()
                    .ok_or_else(|| Error::invalid("boolean model needs a ball radius rule"))?;
                build_balls(&points, &scale_ball_rule(rule, factor), rng::derive_seed(seed, &[1]))?
            }
            ModelKind::Rcm => {
                let g = spec
                    .geometry
                    .connectivity
                    .as_ref()
                    .ok_or_else(|| Error::invalid("rcm model needs a connectivity function"))?;
                let radius = spec
                    .geometry
                    .tube_radius
                    .as_ref()
                    .ok_or_else(|| Error::invalid("rcm model needs a tube radius"))?;
                let edges = build_rcm_edges(&points, g, rng::derive_seed(seed, &[2]));
                build_tubes(&points, &edges, &scale_tube_radius(radius, factor), Some(g.inner_radius()))?
            }
        }
    };
    let obstacles = scale_obstacles(&raw, eps)?;
    let mut mask = rasterize_with(
        &obstacles,
        &domain,
        spec.grid.dx,
        &RasterOptions {
            hole_model: spec.hole_model,
        },
    )?;
    mask.epsilon = eps;
    Ok(Realization {
        eps,
        replica,
        seed,
        points,
        obstacles,
        mask,
    })
}

/// Mask family drawing fresh realizations from a sweep spec.
pub struct SpecFamily<'a>(pub &'a SweepSpec);

impl MaskFamily for SpecFamily<'_> {
    fn domain(&self) -> AxisBox {
        self.0.domain
    }

    fn seed(&self, eps: f64, replica: usize) -> u64 {
        realization_seed(self.0.seed, eps, replica)
    }

    fn mask(&self, eps: f64, replica: usize) -> Result<PerforatedMask> {
        Ok(realize(self.0, eps, replica)?.mask)
    }
}

/// Mask family over realizations that already exist, so that the capacity
/// estimate and the PDE solves see the same media.
pub struct PrebuiltFamily<'a> {
    pub domain: AxisBox,
    pub realizations: &'a [Realization],
}

impl MaskFamily for PrebuiltFamily<'_> {
    fn domain(&self) -> AxisBox {
        self.domain
    }

    fn seed(&self, eps: f64, replica: usize) -> u64 {
        self.find(eps, replica).map_or(0, |r| r.seed)
    }

    fn mask(&self, eps: f64, replica: usize) -> Result<PerforatedMask> {
        self.find(eps, replica)
            .map(|r| r.mask.clone())
            .ok_or_else(|| Error::invalid(format!("no realization for eps = {eps}, replica {replica}")))
    }
}

impl PrebuiltFamily<'_> {
    fn find(&self, eps: f64, replica: usize) -> Option<&Realization> {
        self.realizations.iter().find(|r| r.eps == eps && r.replica == replica)
    }
}
