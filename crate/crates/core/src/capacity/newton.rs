use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AxisBox, Coord};
use crate::grid::Grid;
use crate::grid_solver::{cg_solve, CgOptions, LinearOperator};
use crate::random_geometry::{ObstacleSet, ObstacleShape};

/// Shape of the outer boundary on which the potential is set to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `v = 0` on the faces of the cube `[c - R, c + R]^3`.
    #[default]
    Cube,
    /// `v = 0` at nodes with `|x - c| >= R`.
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonCapacity {
    pub value: f64,
    pub dx: f64,
    pub outer_radius: f64,
    pub truncation: Truncation,
    pub iterations: usize,
    pub residual: f64,
    /// Nodes fixed to one (inside the obstacle).
    pub obstacle_nodes: usize,
    /// True when the octant reduction for a centred ball was used.
    pub octant: bool,
}

/// `4π / (1/r - 1/R)`: capacity of a ball of radius `r` relative to the
/// concentric sphere of radius `R`.
pub fn ball_capacity_truncated(r: f64, outer: f64) -> f64 {
    4.0 * std::f64::consts::PI / (1.0 / r - 1.0 / outer)
}

/// Grid Laplacian on a box whose low faces along `mirror` axes are symmetry
/// planes. Rows are scaled by `1/2` per symmetry plane through the node,
/// which makes the reduced operator symmetric.
struct MirrorStencil {
    grid: Grid,
    active: Vec<bool>,
    weight: Vec<f64>,
    coupling: f64,
    mirror: bool,
}

impl MirrorStencil {
    #[inline]
    fn neighbor_sum(&self, i: usize, x: &[f64]) -> f64 {
        let ijk = self.grid.ijk(i);
        let s = self.grid.strides();
        let mut acc = 0.0;
        for d in 0..3 {
            let up = x[i + s[d]];
            let down = if ijk[d] == 0 {
                debug_assert!(self.mirror);
                up
            } else {
                x[i - s[d]]
            };
            acc += up + down;
        }
        acc
    }
}

impl LinearOperator for MirrorStencil {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let diag = 6.0 * self.coupling;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = if self.active[i] {
                self.weight[i] * (diag * x[i] - self.coupling * self.neighbor_sum(i, x))
            } else {
                0.0
            };
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        let diag = 6.0 * self.coupling;
        self.active
            .iter()
            .zip(&self.weight)
            .map(|(&a, &w)| if a { w * diag } else { 0.0 })
            .collect()
    }
}

/// Newton capacity `inf ∫ |∇v|^2` over `v = 1` on the obstacle, truncated to
/// `v = 0` at distance `outer_radius` from `center`.
///
/// A single ball centred at `center` is solved on one octant with mirror
/// conditions; anything else uses the full box.
pub fn newton_capacity(
    obstacle: &ObstacleSet,
    center: Coord,
    outer_radius: f64,
    dx: f64,
    truncation: Truncation,
    tol: f64,
) -> Result<NewtonCapacity> {
    if obstacle.dim() != 3 {
        return Err(Error::UnsupportedDimension(obstacle.dim()));
    }
    if !(outer_radius > 0.0) || !(dx > 0.0) {
        return Err(Error::invalid("outer radius and dx must be positive"));
    }
    let outer = AxisBox::new(
        3,
        [center[0] - outer_radius, center[1] - outer_radius, center[2] - outer_radius],
        [center[0] + outer_radius, center[1] + outer_radius, center[2] + outer_radius],
    )?;
    for piece in obstacle.pieces() {
        let (lo, hi) = piece.bounds();
        let inside = (0..3).all(|d| lo[d] > outer.lower[d] + dx && hi[d] < outer.upper[d] - dx);
        let (c, r) = piece.enclosing_ball();
        let inside = inside
            && (truncation == Truncation::Cube || crate::geom::dist(&c, &center) + r < outer_radius - dx);
        if !inside {
            return Err(Error::invalid("obstacle must lie strictly inside the truncation domain"));
        }
    }
    let octant = match &obstacle.shape {
        ObstacleShape::Balls { radii } => {
            radii.len() == 1 && obstacle.points.points[0] == center
        }
        ObstacleShape::Tubes { .. } => false,
    };
    let domain = if octant {
        AxisBox::new(3, center, outer.upper)?
    } else {
        outer
    };
    let grid = Grid::over(&domain, dx)?;
    let n = grid.len();
    // centre node; offsets are taken in index space so the outer sphere is symmetric
    let cnode = grid.ijk(grid.nearest_node(&center));
    let r2 = (outer_radius / dx) * (outer_radius / dx) * (1.0 - 1e-12);
    // g: Dirichlet data on fixed nodes; active: unknowns
    let mut g = vec![0.0; n];
    let mut active = vec![false; n];
    let mut obstacle_nodes = 0usize;
    for i in 0..n {
        let ijk = grid.ijk(i);
        let p = grid.position(i);
        let far = (0..3).any(|d| ijk[d] + 1 == grid.shape[d] || (!octant && ijk[d] == 0));
        let outside = truncation == Truncation::Sphere
            && (0..3).map(|d| (ijk[d] as f64 - cnode[d] as f64).powi(2)).sum::<f64>() >= r2;
        if far || outside {
            continue;
        }
        if obstacle.contains(&p) {
            g[i] = 1.0;
            obstacle_nodes += 1;
        } else {
            active[i] = true;
        }
    }
    if obstacle_nodes == 0 {
        return Err(Error::invalid("obstacle contains no grid node; refine dx"));
    }
    let weight: Vec<f64> = (0..n)
        .map(|i| {
            let ijk = grid.ijk(i);
            (0..3).fold(1.0, |w, d| if octant && ijk[d] == 0 { w * 0.5 } else { w })
        })
        .collect();
    let op = MirrorStencil {
        grid,
        active,
        weight,
        coupling: 1.0 / (dx * dx),
        mirror: octant,
    };
    // rhs_i = w_i * coupling * Σ_{fixed neighbours} g_j
    let rhs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if !op.active[i] {
                return 0.0;
            }
            let masked: f64 = op.neighbor_sum(i, &g);
            op.weight[i] * op.coupling * masked
        })
        .collect();
    let side = grid.shape.iter().copied().max().unwrap_or(1);
    let out = cg_solve(&op, &rhs, None, &CgOptions { tol, max_iter: 40 * side })?;
    let mut v = g;
    for i in 0..n {
        if op.active[i] {
            v[i] = out.x[i];
        }
    }
    // Σ_edges w_e dx (v_i - v_j)^2, w_e = 1/2 per symmetry plane containing the edge
    let s = grid.strides();
    let partial: Vec<f64> = (0..n)
        .into_par_iter()
        .chunks(4096)
        .map(|idx| {
            let mut acc = 0.0;
            for i in idx {
                let ijk = grid.ijk(i);
                for d in 0..3 {
                    if ijk[d] + 1 >= grid.shape[d] {
                        continue;
                    }
                    let diff = v[i + s[d]] - v[i];
                    let mut w = 1.0;
                    if octant {
                        for e in 0..3 {
                            if e != d && ijk[e] == 0 {
                                w *= 0.5;
                            }
                        }
                    }
                    acc += w * diff * diff;
                }
            }
            acc
        })
        .collect();
    let energy: f64 = partial.iter().sum::<f64>() * dx;
    Ok(NewtonCapacity {
        value: if octant { 8.0 * energy } else { energy },
        dx,
        outer_radius,
        truncation,
        iterations: out.iterations,
        residual: out.residual,
        obstacle_nodes,
        octant,
    })
}
