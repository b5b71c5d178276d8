use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AxisBox, Coord};
use crate::grid::Grid;
use crate::grid_solver::{cg_solve, CgOptions, StencilOperator};
use crate::random_geometry::{CellFlag, PerforatedMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub dx: f64,
    pub center: Coord,
    pub side: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub iterations: usize,
    pub residual: f64,
    /// Hole nodes strictly inside the cube.
    pub hole_nodes: usize,
    pub absorbers: usize,
}

/// Minimizer of the local capacity problem on the cube grid: one on the
/// cube faces, zero on holes.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMinimizer {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Cube `[c - h/2, c + h/2]^n`.
pub fn cube_at(dim: usize, center: Coord, side: f64) -> Result<AxisBox> {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for d in 0..dim {
        lo[d] = center[d] - 0.5 * side;
        hi[d] = center[d] + 0.5 * side;
    }
    AxisBox::new(dim, lo, hi)
}

/// Local capacity `inf Σ_edges dx^{n-2} (v_i - v_j)^2 + Σ k_i v_i^2` over
/// grid functions on the cube with `v = 1` on its faces and `v = 0` on hole
/// nodes. Face nodes take the value one whatever their flag, so the
/// admissible sets of nested masks are nested. Absorbers on the faces add
/// `w_i k_i` with the trapezoid weight `w_i = 2^{-m}`, `m` the number of
/// faces through the node: they stand for balls within `dx/2` of the face,
/// half of them inside the cube.
pub fn local_capacity(mask: &PerforatedMask, cube: &AxisBox, tol: f64) -> Result<CapacityEstimate> {
    Ok(local_capacity_minimizer(mask, cube, tol)?.0)
}

pub fn local_capacity_minimizer(
    mask: &PerforatedMask,
    cube: &AxisBox,
    tol: f64,
) -> Result<(CapacityEstimate, LocalMinimizer)> {
    if !mask.domain.contains_box(cube) {
        return Err(Error::invalid("cube must lie inside the domain"));
    }
    let sub = mask.restrict(cube)?;
    let grid = sub.grid;
    let n = grid.len();
    let mut g = vec![0.0; n];
    let mut active = vec![false; n];
    let mut hole_nodes = 0;
    for i in 0..n {
        if grid.on_boundary(grid.ijk(i)) {
            g[i] = 1.0;
        } else if sub.flags[i] == CellFlag::Material {
            active[i] = true;
        } else {
            hole_nodes += 1;
        }
    }
    let absorption: Vec<f64> = {
        let mut a = sub.absorption();
        for (ai, &act) in a.iter_mut().zip(&active) {
            if !act {
                *ai = 0.0;
            }
        }
        a
    };
    let mut face_energy = 0.0;
    for ab in &sub.absorbers {
        let ijk = grid.ijk(ab.node);
        if grid.on_boundary(ijk) {
            let faces = (0..grid.dim).filter(|&d| ijk[d] == 0 || ijk[d] + 1 == grid.shape[d]).count();
            face_energy += ab.strength * 0.5f64.powi(faces as i32);
        }
    }
    let absorbers = absorption.iter().filter(|&&k| k > 0.0).count();
    let mut est = CapacityEstimate {
        value: 0.0,
        dx: grid.dx,
        center: cube.center(),
        side: cube.side(0),
        epsilon: mask.epsilon,
        seed: 0,
        iterations: 0,
        residual: 0.0,
        hole_nodes,
        absorbers,
    };
    if hole_nodes == 0 && absorbers == 0 {
        est.value = face_energy;
        return Ok((est, LocalMinimizer { grid, values: vec![1.0; n] }));
    }
    let op = StencilOperator::with_absorption(grid, active, 0.0, &absorption)?;
    let rhs = op.lift(&g);
    let side = grid.shape.iter().copied().max().unwrap_or(1);
    let out = cg_solve(&op, &rhs, None, &CgOptions { tol, max_iter: 40 * side })?;
    let mut v = g;
    for i in 0..n {
        if op.active[i] {
            v[i] = out.x[i];
        }
    }
    let s = grid.strides();
    let mut edges = 0.0;
    for i in 0..n {
        let ijk = grid.ijk(i);
        for d in 0..grid.dim {
            if ijk[d] + 1 < grid.shape[d] {
                let diff = v[i + s[d]] - v[i];
                edges += diff * diff;
            }
        }
    }
    let absorbed: f64 = absorption.iter().zip(&v).map(|(k, x)| k * x * x).sum();
    est.value = edges * grid.dx.powi(grid.dim as i32 - 2) + absorbed + face_energy;
    est.iterations = out.iterations;
    est.residual = out.residual;
    Ok((est, LocalMinimizer { grid, values: v }))
}
