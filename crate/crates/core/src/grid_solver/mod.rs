//! Finite-difference solution of `Δu - λu = f` on perforated domains.
//!
//! The equation is assembled in the coercive form `(-Δ + λ) u = -f` with the
//! `(2n+1)`-point Laplacian on the node grid. Unknowns are the material
//! nodes; hole and exterior nodes carry the zero Dirichlet value. Absorbers
//! from the sub-grid hole model add `k_i / dx^n` to the diagonal.

mod cg;
mod energy;
mod field;
mod operator;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use cg::{cg_solve, dot, norm, CgOptions, CgOutcome, LinearOperator, SparseMatrix};
pub use energy::{
    dirichlet_eigenvalue_closed_form, energy_gamma, energy_parts, friedrichs_constant, gradient_norm, h1_norm,
    l2_distance, l2_norm, EnergyParts,
};
pub use field::{GridField, Source};
pub use operator::StencilOperator;

use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::random_geometry::PerforatedMask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    /// Defaults to `20 * (largest grid side in nodes)`.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: None,
        }
    }
}

impl SolveOptions {
    pub fn cg(&self, grid: &crate::grid::Grid) -> CgOptions {
        let side = grid.shape.iter().copied().max().unwrap_or(1);
        CgOptions {
            tol: self.tol,
            max_iter: self.max_iter.unwrap_or(20 * side),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub wall_time: f64,
    pub unknowns: usize,
}

/// Solves `Δu - λu = f` on the material nodes of `mask` with `u = 0` on
/// holes and on `∂D`.
pub fn solve_dirichlet_perforated(
    mask: &PerforatedMask,
    reaction: f64,
    source: &Source,
    opts: &SolveOptions,
) -> Result<(GridField, SolveReport)> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if mask.material_count() == 0 {
        return Err(Error::invalid("mask has no material cells"));
    }
    let start = Instant::now();
    let op = StencilOperator::dirichlet(mask, reaction)?;
    let f = source.sample(mask)?;
    let rhs: Vec<f64> = f.values.iter().map(|v| -v).collect();
    let out = cg_solve(&op, &rhs, None, &opts.cg(&mask.grid))?;
    let u = GridField::from_values(mask, out.x)?;
    Ok((
        u,
        SolveReport {
            iterations: out.iterations,
            residual: out.residual,
            wall_time: start.elapsed().as_secs_f64(),
            unknowns: op.active_count(),
        },
    ))
}

/// Solves `Δu - (λ + c) u = f` on the unperforated grid.
pub fn solve_homogenized(
    domain: &AxisBox,
    reaction: f64,
    c: f64,
    source: &Source,
    dx: f64,
    opts: &SolveOptions,
) -> Result<(GridField, SolveReport)> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!("strange term must be >= 0, got {c}")));
    }
    let mask = PerforatedMask::hole_free(domain, dx)?;
    solve_dirichlet_perforated(&mask, reaction + c, source, opts)
}

#[cfg(test)]
mod tests;
