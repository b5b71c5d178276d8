use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::grid::Grid;
use crate::random_geometry::PerforatedMask;

use super::cg::{cg_solve, dot, CgOptions, LinearOperator};
use super::field::GridField;
use super::operator::StencilOperator;

const SUM_CHUNK: usize = 4096;

/// Ordered chunked sum of `f(i)` over all nodes.
fn node_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks = n.div_ceil(SUM_CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * SUM_CHUNK).min(n);
            (c * SUM_CHUNK..end).map(&f).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

/// `Σ_edges (u_i - u_j)^2` over all grid edges.
fn edge_square_sum(grid: &Grid, u: &[f64]) -> f64 {
    let s = grid.strides();
    node_sum(grid.len(), |i| {
        let ijk = grid.ijk(i);
        let mut acc = 0.0;
        for d in 0..grid.dim {
            if ijk[d] + 1 < grid.shape[d] {
                let diff = u[i + s[d]] - u[i];
                acc += diff * diff;
            }
        }
        acc
    })
}

/// Trapezoid weight of a node: `1/2` per axis on which it is a boundary node.
/// Fields vanishing on `∂D` are unaffected.
#[inline]
fn node_weight(grid: &Grid, i: usize) -> f64 {
    let ijk = grid.ijk(i);
    let mut w = 1.0;
    for d in 0..grid.dim {
        if ijk[d] == 0 || ijk[d] + 1 == grid.shape[d] {
            w *= 0.5;
        }
    }
    w
}

pub fn l2_norm(u: &GridField) -> f64 {
    let s = node_sum(u.grid.len(), |i| node_weight(&u.grid, i) * u.values[i] * u.values[i]);
    (s * u.grid.cell_volume()).sqrt()
}

/// `sqrt(Σ w_i (u_i - v_i)^2 dx^n)` over the common grid.
pub fn l2_distance(u: &GridField, v: &GridField) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::invalid("fields live on different grids"));
    }
    let s = node_sum(u.grid.len(), |i| {
        let d = u.values[i] - v.values[i];
        node_weight(&u.grid, i) * d * d
    });
    Ok((s * u.grid.cell_volume()).sqrt())
}

/// Discrete `‖∇u‖_{L²}` from forward differences on every edge; edges into
/// holes or `∂D` see the zero extension.
pub fn gradient_norm(u: &GridField) -> f64 {
    (edge_square_sum(&u.grid, &u.values) * u.grid.dx.powi(u.grid.dim as i32 - 2)).sqrt()
}

pub fn h1_norm(u: &GridField) -> f64 {
    (l2_norm(u).powi(2) + gradient_norm(u).powi(2)).sqrt()
}

/// Terms of `Γ[u] = ∫ |∇u|^2 + λ u^2 + 2 f u`, plus the absorber energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    /// `‖∇u‖^2`
    pub gradient: f64,
    /// `λ ‖u‖^2`
    pub reaction: f64,
    /// `Σ k_i u_i^2` from sub-grid absorbers.
    pub absorption: f64,
    /// `2 ∫ f u`
    pub source: f64,
    pub gamma: f64,
}

pub fn energy_parts(u: &GridField, mask: &PerforatedMask, reaction: f64, f: &GridField) -> Result<EnergyParts> {
    if u.grid != mask.grid || f.grid != mask.grid {
        return Err(Error::invalid("field and mask grids differ"));
    }
    let vol = u.grid.cell_volume();
    let gradient = gradient_norm(u).powi(2);
    let reaction_term = reaction * l2_norm(u).powi(2);
    let absorption: f64 = mask
        .absorbers
        .iter()
        .map(|a| a.strength * u.values[a.node] * u.values[a.node])
        .sum();
    let source = 2.0 * dot(&f.values, &u.values) * vol;
    Ok(EnergyParts {
        gradient,
        reaction: reaction_term,
        absorption,
        source,
        gamma: gradient + reaction_term + absorption + source,
    })
}

/// Discrete `Γ^ε[u]`.
pub fn energy_gamma(u: &GridField, mask: &PerforatedMask, reaction: f64, f: &GridField) -> Result<f64> {
    Ok(energy_parts(u, mask, reaction, f)?.gamma)
}

/// Smallest eigenvalue of the discrete Dirichlet Laplacian on a box:
/// `Σ_d (4/dx^2) sin^2(π dx / (2 L_d))`.
pub fn dirichlet_eigenvalue_closed_form(domain: &AxisBox, dx: f64) -> f64 {
    (0..domain.dim)
        .map(|d| 4.0 / (dx * dx) * (PI * dx / (2.0 * domain.side(d))).sin().powi(2))
        .sum()
}

/// Friedrichs constant `C_D` with `‖u‖ <= C_D ‖∇u‖` for grid functions
/// vanishing on `∂D`, as `1/sqrt(μ_min)` where `μ_min` comes from inverse
/// power iteration on the hole-free grid.
pub fn friedrichs_constant(domain: &AxisBox, dx: f64) -> Result<f64> {
    let mask = PerforatedMask::hole_free(domain, dx)?;
    let op = StencilOperator::dirichlet(&mask, 0.0)?;
    let n = op.len();
    let mut x: Vec<f64> = op.active.iter().map(|&a| if a { 1.0 } else { 0.0 }).collect();
    let mut ax = vec![0.0; n];
    let mut mu = f64::INFINITY;
    // inexact inner solves perturb the Rayleigh quotient only at second order
    let opts = CgOptions {
        tol: 1e-7,
        max_iter: 20 * mask.grid.shape.iter().max().copied().unwrap_or(1) * 4,
    };
    for _ in 0..200 {
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        op.apply(&x, &mut ax);
        let new_mu = dot(&x, &ax);
        if (mu - new_mu).abs() <= 1e-11 * new_mu {
            return Ok(1.0 / new_mu.sqrt());
        }
        mu = new_mu;
        let guess: Vec<f64> = x.iter().map(|v| v / mu).collect();
        x = cg_solve(&op, &x, Some(&guess), &opts)?.x;
    }
    Err(Error::SolverFailure {
        iterations: 200,
        residual: f64::NAN,
        reason: "inverse power iteration did not settle".into(),
        residual_history: Vec::new(),
    })
}
