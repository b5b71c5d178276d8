use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::random_geometry::{CellFlag, PerforatedMask};

use super::cg::LinearOperator;

const APPLY_CHUNK: usize = 2048;

/// Matrix-free `(2n+1)`-point operator on a node grid:
/// `(A x)_i = diag_i x_i - coupling * Σ_{j ~ i} x_j` on active nodes and
/// `0` elsewhere. Inactive nodes carry zero values, which is how Dirichlet
/// data on holes and on `∂D` enters.
#[derive(Debug, Clone)]
pub struct StencilOperator {
    pub grid: Grid,
    pub active: Vec<bool>,
    pub diag: Vec<f64>,
    pub coupling: f64,
}

impl StencilOperator {
    /// Discretization of `-Δ + reaction + absorption` with zero Dirichlet data
    /// on every non-material node.
    pub fn dirichlet(mask: &PerforatedMask, reaction: f64) -> Result<Self> {
        if !(reaction >= 0.0) || !reaction.is_finite() {
            return Err(Error::invalid(format!("reaction coefficient must be >= 0, got {reaction}")));
        }
        let active: Vec<bool> = mask.flags.iter().map(|&f| f == CellFlag::Material).collect();
        Self::with_absorption(mask.grid, active, reaction, &mask.absorption())
    }

    /// Generic constructor; `absorption` holds energy weights `k_i`, entering
    /// the operator as `k_i / dx^n`.
    pub fn with_absorption(grid: Grid, active: Vec<bool>, reaction: f64, absorption: &[f64]) -> Result<Self> {
        let dx2 = grid.dx * grid.dx;
        let vol = grid.cell_volume();
        let base = 2.0 * grid.dim as f64 / dx2 + reaction;
        for (i, &a) in active.iter().enumerate() {
            if a && grid.on_boundary(grid.ijk(i)) {
                return Err(Error::invalid("boundary nodes cannot be unknowns"));
            }
        }
        let diag = active
            .iter()
            .enumerate()
            .map(|(i, &a)| if a { base + absorption.get(i).copied().unwrap_or(0.0) / vol } else { 0.0 })
            .collect();
        Ok(StencilOperator {
            grid,
            active,
            diag,
            coupling: 1.0 / dx2,
        })
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Contribution `coupling * Σ_{j ~ i, fixed} g_j` of Dirichlet data
    /// `g` on inactive nodes to the right-hand side of active rows.
    pub fn lift(&self, g: &[f64]) -> Vec<f64> {
        let s = self.grid.strides();
        let dim = self.grid.dim;
        (0..self.grid.len())
            .into_par_iter()
            .map(|i| {
                if !self.active[i] {
                    return 0.0;
                }
                let mut acc = 0.0;
                for &st in &s[..dim] {
                    for j in [i - st, i + st] {
                        if !self.active[j] {
                            acc += g[j];
                        }
                    }
                }
                self.coupling * acc
            })
            .collect()
    }
}

impl LinearOperator for StencilOperator {
    fn len(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s = self.grid.strides();
        let dim = self.grid.dim;
        let c = self.coupling;
        y.par_chunks_mut(APPLY_CHUNK).enumerate().for_each(|(ci, out)| {
            let base = ci * APPLY_CHUNK;
            for (k, yi) in out.iter_mut().enumerate() {
                let i = base + k;
                if !self.active[i] {
                    *yi = 0.0;
                    continue;
                }
                let mut nb = x[i - 1] + x[i + 1];
                if dim >= 2 {
                    nb += x[i - s[1]] + x[i + s[1]];
                }
                if dim == 3 {
                    nb += x[i - s[2]] + x[i + s[2]];
                }
                *yi = self.diag[i] * x[i] - c * nb;
            }
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diag.clone()
    }
}
