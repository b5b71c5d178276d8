//! Uniform node grids.
//!
//! A grid over a domain box with `N` intervals per axis has `N + 1` nodes
//! per axis; node `(i, j, k)` sits at `origin + (i, j, k) * dx`. Each node
//! stands for the cell of side `dx` centred on it, so "cell centre" and
//! "node" are used interchangeably.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{AxisBox, Coord};

/// Relative tolerance for `dx` dividing a box side.
pub const DIVIDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Nodes per axis; 1 for axes beyond `dim`.
    pub shape: [usize; 3],
    pub origin: Coord,
    pub dx: f64,
}

impl Grid {
    /// Node grid covering `domain` (boundary nodes included).
    pub fn over(domain: &AxisBox, dx: f64) -> Result<Grid> {
        let n = domain.divisions(dx, DIVIDE_TOL).ok_or_else(|| {
            Error::invalid(format!("grid spacing {dx} does not divide the domain sides"))
        })?;
        let mut shape = [1usize; 3];
        for d in 0..domain.dim {
            if n[d] < 2 {
                return Err(Error::invalid("grid needs at least two intervals per axis"));
            }
            shape[d] = n[d] + 1;
        }
        Ok(Grid {
            dim: domain.dim,
            shape,
            origin: domain.lower,
            dx,
        })
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [1, self.shape[0], self.shape[0] * self.shape[1]]
    }

    #[inline]
    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.shape[0] * (ijk[1] + self.shape[1] * ijk[2])
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.shape[0];
        let r = idx / self.shape[0];
        [i, r % self.shape[1], r / self.shape[1]]
    }

    #[inline]
    pub fn position(&self, idx: usize) -> Coord {
        let ijk = self.ijk(idx);
        let mut p = [0.0; 3];
        for d in 0..self.dim {
            p[d] = self.origin[d] + ijk[d] as f64 * self.dx;
        }
        p
    }

    /// True if the node lies on the outer faces of the grid.
    #[inline]
    pub fn on_boundary(&self, ijk: [usize; 3]) -> bool {
        (0..self.dim).any(|d| ijk[d] == 0 || ijk[d] + 1 == self.shape[d])
    }

    /// Volume element `dx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    /// Inclusive node index range along `d` covering `[lo, hi]`, clipped.
    pub fn index_range(&self, d: usize, lo: f64, hi: f64) -> Option<(usize, usize)> {
        let a = ((lo - self.origin[d]) / self.dx).ceil();
        let b = ((hi - self.origin[d]) / self.dx).floor();
        let a = a.max(0.0);
        let b = b.min((self.shape[d] - 1) as f64);
        if a > b {
            None
        } else {
            Some((a as usize, b as usize))
        }
    }

    /// Index of the node nearest to `p`, clipped to the grid.
    pub fn nearest_node(&self, p: &Coord) -> usize {
        let mut ijk = [0usize; 3];
        for d in 0..self.dim {
            let t = ((p[d] - self.origin[d]) / self.dx).round();
            ijk[d] = (t.max(0.0) as usize).min(self.shape[d] - 1);
        }
        self.index(ijk)
    }

    /// Visits the neighbours of `ijk` along each axis (up to `2 * dim`).
    #[inline]
    pub fn for_each_neighbor(&self, ijk: [usize; 3], mut f: impl FnMut(usize, usize)) {
        let idx = self.index(ijk);
        let s = self.strides();
        for d in 0..self.dim {
            if ijk[d] > 0 {
                f(d, idx - s[d]);
            }
            if ijk[d] + 1 < self.shape[d] {
                f(d, idx + s[d]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::over(&AxisBox::unit(3), 0.25).unwrap();
        assert_eq!(g.shape, [5, 5, 5]);
        for idx in 0..g.len() {
            assert_eq!(g.index(g.ijk(idx)), idx);
        }
        assert_eq!(g.position(g.index([4, 0, 2])), [1.0, 0.0, 0.5]);
    }

    #[test]
    fn rejects_non_dividing_spacing() {
        assert!(Grid::over(&AxisBox::unit(2), 0.3).is_err());
        assert!(Grid::over(&AxisBox::unit(2), 1.0).is_err());
    }

    #[test]
    fn ranges_and_nearest() {
        let g = Grid::over(&AxisBox::unit(2), 0.1).unwrap();
        assert_eq!(g.index_range(0, 0.25, 0.55), Some((3, 5)));
        assert_eq!(g.index_range(0, -1.0, 0.05), Some((0, 0)));
        assert_eq!(g.index_range(0, 0.21, 0.29), None);
        assert_eq!(g.ijk(g.nearest_node(&[0.26, 0.94, 0.0])), [3, 9, 0]);
    }
}
