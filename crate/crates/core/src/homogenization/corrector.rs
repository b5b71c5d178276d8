use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{local_capacity_minimizer, CapacityEstimate};
use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::grid::Grid;
use crate::grid_solver::{energy_gamma, GridField, Source};
use crate::random_geometry::{CellFlag, PerforatedMask};

/// Minimum number of grid cells across the overlap width `r`.
pub const MIN_OVERLAP_CELLS: f64 = 4.0;

/// `6s^5 - 15s^4 + 10s^3`: rises from 0 to 1 on `[0, 1]` with vanishing
/// first and second derivatives at both ends.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

/// One-dimensional factor of the partition along an axis: the interval and
/// its weights at the grid nodes of that axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisPiece {
    pub lo: f64,
    pub hi: f64,
    /// Weight at every node of the axis (zero outside `[lo, hi]`).
    pub weights: Vec<f64>,
}

/// Partition of unity on the node grid of `D` by overlapping cubes of side
/// `h` whose neighbours overlap in slabs of width `r`. Each weight is a
/// product of one-dimensional factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub grid: Grid,
    pub h: f64,
    pub r: f64,
    pub axes: Vec<Vec<AxisPiece>>,
}

/// Builds the covering `[lo - r + k(h - r), lo - r + k(h - r) + h]` along each
/// axis, with weight `1 - S` / `S` across each overlap.
pub fn build_partition_of_unity(domain: &AxisBox, h: f64, r: f64, dx: f64) -> Result<PartitionOfUnity> {
    if !(h > 0.0) || !(r > 0.0) || r >= 0.5 * h {
        return Err(Error::invalid(format!("need 0 < r < h/2, got h = {h}, r = {r}")));
    }
    if r / dx < MIN_OVERLAP_CELLS * (1.0 - 1e-9) {
        return Err(Error::invalid(format!(
            "overlap r = {r} spans {:.2} cells; at least {MIN_OVERLAP_CELLS} are required",
            r / dx
        )));
    }
    let grid = Grid::over(domain, dx)?;
    let period = h - r;
    let mut axes = Vec::with_capacity(grid.dim);
    for d in 0..grid.dim {
        let (lo, hi) = (domain.lower[d], domain.upper[d]);
        let mut starts = Vec::new();
        let mut k = 0usize;
        loop {
            let a = lo - r + k as f64 * period;
            starts.push(a);
            if a + h >= hi + r {
                break;
            }
            k += 1;
        }
        let nodes = grid.shape[d];
        let pieces: Vec<AxisPiece> = starts
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let b = a + h;
                let weights = (0..nodes)
                    .map(|i| {
                        let x = grid.origin[d] + i as f64 * dx;
                        if x < a || x > b {
                            return 0.0;
                        }
                        // rising edge shared with the previous piece, falling with the next
                        let rise = if k == 0 { 1.0 } else { smoothstep((x - a) / r) };
                        let fall = if k + 1 == starts.len() { 1.0 } else { 1.0 - smoothstep((x - (b - r)) / r) };
                        rise * fall
                    })
                    .collect();
                AxisPiece { lo: a, hi: b, weights }
            })
            .collect();
        axes.push(pieces);
    }
    Ok(PartitionOfUnity { grid, h, r, axes })
}

impl PartitionOfUnity {
    /// Number of cubes `α`.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis piece indices of cube `alpha`.
    pub fn multi_index(&self, alpha: usize) -> [usize; 3] {
        let mut m = [0usize; 3];
        let mut rest = alpha;
        for (d, pieces) in self.axes.iter().enumerate() {
            m[d] = rest % pieces.len();
            rest /= pieces.len();
        }
        m
    }

    /// The cube `Q^α` (may extend beyond `D`).
    pub fn cube(&self, alpha: usize) -> AxisBox {
        let m = self.multi_index(alpha);
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for d in 0..self.grid.dim {
            lo[d] = self.axes[d][m[d]].lo;
            hi[d] = self.axes[d][m[d]].hi;
        }
        AxisBox { dim: self.grid.dim, lower: lo, upper: hi }
    }

    /// `φ_α` at grid node `idx`.
    pub fn weight(&self, alpha: usize, idx: usize) -> f64 {
        let m = self.multi_index(alpha);
        let ijk = self.grid.ijk(idx);
        (0..self.grid.dim).map(|d| self.axes[d][m[d]].weights[ijk[d]]).product()
    }

    /// `Σ_α φ_α` at node `idx`.
    pub fn sum_at(&self, idx: usize) -> f64 {
        let ijk = self.grid.ijk(idx);
        (0..self.grid.dim)
            .map(|d| self.axes[d].iter().map(|p| p.weights[ijk[d]]).sum::<f64>())
            .product()
    }

    /// Number of cubes whose closed hull contains node `idx`.
    pub fn cover_count(&self, idx: usize) -> usize {
        let p = self.grid.position(idx);
        (0..self.grid.dim)
            .map(|d| self.axes[d].iter().filter(|a| p[d] >= a.lo && p[d] <= a.hi).count())
            .product()
    }

    /// Largest Euclidean norm of the forward-difference gradient of any
    /// `φ_α` over the grid.
    pub fn max_gradient(&self) -> f64 {
        // product structure: |∇φ|^2 = Σ_d (∂_d ψ_d Π_{e≠d} ψ_e)^2 <= Σ_d max|∂_d ψ_d|^2
        let g = &self.grid;
        let mut worst = 0.0f64;
        for alpha in 0..self.len() {
            let m = self.multi_index(alpha);
            for idx in 0..g.len() {
                let ijk = g.ijk(idx);
                let mut s = 0.0;
                for d in 0..g.dim {
                    if ijk[d] + 1 >= g.shape[d] {
                        continue;
                    }
                    let w = &self.axes[d][m[d]].weights;
                    let mut q = (w[ijk[d] + 1] - w[ijk[d]]) / g.dx;
                    for e in 0..g.dim {
                        if e != d {
                            q *= self.axes[e][m[e]].weights[ijk[e]];
                        }
                    }
                    s += q * q;
                }
                worst = worst.max(s.sqrt());
            }
        }
        worst
    }
}

/// Node-aligned cube containing `cube ∩ D`, rounded outward.
fn aligned_clip(cube: &AxisBox, domain: &AxisBox, grid: &Grid) -> Result<AxisBox> {
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for d in 0..grid.dim {
        let a = cube.lower[d].max(domain.lower[d]);
        let b = cube.upper[d].min(domain.upper[d]);
        let ia = ((a - grid.origin[d]) / grid.dx - 1e-9).floor().max(0.0);
        let ib = ((b - grid.origin[d]) / grid.dx + 1e-9).ceil().min((grid.shape[d] - 1) as f64);
        lo[d] = grid.origin[d] + ia * grid.dx;
        hi[d] = grid.origin[d] + ib * grid.dx;
    }
    AxisBox::new(grid.dim, lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corrector {
    /// `w_h = Σ_α w v^α φ_α`, before any masking.
    pub field: GridField,
    /// Hole nodes where the field is nonzero.
    pub nonzero_on_holes: usize,
    pub hole_nodes: usize,
    /// `Γ^ε[w_h]` on the perforated mask.
    pub gamma: f64,
    /// `Γ̄[w]` of the homogenized functional with reaction `λ + c`.
    pub gamma_homogenized: f64,
    pub capacities: Vec<CapacityEstimate>,
}

impl Corrector {
    pub fn energy_gap(&self) -> f64 {
        self.gamma - self.gamma_homogenized
    }
}

/// Glues the local capacity minimizers of the partition cubes into
/// `w_h(x) = Σ_α w(x) v^α(x) φ_α(x)` and evaluates its energies.
///
/// `w` holds node values on the mask grid and should vanish on `∂D`.
pub fn build_corrector(
    mask: &PerforatedMask,
    w: &[f64],
    partition: &PartitionOfUnity,
    reaction: f64,
    c: f64,
    source: &Source,
    tol: f64,
) -> Result<Corrector> {
    let g = mask.grid;
    if partition.grid != g || w.len() != g.len() {
        return Err(Error::invalid("corrector inputs live on different grids"));
    }
    type Piece = (Vec<(usize, f64)>, CapacityEstimate);
    let pieces: Vec<Result<Piece>> = (0..partition.len())
        .into_par_iter()
        .map(|alpha| {
            let cube = aligned_clip(&partition.cube(alpha), &mask.domain, &g)?;
            let (est, v) = local_capacity_minimizer(mask, &cube, tol)?;
            let off = g.nearest_node(&cube.lower);
            let o = g.ijk(off);
            let mut contrib = Vec::new();
            for local in 0..v.grid.len() {
                let l = v.grid.ijk(local);
                let idx = g.index([l[0] + o[0], l[1] + o[1], l[2] + o[2]]);
                let phi = partition.weight(alpha, idx);
                if phi != 0.0 && w[idx] != 0.0 {
                    contrib.push((idx, w[idx] * v.values[local] * phi));
                }
            }
            Ok((contrib, est))
        })
        .collect();
    let mut values = vec![0.0; g.len()];
    let mut capacities = Vec::with_capacity(pieces.len());
    for p in pieces {
        let (contrib, est) = p?;
        for (idx, v) in contrib {
            values[idx] += v;
        }
        capacities.push(est);
    }
    let hole_nodes = mask.hole_count();
    let nonzero_on_holes = (0..g.len())
        .filter(|&i| mask.flags[i] == CellFlag::Hole && values[i] != 0.0)
        .count();
    if (0..g.len()).any(|i| mask.flags[i] == CellFlag::Exterior && values[i] != 0.0) {
        return Err(Error::invalid("test field must vanish on the boundary of D"));
    }
    let field = GridField { grid: g, values };
    let gamma = energy_gamma(&field, mask, reaction, &source.sample(mask)?)?;
    let hole_free = PerforatedMask::hole_free(&mask.domain, g.dx)?;
    let w_field = GridField { grid: g, values: w.to_vec() };
    let gamma_homogenized = energy_gamma(&w_field, &hole_free, reaction + c, &source.sample(&hole_free)?)?;
    Ok(Corrector {
        field,
        nonzero_on_holes,
        hole_nodes,
        gamma,
        gamma_homogenized,
        capacities,
    })
}
