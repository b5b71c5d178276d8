use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Coord;
use crate::grid::Grid;
use crate::grid_solver::{cg_solve, CgOptions, SparseMatrix};
use crate::random_geometry::{CellFlag, PerforatedMask};

use super::local::cube_at;

/// Penalty weight `κ = h^{-2-γ}`.
pub fn penalty(h: f64, gamma: f64) -> f64 {
    h.powf(-2.0 - gamma)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 2), got {gamma}")));
    }
    Ok(())
}

/// Discrete setting of the penalized problem on `Q = [z - h/2, z + h/2]^n`:
/// unknowns are the non-hole nodes of the cube; edges between two unknowns
/// carry trapezoid weights (`1/2` per transverse axis on which the edge lies
/// on a cube face) and nodes carry trapezoid masses. Holes are simply
/// removed, giving natural boundary conditions on hole faces and on `∂Q`.
struct PenalizedSystem {
    grid: Grid,
    z: Coord,
    kappa: f64,
    /// Cube node -> unknown index.
    unknown: Vec<Option<usize>>,
    nodes: Vec<usize>,
    mass: Vec<f64>,
    /// `(a, b, weight)` over unknown indices.
    edges: Vec<(usize, usize, f64)>,
    matrix: SparseMatrix,
}

impl PenalizedSystem {
    fn new(mask: &PerforatedMask, z: Coord, h: f64, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let dim = mask.dim();
        let cube = cube_at(dim, z, h)?;
        if !mask.domain.contains_box(&cube) {
            return Err(Error::invalid("cube must lie inside the mask domain"));
        }
        let sub = mask.restrict(&cube)?;
        let grid = sub.grid;
        let face = |ijk: [usize; 3], d: usize| ijk[d] == 0 || ijk[d] + 1 == grid.shape[d];
        let mut unknown = vec![None; grid.len()];
        let mut nodes = Vec::new();
        let mut mass = Vec::new();
        for i in 0..grid.len() {
            if sub.flags[i] != CellFlag::Hole {
                unknown[i] = Some(nodes.len());
                nodes.push(i);
                let ijk = grid.ijk(i);
                mass.push((0..dim).fold(1.0, |m, d| if face(ijk, d) { 0.5 * m } else { m }));
            }
        }
        if nodes.is_empty() {
            return Err(Error::invalid("cube contains no material nodes"));
        }
        let s = grid.strides();
        let mut edges = Vec::new();
        for (a, &i) in nodes.iter().enumerate() {
            let ijk = grid.ijk(i);
            for d in 0..dim {
                if ijk[d] + 1 >= grid.shape[d] {
                    continue;
                }
                if let Some(b) = unknown[i + s[d]] {
                    let w = (0..dim).fold(1.0, |w, e| if e != d && face(ijk, e) { 0.5 * w } else { w });
                    edges.push((a, b, w));
                }
            }
        }
        let kappa = penalty(h, gamma);
        // scaled by dx^{-n}: L_w / dx^2 + κ M
        let inv_dx2 = 1.0 / (grid.dx * grid.dx);
        let mut t = Vec::with_capacity(nodes.len() + 4 * edges.len());
        for (a, m) in mass.iter().enumerate() {
            t.push((a, a, kappa * m));
        }
        for &(a, b, w) in &edges {
            let c = w * inv_dx2;
            t.push((a, a, c));
            t.push((b, b, c));
            t.push((a, b, -c));
            t.push((b, a, -c));
        }
        let matrix = SparseMatrix::from_triplets(nodes.len(), t);
        Ok(PenalizedSystem {
            grid,
            z,
            kappa,
            unknown,
            nodes,
            mass,
            edges,
            matrix,
        })
    }

    /// `(x - z)_d` at unknown `a`.
    fn offset(&self, a: usize, d: usize) -> f64 {
        self.grid.position(self.nodes[a])[d] - self.z[d]
    }

    fn target(&self, xi: &[f64]) -> Vec<f64> {
        (0..self.nodes.len())
            .map(|a| (0..self.grid.dim).map(|d| xi[d] * self.offset(a, d)).sum())
            .collect()
    }

    fn solve(&self, xi: &[f64], tol: f64) -> Result<(Vec<f64>, usize)> {
        let target = self.target(xi);
        let rhs: Vec<f64> = target
            .iter()
            .zip(&self.mass)
            .map(|(l, m)| self.kappa * m * l)
            .collect();
        let side = self.grid.shape.iter().copied().max().unwrap_or(1);
        let out = cg_solve(&self.matrix, &rhs, None, &CgOptions { tol, max_iter: 100 * side })?;
        Ok((out.x, out.iterations))
    }

    /// Bilinear form `∫ ∇v·∇w + κ (v - l)(w - m)` in the discrete weights.
    fn cross(&self, v: &[f64], l: &[f64], w: &[f64], m: &[f64]) -> f64 {
        let dim = self.grid.dim as i32;
        let dx = self.grid.dx;
        let grad: f64 = self
            .edges
            .iter()
            .map(|&(a, b, we)| we * (v[b] - v[a]) * (w[b] - w[a]))
            .sum::<f64>()
            * dx.powi(dim - 2);
        let pen: f64 = (0..v.len())
            .map(|a| self.mass[a] * (v[a] - l[a]) * (w[a] - m[a]))
            .sum::<f64>()
            * self.kappa
            * dx.powi(dim);
        grad + pen
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedResult {
    pub value: f64,
    pub grid: Grid,
    /// Minimizer on the cube grid, zero on holes.
    pub field: Vec<f64>,
    pub iterations: usize,
}

/// `P(ξ) = inf ∫_{Q ∩ G} |∇v|^2 + h^{-2-γ} |v - (x - z)·ξ|^2`.
pub fn penalized_functional(
    mask: &PerforatedMask,
    z: Coord,
    h: f64,
    gamma: f64,
    xi: &[f64],
    tol: f64,
) -> Result<PenalizedResult> {
    let sys = PenalizedSystem::new(mask, z, h, gamma)?;
    if xi.len() != sys.grid.dim || xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("direction must be finite with one entry per axis"));
    }
    let (v, iterations) = sys.solve(xi, tol)?;
    let l = sys.target(xi);
    let value = sys.cross(&v, &l, &v, &l);
    let mut field = vec![0.0; sys.grid.len()];
    for (a, &i) in sys.nodes.iter().enumerate() {
        field[i] = v[a];
    }
    debug_assert!(sys.unknown.iter().filter(|u| u.is_some()).count() == sys.nodes.len());
    Ok(PenalizedResult {
        value,
        grid: sys.grid,
        field,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityTensor {
    /// Row-major `n x n`.
    pub entries: Vec<Vec<f64>>,
    pub gamma: f64,
    pub center: Coord,
    pub side: f64,
    pub epsilon: f64,
}

impl ConductivityTensor {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.entries[i][j] * xi[i] * xi[j])
            .sum()
    }

    /// `max |a_ij - a_ji| / max |a_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let scale = self.entries.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.entries[i][j] - self.entries[j][i]).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Eigenvalues of the symmetric part (Jacobi rotations).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (self.entries[i][j] + self.entries[j][i])).collect())
            .collect();
        for _ in 0..100 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a[i][j] * a[i][j];
                    }
                }
            }
            if off < 1e-300 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Tensor `a_ij` of the quadratic form `P(ξ) = Σ a_ij ξ_i ξ_j`, from the
/// basis minimizers `v_i` (direction `e_i`) by the cross-energy formula
/// `a_ij = ∫ ∇v_i·∇v_j + κ (v_i - (x - z)_i)(v_j - (x - z)_j)`.
pub fn conductivity_tensor(
    mask: &PerforatedMask,
    z: Coord,
    h: f64,
    gamma: f64,
    tol: f64,
) -> Result<ConductivityTensor> {
    let sys = PenalizedSystem::new(mask, z, h, gamma)?;
    let n = sys.grid.dim;
    let mut basis = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let (v, _) = sys.solve(&e, tol)?;
        basis.push((v, sys.target(&e)));
    }
    let mut entries = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            entries[i][j] = sys.cross(&basis[i].0, &basis[i].1, &basis[j].0, &basis[j].1);
        }
    }
    Ok(ConductivityTensor {
        entries,
        gamma,
        center: z,
        side: h,
        epsilon: mask.epsilon,
    })
}
