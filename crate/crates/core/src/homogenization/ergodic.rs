use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{local_capacity, mean_and_std};
use crate::error::{Error, Result};
use crate::geom::AxisBox;
use crate::grid_solver::{cg_solve, CgOptions, SparseMatrix};
use crate::point_process::{self, PointConfiguration};
use crate::random_geometry::{
    build_balls, build_rcm_edges, build_tubes, rasterize_with, BallRadiusRule, CellFlag, ConnectivityFunction,
    HoleModel, ObstacleSet, PerforatedMask, RasterOptions, TubeRadius,
};
use crate::rng;

/// Stream identifier for ergodic-experiment realizations.
pub const STAGE_ERGODIC: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErgodicFunctional {
    /// Local capacity of the whole cube `Q_t`.
    LocalCapacity,
    /// `min ∫ a |∇u|^2` with `u = x_axis` on `∂Q_t`, `a = 1` in the
    /// material and `hole_conductivity` in the holes.
    MinimizerEnergy {
        #[serde(default = "default_hole_conductivity")]
        hole_conductivity: f64,
        #[serde(default)]
        axis: usize,
    },
}

fn default_hole_conductivity() -> f64 {
    1e-3
}

/// Geometry at unit scale; cubes of growing side `t` are cut from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ErgodicGeometry {
    Boolean {
        intensity: f64,
        ball_radius: BallRadiusRule,
    },
    Rcm {
        intensity: f64,
        connectivity: ConnectivityFunction,
        tube_radius: TubeRadius,
    },
    /// Balls of fixed radius on the lattice of the given spacing.
    Periodic { spacing: f64, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicSpec {
    pub dim: usize,
    pub geometry: ErgodicGeometry,
    pub functional: ErgodicFunctional,
    /// Cube sides, increasing.
    pub ts: Vec<f64>,
    pub replicas: usize,
    pub dx: f64,
    pub seed: u64,
    #[serde(default)]
    pub hole_model: HoleModel,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicRow {
    pub t: f64,
    pub replica: usize,
    pub seed: u64,
    /// `functional(Q_t) / |Q_t|`
    pub value: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicLevel {
    pub t: f64,
    pub mean: f64,
    pub std: f64,
    /// `std / |mean|`; zero when both vanish.
    pub rel_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErgodicTable {
    pub levels: Vec<ErgodicLevel>,
    /// Relative spread at the largest `t` below that at the smallest.
    pub decay: bool,
    /// `rel_std(t_max) / rel_std(t_min)`; `None` when the latter is zero.
    pub rel_std_ratio: Option<f64>,
    pub rows: Vec<ErgodicRow>,
}

impl ErgodicSpec {
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dim != 2 && self.dim != 3 {
            out.push(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if self.ts.len() < 3 {
            out.push(format!("need at least three cube sizes, got {}", self.ts.len()));
        }
        if self.ts.windows(2).any(|w| !(w[1] > w[0])) {
            out.push("cube sizes must increase".into());
        }
        if self.replicas < 8 {
            out.push(format!("need at least 8 replicas, got {}", self.replicas));
        }
        if !(self.dx > 0.0) {
            out.push("dx must be positive".into());
        } else if let Some(t) = self
            .ts
            .iter()
            .find(|&&t| !(t > 0.0) || AxisBox::cube(self.dim.clamp(2, 3), 0.0, t).ok().and_then(|b| b.divisions(self.dx, 1e-9)).is_none())
        {
            out.push(format!("cube side {t} is not a multiple of dx = {}", self.dx));
        }
        if let ErgodicFunctional::MinimizerEnergy { hole_conductivity, axis } = self.functional {
            if !(hole_conductivity > 0.0 && hole_conductivity <= 1.0) {
                out.push(format!("hole conductivity must lie in (0, 1], got {hole_conductivity}"));
            }
            if axis >= self.dim {
                out.push(format!("axis {axis} out of range for dim {}", self.dim));
            }
        }
        if let ErgodicGeometry::Periodic { spacing, .. } = self.geometry {
            if let Some(t) = self.ts.iter().find(|&&t| ((t / spacing) - (t / spacing).round()).abs() > 1e-9) {
                out.push(format!("cube side {t} is not a multiple of the lattice spacing {spacing}"));
            }
        }
        if !(self.tol > 0.0) {
            out.push("tol must be positive".into());
        }
        out
    }
}

/// Obstacles of one realization in `region`.
pub fn ergodic_obstacles(geometry: &ErgodicGeometry, region: &AxisBox, seed: u64) -> Result<ObstacleSet> {
    match geometry {
        ErgodicGeometry::Boolean { intensity, ball_radius } => {
            let pts = point_process::sample_poisson(region, *intensity, rng::derive_seed(seed, &[0]))?;
            if pts.is_empty() {
                return Ok(ObstacleSet::empty(pts));
            }
            build_balls(&pts, ball_radius, rng::derive_seed(seed, &[1]))
        }
        ErgodicGeometry::Rcm {
            intensity,
            connectivity,
            tube_radius,
        } => {
            let pts = point_process::sample_poisson(region, *intensity, rng::derive_seed(seed, &[0]))?;
            let edges = build_rcm_edges(&pts, connectivity, rng::derive_seed(seed, &[2]));
            build_tubes(&pts, &edges, tube_radius, Some(connectivity.inner_radius()))
        }
        ErgodicGeometry::Periodic { spacing, radius } => {
            let pts = PointConfiguration::lattice(*region, *spacing)?;
            build_balls(&pts, &BallRadiusRule::Fixed { radius: *radius }, 0)
        }
    }
}

/// `min Σ_edges a_e dx^{n-2} (u_i - u_j)^2` with `u = x_axis - lower` on the
/// boundary of the mask grid; edge conductance is the harmonic mean of the
/// node values (`1` off holes, `hole_conductivity` on holes).
pub fn minimizer_energy(mask: &PerforatedMask, hole_conductivity: f64, axis: usize, tol: f64) -> Result<(f64, usize)> {
    let g = &mask.grid;
    let n = g.len();
    let cond: Vec<f64> = mask
        .flags
        .iter()
        .map(|&f| if f == CellFlag::Hole { hole_conductivity } else { 1.0 })
        .collect();
    let boundary: Vec<bool> = (0..n).map(|i| g.on_boundary(g.ijk(i))).collect();
    let u0: Vec<f64> = (0..n).map(|i| g.ijk(i)[axis] as f64 * g.dx).collect();
    let mut unknown = vec![usize::MAX; n];
    let mut m = 0;
    for i in 0..n {
        if !boundary[i] {
            unknown[i] = m;
            m += 1;
        }
    }
    let s = g.strides();
    let edge = |i: usize, j: usize| 2.0 * cond[i] * cond[j] / (cond[i] + cond[j]);
    let mut u = u0.clone();
    let mut iterations = 0;
    if m > 0 {
        let mut trip = Vec::with_capacity(m * (2 * g.dim + 1));
        let mut rhs = vec![0.0; m];
        for i in 0..n {
            if boundary[i] {
                continue;
            }
            let ui = unknown[i];
            let ijk = g.ijk(i);
            let mut diag = 0.0;
            for d in 0..g.dim {
                for j in [i - s[d], i + s[d]] {
                    let a = edge(i, j);
                    diag += a;
                    if boundary[j] {
                        rhs[ui] += a * u0[j];
                    } else {
                        trip.push((ui, unknown[j], -a));
                    }
                }
                debug_assert!(ijk[d] > 0);
            }
            trip.push((ui, ui, diag));
        }
        let a = SparseMatrix::from_triplets(m, trip);
        let side = g.shape.iter().copied().max().unwrap_or(1);
        // conductivity contrast slows Jacobi-CG; allow generous iterations
        let out = cg_solve(&a, &rhs, None, &CgOptions { tol, max_iter: 200 * side })?;
        for i in 0..n {
            if !boundary[i] {
                u[i] = out.x[unknown[i]];
            }
        }
        iterations = out.iterations;
    }
    let mut energy = 0.0;
    for i in 0..n {
        let ijk = g.ijk(i);
        for d in 0..g.dim {
            if ijk[d] + 1 < g.shape[d] {
                let j = i + s[d];
                // boundary-face edges carry half weight so that cubes tile
                let mut w = 1.0;
                for e in 0..g.dim {
                    if e != d && (ijk[e] == 0 || ijk[e] + 1 == g.shape[e]) {
                        w *= 0.5;
                    }
                }
                energy += w * edge(i, j) * (u[j] - u[i]).powi(2);
            }
        }
    }
    Ok((energy * g.dx.powi(g.dim as i32 - 2), iterations))
}

fn evaluate(spec: &ErgodicSpec, mask: &PerforatedMask, cube: &AxisBox) -> Result<(f64, usize)> {
    let vol = cube.volume();
    match spec.functional {
        ErgodicFunctional::LocalCapacity => {
            let est = local_capacity(mask, cube, spec.tol)?;
            Ok((est.value / vol, est.iterations))
        }
        ErgodicFunctional::MinimizerEnergy { hole_conductivity, axis } => {
            let sub = mask.restrict(cube)?;
            let (e, it) = minimizer_energy(&sub, hole_conductivity, axis, spec.tol)?;
            Ok((e / vol, it))
        }
    }
}

fn realize_box(spec: &ErgodicSpec, region: &AxisBox, seed: u64) -> Result<PerforatedMask> {
    let obstacles = ergodic_obstacles(&spec.geometry, region, seed)?;
    rasterize_with(
        &obstacles,
        region,
        spec.dx,
        &RasterOptions {
            hole_model: spec.hole_model,
        },
    )
}

/// Mean and relative spread of `functional(Q_t) / |Q_t|` across replicas
/// for each cube size.
pub fn ergodic_average_experiment(spec: &ErgodicSpec) -> Result<ErgodicTable> {
    let diag = spec.diagnostics();
    if !diag.is_empty() {
        return Err(Error::invalid(diag.join("; ")));
    }
    let jobs: Vec<(f64, usize)> = spec
        .ts
        .iter()
        .flat_map(|&t| (0..spec.replicas).map(move |r| (t, r)))
        .collect();
    let rows: Vec<Result<ErgodicRow>> = jobs
        .par_iter()
        .map(|&(t, replica)| {
            let seed = rng::derive_seed(spec.seed, &[STAGE_ERGODIC, t.to_bits(), replica as u64]);
            let cube = AxisBox::cube(spec.dim, 0.0, t)?;
            let mask = realize_box(spec, &cube, seed)?;
            let (value, iterations) = evaluate(spec, &mask, &cube)?;
            Ok(ErgodicRow {
                t,
                replica,
                seed,
                value,
                iterations,
            })
        })
        .collect();
    let rows: Vec<ErgodicRow> = rows.into_iter().collect::<Result<_>>()?;
    let levels: Vec<ErgodicLevel> = spec
        .ts
        .iter()
        .map(|&t| {
            let v: Vec<f64> = rows.iter().filter(|r| r.t == t).map(|r| r.value).collect();
            let (mean, std) = mean_and_std(&v);
            let rel_std = if std == 0.0 { 0.0 } else { std / mean.abs() };
            ErgodicLevel { t, mean, std, rel_std }
        })
        .collect();
    let first = levels.first().expect("at least three levels").rel_std;
    let last = levels.last().expect("at least three levels").rel_std;
    Ok(ErgodicTable {
        decay: last < first,
        rel_std_ratio: (first > 0.0).then(|| last / first),
        levels,
        rows,
    })
}

/// Functional values on two cubes of side `t` separated by `gap` along the
/// first axis, in one realization per replica, and their sample
/// correlation.
pub fn disjoint_cube_correlation(spec: &ErgodicSpec, t: f64, gap: f64) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut upper = [t; 3];
    upper[0] = 2.0 * t + gap;
    let region = AxisBox::new(spec.dim, [0.0; 3], upper)?;
    let left = AxisBox::cube(spec.dim, 0.0, t)?;
    let right = left.translated(&[t + gap, 0.0, 0.0]);
    let pairs: Vec<Result<(f64, f64)>> = (0..spec.replicas)
        .into_par_iter()
        .map(|replica| {
            let seed = rng::derive_seed(spec.seed, &[STAGE_ERGODIC, u64::MAX, replica as u64]);
            let mask = realize_box(spec, &region, seed)?;
            Ok((evaluate(spec, &mask, &left)?.0, evaluate(spec, &mask, &right)?.0))
        })
        .collect();
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, sx) = mean_and_std(&xs);
    let (my, sy) = mean_and_std(&ys);
    let n = pairs.len() as f64;
    let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / (n - 1.0);
    let rho = if sx > 0.0 && sy > 0.0 { cov / (sx * sy) } else { 0.0 };
    Ok((rho, pairs))
}

impl ErgodicTable {
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn levels_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for level in &self.levels {
            w.serialize(level).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Two-column plot data: `t` against relative standard deviation.
    pub fn plot_data(&self) -> String {
        let mut s = String::from("# t rel_std\n");
        for l in &self.levels {
            s.push_str(&format!("{} {}\n", l.t, l.rel_std));
        }
        s
    }
}
