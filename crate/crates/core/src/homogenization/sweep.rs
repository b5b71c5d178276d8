use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{mean_and_std, strange_term, StrangeTermEstimate, StrangeTermOptions};
use crate::error::{Error, Result};
use crate::grid_solver::{
    dirichlet_eigenvalue_closed_form, energy_parts, gradient_norm, h1_norm, l2_distance, l2_norm,
    solve_dirichlet_perforated, solve_homogenized, GridField, SolveOptions,
};
use crate::point_process;
use crate::random_geometry::{strongly_contained, volume_fraction, ObstacleShape, ObstacleSet};

use super::audit::{uniform_bound_audit, BoundAudit};
use super::family::{realize, PrebuiltFamily, Realization};
use super::spec::SweepSpec;

/// A ball counts towards the Boolean constant when its centre lies at least
/// this multiple of its radius away from `∂D`.
pub const STRONG_CONTAINMENT: f64 = 2.0;

/// Relative slack of the energy-inequality checks.
pub const ENERGY_TOL: f64 = 1e-8;

/// One `(eps, replica)` row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub replica: usize,
    pub seed: u64,
    /// `ok`, or the error that stopped the row.
    pub status: String,
    pub points: usize,
    pub volume_fraction: Option<f64>,
    pub hole_cells: usize,
    pub absorbers: usize,
    /// Fraction of unit cells of `D / eps` without points.
    pub empty_cell_frequency: Option<f64>,
    /// `cap / h^n` of this realization at the smallest `h`.
    pub cap_per_volume: Option<f64>,
    /// `Σ 4π r_i / |D|` over strongly contained balls (3D Boolean only).
    pub boolean_constant: Option<f64>,
    pub h1_norm: Option<f64>,
    pub l2_norm: Option<f64>,
    pub gradient_norm: Option<f64>,
    pub gamma: Option<f64>,
    /// `‖∇u‖^2 + λ‖u‖^2 + Σ k_i u_i^2`
    pub energy_lhs: Option<f64>,
    /// `2 ‖u‖ ‖f‖`
    pub energy_rhs: Option<f64>,
    pub l2_error: Option<f64>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
}

impl SweepRow {
    /// Row with identifiers set and every measurement missing.
    pub fn new(eps: f64, replica: usize, seed: u64) -> Self {
        SweepRow {
            eps,
            replica,
            seed,
            status: "ok".into(),
            points: 0,
            volume_fraction: None,
            hole_cells: 0,
            absorbers: 0,
            empty_cell_frequency: None,
            cap_per_volume: None,
            boolean_constant: None,
            h1_norm: None,
            l2_norm: None,
            gradient_norm: None,
            gamma: None,
            energy_lhs: None,
            energy_rhs: None,
            l2_error: None,
            iterations: None,
            residual: None,
        }
    }

    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    /// `Γ <= 0` and `lhs <= rhs`, each with relative slack [`ENERGY_TOL`].
    pub fn energy_inequalities_hold(&self) -> Option<bool> {
        let (g, lhs, rhs) = (self.gamma?, self.energy_lhs?, self.energy_rhs?);
        let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        Some(g <= ENERGY_TOL * scale && lhs <= rhs + ENERGY_TOL * scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFlags {
    pub energy_inequalities: bool,
    /// `None` with fewer than three scales.
    pub uniform_bound: Option<bool>,
    /// Largest `H¹` norm at most 1.5 times the one at the coarsest scale.
    pub h1_no_growth: Option<bool>,
    /// Mean L² error at the finest scale at most half the coarsest.
    pub convergence: Option<bool>,
    /// Pooled empty-cell frequency within 3σ of `exp(-intensity)`.
    pub empty_cells: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub c: f64,
    pub c_spread: f64,
    /// `strange_term` or `override`.
    pub c_source: String,
    pub friedrichs_constant: f64,
    pub source_norm: f64,
    /// `(eps, mean L² error)` in the order of `epsilons`.
    pub l2_error_by_eps: Vec<(f64, f64)>,
    /// `(eps, mean H¹ norm)`.
    pub h1_by_eps: Vec<(f64, f64)>,
    /// Least-squares slope of `log error` against `log eps`.
    pub l2_decay_rate: Option<f64>,
    /// Error at the finest scale over error at the coarsest.
    pub l2_error_ratio: Option<f64>,
    pub empty_cell_frequency: Option<f64>,
    pub boolean_constant: Option<f64>,
    pub audit: Option<BoundAudit>,
    pub flags: SweepFlags,
    /// True when some row failed.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogenizationReport {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
    pub strange_term: Option<StrangeTermEstimate>,
    pub warnings: Vec<String>,
}

fn boolean_constant(obstacles: &ObstacleSet, spec: &SweepSpec) -> Option<f64> {
    if spec.dim() != 3 {
        return None;
    }
    let ObstacleShape::Balls { radii } = &obstacles.shape else {
        return None;
    };
    let total: f64 = strongly_contained(obstacles, &spec.domain, STRONG_CONTAINMENT)
        .into_iter()
        .map(|i| 4.0 * PI * radii[i])
        .sum();
    Some(total / spec.domain.volume())
}

fn geometry_row(spec: &SweepSpec, real: &Realization) -> SweepRow {
    let mut row = SweepRow::new(real.eps, real.replica, real.seed);
    row.points = real.points.len();
    row.volume_fraction = volume_fraction(&real.mask).ok();
    row.hole_cells = real.mask.hole_count();
    row.absorbers = real.mask.absorbers.len();
    row.empty_cell_frequency = point_process::empty_cell_frequency(&real.points, 1.0).ok();
    row.boolean_constant = boolean_constant(&real.obstacles, spec);
    row
}

fn solve_row(spec: &SweepSpec, real: &Realization, u_hom: &GridField, row: &mut SweepRow) -> Result<()> {
    let source = spec.source.to_source();
    let opts = SolveOptions {
        tol: spec.tol,
        max_iter: None,
    };
    let (u, report) = solve_dirichlet_perforated(&real.mask, spec.reaction, &source, &opts)?;
    let f = source.sample(&real.mask)?;
    let parts = energy_parts(&u, &real.mask, spec.reaction, &f)?;
    let u_l2 = l2_norm(&u);
    row.h1_norm = Some(h1_norm(&u));
    row.l2_norm = Some(u_l2);
    row.gradient_norm = Some(gradient_norm(&u));
    row.gamma = Some(parts.gamma);
    row.energy_lhs = Some(parts.gradient + parts.reaction + parts.absorption);
    row.energy_rhs = Some(2.0 * u_l2 * l2_norm(&f));
    row.l2_error = Some(l2_distance(&u, u_hom)?);
    row.iterations = Some(report.iterations);
    row.residual = Some(report.residual);
    Ok(())
}

/// Groups ok rows by `eps` (spec order) and averages `value`.
fn by_eps(spec: &SweepSpec, rows: &[SweepRow], value: impl Fn(&SweepRow) -> Option<f64>) -> Vec<(f64, f64)> {
    spec.epsilons
        .iter()
        .filter_map(|&e| {
            let v: Vec<f64> = rows.iter().filter(|r| r.eps == e).filter_map(&value).collect();
            (!v.is_empty()).then(|| (e, mean_and_std(&v).0))
        })
        .collect()
}

fn log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the full pipeline: realizations, strange term on the same media,
/// one homogenized solve, perforated solves and the summary.
pub fn run_sweep(spec: &SweepSpec) -> Result<HomogenizationReport> {
    let mut warnings = spec.validate()?;
    let jobs: Vec<(f64, usize)> = spec
        .epsilons
        .iter()
        .flat_map(|&e| (0..spec.replicas).map(move |r| (e, r)))
        .collect();
    let realized: Vec<Result<Realization>> = jobs.par_iter().map(|&(e, r)| realize(spec, e, r)).collect();
    let mut rows = Vec::with_capacity(jobs.len());
    let mut reals = Vec::with_capacity(jobs.len());
    for (&(eps, replica), res) in jobs.iter().zip(realized) {
        match res {
            Ok(real) => {
                rows.push(geometry_row(spec, &real));
                reals.push(real);
            }
            Err(e) => {
                let mut row = SweepRow::new(eps, replica, super::family::realization_seed(spec.seed, eps, replica));
                row.status = format!("geometry: {e}");
                rows.push(row);
            }
        }
    }
    for real in &reals {
        for w in &real.mask.warnings {
            let w = format!("eps = {}, replica {}: {w}", real.eps, real.replica);
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
    }

    let (c, c_spread, c_source, strange) = match spec.c_override {
        Some(c) => (c, 0.0, "override".to_string(), None),
        None => {
            if reals.len() != jobs.len() {
                return Err(Error::invalid("strange term needs every realization; geometry stage failed"));
            }
            let family = PrebuiltFamily {
                domain: spec.domain,
                realizations: &reals,
            };
            let est = strange_term(
                &family,
                &StrangeTermOptions {
                    hs: spec.hs.clone(),
                    epsilons: spec.epsilons.clone(),
                    replicas: spec.replicas,
                    center: None,
                    tol: spec.tol,
                    bound: spec.capacity_bound,
                },
            )?;
            (est.c, est.spread, "strange_term".to_string(), Some(est))
        }
    };
    if let Some(est) = &strange {
        let hmin = spec.hs.iter().copied().fold(f64::INFINITY, f64::min);
        for row in rows.iter_mut() {
            row.cap_per_volume = est
                .rows
                .iter()
                .find(|r| r.h == hmin && r.eps == row.eps && r.replica == row.replica)
                .map(|r| r.cap_per_volume);
        }
    }

    let source = spec.source.to_source();
    let opts = SolveOptions {
        tol: spec.tol,
        max_iter: None,
    };
    let (u_hom, _) = solve_homogenized(&spec.domain, spec.reaction, c, &source, spec.grid.dx, &opts)?;
    let solved: Vec<(usize, Result<SweepRow>)> = reals
        .par_iter()
        .map(|real| {
            let idx = jobs
                .iter()
                .position(|&(e, r)| e == real.eps && r == real.replica)
                .expect("realization comes from a job");
            let mut row = rows[idx].clone();
            let res = solve_row(spec, real, &u_hom, &mut row).map(|_| row);
            (idx, res)
        })
        .collect();
    for (idx, res) in solved {
        match res {
            Ok(row) => rows[idx] = row,
            Err(e) => rows[idx].status = format!("solve: {e}"),
        }
    }
    drop(reals);

    let friedrichs = 1.0 / dirichlet_eigenvalue_closed_form(&spec.domain, spec.grid.dx).sqrt();
    let hole_free = crate::random_geometry::PerforatedMask::hole_free(&spec.domain, spec.grid.dx)?;
    let source_norm = l2_norm(&source.sample(&hole_free)?);
    let summary = summarize(spec, &rows, c, c_spread, c_source, friedrichs, source_norm);
    Ok(HomogenizationReport {
        spec: spec.clone(),
        rows,
        summary,
        strange_term: strange,
        warnings,
    })
}

fn summarize(
    spec: &SweepSpec,
    rows: &[SweepRow],
    c: f64,
    c_spread: f64,
    c_source: String,
    friedrichs: f64,
    source_norm: f64,
) -> SweepSummary {
    let l2_error_by_eps = by_eps(spec, rows, |r| r.l2_error);
    let h1_by_eps = by_eps(spec, rows, |r| r.h1_norm);
    let l2_error_ratio = match (l2_error_by_eps.first(), l2_error_by_eps.last()) {
        (Some(a), Some(b)) if l2_error_by_eps.len() >= 2 && a.1 > 0.0 => Some(b.1 / a.1),
        _ => None,
    };
    let audit = uniform_bound_audit(rows, friedrichs, source_norm).ok();
    let h1_no_growth = h1_by_eps.first().and_then(|&(e0, _)| {
        let first: Vec<f64> = rows.iter().filter(|r| r.eps == e0).filter_map(|r| r.h1_norm).collect();
        let max = rows.iter().filter_map(|r| r.h1_norm).fold(f64::NAN, f64::max);
        (h1_by_eps.len() >= 2).then(|| max <= 1.5 * mean_and_std(&first).0)
    });
    // pooled empty-cell frequency over all realizations
    let cells: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| {
            let f = r.empty_cell_frequency?;
            let n = (spec.domain.volume() / r.eps.powi(spec.dim() as i32)).round();
            Some((f * n, n))
        })
        .collect();
    let (empty_cell_frequency, empty_cells) = if cells.is_empty() {
        (None, None)
    } else {
        let empty: f64 = cells.iter().map(|c| c.0).sum();
        let total: f64 = cells.iter().map(|c| c.1).sum();
        let freq = empty / total;
        let p = (-spec.intensity).exp();
        let sigma = (p * (1.0 - p) / total).sqrt();
        (Some(freq), Some((freq - p).abs() <= 3.0 * sigma))
    };
    let bc: Vec<f64> = rows.iter().filter_map(|r| r.boolean_constant).collect();
    let boolean_constant = (!bc.is_empty()).then(|| mean_and_std(&bc).0);
    let flags = SweepFlags {
        energy_inequalities: rows.iter().all(|r| !r.ok() || r.energy_inequalities_hold() == Some(true)),
        uniform_bound: audit.as_ref().map(|a| a.pass),
        h1_no_growth,
        convergence: l2_error_ratio.map(|r| r <= 0.5),
        empty_cells,
    };
    SweepSummary {
        c,
        c_spread,
        c_source,
        friedrichs_constant: friedrichs,
        source_norm,
        l2_decay_rate: log_slope(&l2_error_by_eps),
        l2_error_by_eps,
        h1_by_eps,
        l2_error_ratio,
        empty_cell_frequency,
        boolean_constant,
        audit,
        flags,
        partial: rows.iter().any(|r| !r.ok()),
    }
}

impl HomogenizationReport {
    /// Rows as CSV, one line per `(eps, replica)`; missing values are empty.
    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Two-column plot data: `eps` against mean L² error.
    pub fn l2_plot_data(&self) -> String {
        let mut s = String::from("# eps l2_error\n");
        for (e, v) in &self.summary.l2_error_by_eps {
            s.push_str(&format!("{e} {v}\n"));
        }
        s
    }
}
