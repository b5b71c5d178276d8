use serde::Serialize;
use serde_json::{json, Value};

use randhom::capacity::{
    ball_capacity_truncated, conductivity_tensor, newton_capacity, strange_term, StrangeTermOptions,
};
use randhom::grid_solver::{
    energy_parts, h1_norm, l2_norm, solve_dirichlet_perforated, GridField, SolveOptions, Source,
};
use randhom::homogenization::{ergodic_average_experiment, realize, run_sweep, Realization, SpecFamily};
use randhom::point_process::{self, PointConfiguration};
use randhom::random_geometry::{build_balls, density_ratio_check, geometry_stats, BallRadiusRule};
use randhom::rng::derive_seed;
use randhom::AxisBox;

use crate::config::{CapacityConfig, Command, ConfigFile, GeometryConfig, SourceInput};
use crate::CliError;

/// Files produced by a command, plus what goes into the run record.
#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    pub warnings: Vec<String>,
    /// Some rows failed but the rest were written.
    pub partial: bool,
}

impl Outcome {
    fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.artifacts.push((name.to_string(), bytes.into()));
    }

    fn add_json(&mut self, name: &str, value: &impl Serialize) {
        let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
        text.push('\n');
        self.add(name, text);
    }
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn execute(config: &ConfigFile) -> Result<Outcome, CliError> {
    let missing = || CliError::Validation(vec![format!("missing `{}` section", config.command.section())]);
    match config.command {
        Command::Geometry => geometry(config.geometry.as_ref().ok_or_else(missing)?),
        Command::Solve => {
            let s = config.solve.as_ref().ok_or_else(missing)?;
            solve(&s.geometry, s.reaction, &s.source, s.tol)
        }
        Command::Capacity => capacity(config.capacity.as_ref().ok_or_else(missing)?),
        Command::Sweep => {
            let spec = config.sweep.as_ref().ok_or_else(missing)?;
            let report = run_sweep(spec)?;
            let mut out = Outcome {
                partial: report.summary.partial,
                warnings: report.warnings.clone(),
                ..Default::default()
            };
            out.add("rows.csv", report.rows_csv()?);
            out.add("l2_error.dat", report.l2_plot_data());
            out.add_json("capacity.json", &report.strange_term);
            out.add_json("summary.json", &json!({ "format_version": crate::config::FORMAT_VERSION, "summary": report.summary }));
            out.summary = serde_json::to_value(&report.summary).expect("summary serializes");
            Ok(out)
        }
        Command::Ergodic => {
            let spec = config.ergodic.as_ref().ok_or_else(missing)?;
            let table = ergodic_average_experiment(spec)?;
            let mut out = Outcome::default();
            out.add("rows.csv", table.rows_csv()?);
            out.add("levels.csv", table.levels_csv()?);
            out.add("rel_std.dat", table.plot_data());
            out.summary = json!({
                "format_version": crate::config::FORMAT_VERSION,
                "decay": table.decay,
                "rel_std_ratio": table.rel_std_ratio,
                "levels": table.levels,
            });
            out.add_json("summary.json", &out.summary.clone());
            Ok(out)
        }
        Command::DensityCheck => {
            let d = config.density_check.as_ref().ok_or_else(missing)?;
            let real = realize_one(&d.geometry)?;
            let check = density_ratio_check(
                &real.mask,
                d.radius,
                d.probes,
                d.interior_only,
                derive_seed(d.geometry.seed, &[3]),
            )?;
            let mut out = Outcome {
                warnings: real.mask.warnings.clone(),
                ..Default::default()
            };
            out.summary = json!({ "format_version": crate::config::FORMAT_VERSION, "density": check });
            out.add_json("density.json", &out.summary.clone());
            Ok(out)
        }
    }
}

fn realize_one(g: &GeometryConfig) -> Result<Realization, CliError> {
    Ok(realize(&g.as_sweep(), g.epsilon, 0)?)
}

fn geometry(g: &GeometryConfig) -> Result<Outcome, CliError> {
    let real = realize_one(g)?;
    let stats = geometry_stats(&real.obstacles, &real.mask, g.boundary_layer);
    let mut out = Outcome {
        warnings: real.mask.warnings.clone(),
        ..Default::default()
    };
    out.add("mask.txt", real.mask.to_text());
    out.add("points.txt", point_process::to_text(&real.points));
    out.summary = json!({ "format_version": crate::config::FORMAT_VERSION, "stats": stats });
    out.add_json("stats.json", &out.summary.clone());
    Ok(out)
}

fn solve(g: &GeometryConfig, reaction: f64, source: &SourceInput, tol: f64) -> Result<Outcome, CliError> {
    let real = realize_one(g)?;
    let mask = &real.mask;
    let src = match source {
        SourceInput::Value(v) => v.to_source(),
        SourceInput::File(path) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::Validation(vec![format!("source file {path}: {e}")]))?;
            let (m, field) = GridField::from_bytes(&bytes)?;
            if m.grid != mask.grid {
                return Err(CliError::Validation(vec![format!("source file {path} is on a different grid")]));
            }
            Source::Values(field.values)
        }
    };
    let (u, report) = solve_dirichlet_perforated(mask, reaction, &src, &SolveOptions { tol, max_iter: None })?;
    let f = src.sample(mask)?;
    let energy = energy_parts(&u, mask, reaction, &f)?;
    let mut out = Outcome {
        warnings: mask.warnings.clone(),
        ..Default::default()
    };
    out.add("mask.txt", mask.to_text());
    out.add("solution.field", u.to_bytes(mask)?);
    out.summary = json!({
        "format_version": crate::config::FORMAT_VERSION,
        "solve_report": report,
        "energy": energy,
        "l2_norm": l2_norm(&u),
        "h1_norm": h1_norm(&u),
        "source_norm": l2_norm(&f),
    });
    out.add_json("solve.json", &out.summary.clone());
    Ok(out)
}

#[derive(Serialize)]
struct OracleRow {
    dx: f64,
    cap: f64,
    iterations: Option<usize>,
    obstacle_nodes: Option<usize>,
}

/// First-order extrapolation from the two finest spacings: the staircase
/// error of a rasterized sphere is linear in `dx`.
pub fn extrapolate(coarse: (f64, f64), fine: (f64, f64)) -> f64 {
    let (d1, v1) = coarse;
    let (d2, v2) = fine;
    v2 + (v2 - v1) * d2 / (d1 - d2)
}

fn capacity(c: &CapacityConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    match c {
        CapacityConfig::BallOracle {
            radius,
            outer_radius,
            dxs,
            truncation,
            tol,
        } => {
            let bbox = AxisBox::cube(3, -outer_radius, *outer_radius)?;
            let cfg = PointConfiguration::from_points(vec![[0.0; 3]], bbox, 1.0)?;
            let ball = build_balls(&cfg, &BallRadiusRule::Fixed { radius: *radius }, 0)?;
            let mut rows = Vec::new();
            for &dx in dxs {
                let est = newton_capacity(&ball, [0.0; 3], *outer_radius, dx, *truncation, *tol)?;
                rows.push(OracleRow {
                    dx,
                    cap: est.value,
                    iterations: Some(est.iterations),
                    obstacle_nodes: Some(est.obstacle_nodes),
                });
            }
            let n = rows.len();
            let limit = extrapolate((rows[n - 2].dx, rows[n - 2].cap), (rows[n - 1].dx, rows[n - 1].cap));
            rows.push(OracleRow {
                dx: 0.0,
                cap: limit,
                iterations: None,
                obstacle_nodes: None,
            });
            let exact = ball_capacity_truncated(*radius, *outer_radius);
            out.add("capacity.csv", csv_bytes(&rows)?);
            out.summary = json!({
                "format_version": crate::config::FORMAT_VERSION,
                "exact": exact,
                "extrapolated": limit,
                "relative_error": (limit / exact - 1.0).abs(),
                "finest": rows[n - 1].cap,
            });
        }
        CapacityConfig::Strange { spec } => {
            out.warnings = spec.validate()?;
            let est = strange_term(
                &SpecFamily(spec),
                &StrangeTermOptions {
                    hs: spec.hs.clone(),
                    epsilons: spec.epsilons.clone(),
                    replicas: spec.replicas,
                    center: None,
                    tol: spec.tol,
                    bound: spec.capacity_bound,
                },
            )?;
            out.add("capacity.csv", csv_bytes(&est.rows)?);
            out.summary = json!({
                "format_version": crate::config::FORMAT_VERSION,
                "c": est.c,
                "spread": est.spread,
                "eps_then_h": est.eps_then_h,
                "h_then_eps": est.h_then_eps,
                "bound_violations": est.bound_violations,
            });
        }
        CapacityConfig::Tensor {
            geometry,
            center,
            h,
            gamma,
            tol,
        } => {
            let real = realize_one(geometry)?;
            out.warnings = real.mask.warnings.clone();
            let t = conductivity_tensor(&real.mask, *center, *h, *gamma, *tol)?;
            out.summary = json!({ "format_version": crate::config::FORMAT_VERSION, "tensor": t });
        }
    }
    out.add_json("summary.json", &out.summary.clone());
    Ok(out)
}
