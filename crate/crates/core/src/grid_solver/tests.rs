use std::f64::consts::PI;

use rand::Rng;

use super::*;
use crate::point_process::PointConfiguration;
use crate::random_geometry::{build_balls, rasterize, BallRadiusRule, CellFlag};
use crate::rng;

fn square_mask(dx: f64) -> PerforatedMask {
    PerforatedMask::hole_free(&AxisBox::unit(2), dx).unwrap()
}

fn random_mask(dim: usize, dx: f64, seed: u64) -> PerforatedMask {
    let mut m = PerforatedMask::hole_free(&AxisBox::unit(dim), dx).unwrap();
    let mut r = rng::stream(seed);
    for f in m.flags.iter_mut() {
        if *f == CellFlag::Material && r.random::<f64>() < 0.2 {
            *f = CellFlag::Hole;
        }
    }
    m
}

fn tight() -> SolveOptions {
    SolveOptions { tol: 1e-12, max_iter: None }
}

#[test]
fn zero_source_gives_zero() {
    let m = random_mask(2, 1.0 / 16.0, 1);
    let (u, rep) = solve_dirichlet_perforated(&m, 1.0, &Source::Constant(0.0), &tight()).unwrap();
    assert!(u.values.iter().all(|&v| v == 0.0));
    assert_eq!(rep.iterations, 0);
}

fn mms_error(dx: f64, reaction: f64) -> f64 {
    let m = square_mask(dx);
    let exact = |p: &[f64; 3]| (PI * p[0]).sin() * (PI * p[1]).sin();
    let f = Source::Expr(
        crate::expr::Expr::parse(&format!("-(2*pi*pi + {reaction}) * sin(pi*x) * sin(pi*y)")).unwrap(),
    );
    let (u, _) = solve_dirichlet_perforated(&m, reaction, &f, &tight()).unwrap();
    let ustar = GridField::from_fn(&m, exact);
    l2_distance(&u, &ustar).unwrap()
}

#[test]
fn manufactured_solution_is_second_order() {
    let errs: Vec<f64> = [16.0, 32.0, 64.0].iter().map(|n| mms_error(1.0 / n, 1.0)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.7..=2.3).contains(&order), "order {order}, errors {errs:?}");
    }
}

#[test]
fn nonpositive_source_gives_nonnegative_solution() {
    for seed in 0..10 {
        let m = random_mask(2, 1.0 / 12.0, seed);
        let mut r = rng::stream(100 + seed);
        let f: Vec<f64> = (0..m.grid.len()).map(|_| -r.random::<f64>()).collect();
        let (u, _) = solve_dirichlet_perforated(&m, 0.5, &Source::Values(f), &tight()).unwrap();
        assert!(u.values.iter().all(|&v| v >= 0.0), "seed {seed}");
    }
}

#[test]
fn homogenized_with_zero_c_matches_hole_free_solve() {
    let d = AxisBox::unit(2);
    let f = Source::Constant(-1.0);
    let opts = SolveOptions::default();
    let (a, ra) = solve_homogenized(&d, 1.0, 0.0, &f, 1.0 / 32.0, &opts).unwrap();
    let (b, rb) = solve_dirichlet_perforated(&square_mask(1.0 / 32.0), 1.0, &f, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.iterations, rb.iterations);
}

#[test]
fn large_strange_term_suppresses_solution() {
    let c = 1e6;
    let (u, _) = solve_homogenized(&AxisBox::unit(2), 1.0, c, &Source::Constant(-1.0), 1.0 / 32.0, &tight())
        .unwrap();
    assert!(u.max_abs() <= 1.0 / (1.0 + c) * (1.0 + 1e-9));
    assert!(solve_homogenized(&AxisBox::unit(2), 1.0, -1.0, &Source::Constant(-1.0), 0.125, &tight()).is_err());
}

#[test]
fn homogenized_manufactured_solution_is_second_order() {
    let reaction = 1.0;
    let c = 3.0;
    let err = |n: f64| {
        let f = Source::Expr(
            crate::expr::Expr::parse(&format!("-(2*pi*pi + {}) * sin(pi*x) * sin(pi*y)", reaction + c)).unwrap(),
        );
        let (u, _) = solve_homogenized(&AxisBox::unit(2), reaction, c, &f, 1.0 / n, &tight()).unwrap();
        let ustar = GridField::from_fn(&square_mask(1.0 / n), |p| (PI * p[0]).sin() * (PI * p[1]).sin());
        l2_distance(&u, &ustar).unwrap()
    };
    let order = (err(16.0) / err(32.0)).log2();
    assert!((1.7..=2.3).contains(&order), "{order}");
}

#[test]
fn l2_distance_examples() {
    let m = square_mask(0.125);
    let ones = GridField {
        grid: m.grid,
        values: vec![1.0; m.grid.len()],
    };
    let zero = GridField::zeros(m.grid);
    assert_eq!(l2_distance(&ones, &ones).unwrap(), 0.0);
    assert!((l2_distance(&ones, &zero).unwrap() - 1.0).abs() < 1e-15);
    let other = GridField::zeros(square_mask(0.25).grid);
    assert!(l2_distance(&ones, &other).is_err());
}

#[test]
fn l2_distance_matches_naive_sum() {
    let m = random_mask(3, 1.0 / 20.0, 3);
    let mut r = rng::stream(4);
    let a: Vec<f64> = (0..m.grid.len()).map(|_| r.random::<f64>() - 0.5).collect();
    let b: Vec<f64> = (0..m.grid.len()).map(|_| r.random::<f64>() - 0.5).collect();
    let u = GridField::from_values(&m, a).unwrap();
    let v = GridField::from_values(&m, b).unwrap();
    let mut naive = 0.0;
    for i in 0..m.grid.len() {
        naive += (u.values[i] - v.values[i]).powi(2);
    }
    let naive = (naive * m.grid.cell_volume()).sqrt();
    let got = l2_distance(&u, &v).unwrap();
    assert!((got - naive).abs() <= 1e-12 * naive);
}

#[test]
fn energy_inequalities_hold() {
    for seed in 0..5 {
        let m = random_mask(3, 1.0 / 12.0, seed);
        let src = Source::Constant(-1.0);
        let (u, _) = solve_dirichlet_perforated(&m, 1.0, &src, &SolveOptions::default()).unwrap();
        let f = src.sample(&m).unwrap();
        let e = energy_parts(&u, &m, 1.0, &f).unwrap();
        assert!(e.gamma <= 0.0);
        assert!(e.gradient + e.reaction <= 2.0 * l2_norm(&u) * l2_norm(&f) * (1.0 + 1e-8));
        let zero = GridField::zeros(m.grid);
        assert_eq!(energy_gamma(&zero, &m, 1.0, &f).unwrap(), 0.0);
    }
}

#[test]
fn adding_holes_raises_minimum_energy() {
    let dx = 1.0 / 24.0;
    let a = random_mask(2, dx, 7);
    let mut b = a.clone();
    let mut r = rng::stream(8);
    for f in b.flags.iter_mut() {
        if *f == CellFlag::Material && r.random::<f64>() < 0.1 {
            *f = CellFlag::Hole;
        }
    }
    let src = Source::Constant(-1.0);
    let solve = |m: &PerforatedMask| {
        let (u, _) = solve_dirichlet_perforated(m, 1.0, &src, &tight()).unwrap();
        energy_gamma(&u, m, 1.0, &src.sample(m).unwrap()).unwrap()
    };
    assert!(solve(&b) >= solve(&a));
}

#[test]
fn zero_extension_is_consistent() {
    // sums over material nodes only equal sums over all nodes
    let m = random_mask(2, 1.0 / 16.0, 11);
    let (u, _) = solve_dirichlet_perforated(&m, 1.0, &Source::Constant(-1.0), &tight()).unwrap();
    let mut s = 0.0;
    for i in 0..m.grid.len() {
        if m.is_material(i) {
            s += u.values[i] * u.values[i];
        }
    }
    assert_eq!(
        (s * m.grid.cell_volume()).sqrt().to_bits(),
        (dot(&u.values, &u.values) * m.grid.cell_volume()).sqrt().to_bits()
    );
    assert!(m.flags.iter().zip(&u.values).all(|(f, v)| *f == CellFlag::Material || *v == 0.0));
}

#[test]
fn operator_is_positive_definite() {
    for seed in 0..3 {
        let m = random_mask(3, 0.125, seed);
        let op = StencilOperator::dirichlet(&m, 0.0).unwrap();
        let mut r = rng::stream(seed + 50);
        let mut av = vec![0.0; op.len()];
        for _ in 0..100 {
            let v: Vec<f64> = (0..op.len())
                .map(|i| if op.active[i] { r.random::<f64>() - 0.5 } else { 0.0 })
                .collect();
            op.apply(&v, &mut av);
            assert!(dot(&v, &av) > 0.0);
        }
    }
}

#[test]
fn friedrichs_constant_matches_closed_form() {
    for (dim, dx) in [(2, 1.0 / 32.0), (3, 1.0 / 16.0)] {
        let d = AxisBox::unit(dim);
        let cd = friedrichs_constant(&d, dx).unwrap();
        let exact = 1.0 / dirichlet_eigenvalue_closed_form(&d, dx).sqrt();
        assert!((cd - exact).abs() <= 1e-8 * exact, "{cd} vs {exact}");
    }
}

#[test]
fn friedrichs_inequality_holds_for_solutions() {
    let d = AxisBox::unit(2);
    let dx = 1.0 / 32.0;
    let cd = friedrichs_constant(&d, dx).unwrap();
    let cfg = PointConfiguration::from_points(vec![[0.3, 0.6, 0.0]], d, 1.0).unwrap();
    let o = build_balls(&cfg, &BallRadiusRule::Fixed { radius: 0.15 }, 0).unwrap();
    let m = rasterize(&o, &d, dx).unwrap();
    let (u, _) = solve_dirichlet_perforated(&m, 1.0, &Source::Constant(-1.0), &tight()).unwrap();
    assert!(l2_norm(&u) <= cd * gradient_norm(&u));
}

#[test]
fn iteration_count_scales_with_resolution() {
    let its: Vec<usize> = [16.0, 32.0, 64.0]
        .iter()
        .map(|n| {
            solve_dirichlet_perforated(&square_mask(1.0 / n), 0.0, &Source::Constant(-1.0), &tight())
                .unwrap()
                .1
                .iterations
        })
        .collect();
    for w in its.windows(2) {
        let ratio = w[1] as f64 / w[0] as f64;
        assert!((1.5..=2.7).contains(&ratio), "{its:?}");
    }
}

#[test]
fn solver_failure_carries_history() {
    let opts = SolveOptions { tol: 1e-12, max_iter: Some(2) };
    match solve_dirichlet_perforated(&square_mask(1.0 / 32.0), 0.0, &Source::Constant(-1.0), &opts) {
        Err(crate::Error::SolverFailure { residual_history, .. }) => assert_eq!(residual_history.len(), 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn field_bytes_round_trip() {
    let m = random_mask(3, 0.125, 5);
    let (u, _) = solve_dirichlet_perforated(&m, 1.0, &Source::Constant(-1.0), &tight()).unwrap();
    let bytes = u.to_bytes(&m).unwrap();
    let (m2, u2) = GridField::from_bytes(&bytes).unwrap();
    assert_eq!(m2, m);
    assert_eq!(u2, u);
    assert!(GridField::from_bytes(&bytes[..bytes.len() - 3]).is_err());
}
