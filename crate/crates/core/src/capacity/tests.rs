use rand::Rng;

use super::*;
use crate::geom::{AxisBox, Coord};
use crate::point_process::PointConfiguration;
use crate::random_geometry::{build_balls, rasterize, BallRadiusRule, CellFlag, ObstacleSet, PerforatedMask};
use crate::rng;

fn balls(centers: Vec<Coord>, radius: f64, bbox: AxisBox) -> ObstacleSet {
    let cfg = PointConfiguration::from_points(centers, bbox, 1.0).unwrap();
    build_balls(&cfg, &BallRadiusRule::Fixed { radius }, 0).unwrap()
}

#[test]
fn newton_capacity_rejects_two_dimensions() {
    let o = balls(vec![[0.0; 3]], 0.1, AxisBox::cube(2, -1.0, 1.0).unwrap());
    let r = newton_capacity(&o, [0.0; 3], 1.0, 0.1, Truncation::Cube, 1e-8);
    assert!(matches!(r, Err(crate::Error::UnsupportedDimension(2))));
}

#[test]
fn octant_reduction_matches_full_box() {
    let bbox = AxisBox::cube(3, -1.0, 1.0).unwrap();
    let centred = balls(vec![[0.0; 3]], 0.26, bbox);
    // same ball, but listed twice at one point so the octant path is skipped
    let cfg = PointConfiguration::from_points(vec![[0.0; 3], [0.0; 3]], bbox, 1.0).unwrap();
    let doubled = build_balls(&cfg, &BallRadiusRule::Fixed { radius: 0.26 }, 0).unwrap();
    for trunc in [Truncation::Cube, Truncation::Sphere] {
        let a = newton_capacity(&centred, [0.0; 3], 1.0, 1.0 / 12.0, trunc, 1e-12).unwrap();
        let b = newton_capacity(&doubled, [0.0; 3], 1.0, 1.0 / 12.0, trunc, 1e-12).unwrap();
        assert!(a.octant && !b.octant);
        assert!(a.obstacle_nodes * 8 > b.obstacle_nodes);
        assert!((a.value - b.value).abs() <= 1e-9 * b.value, "{trunc:?}: {} vs {}", a.value, b.value);
    }
}

#[test]
fn newton_capacity_is_translation_invariant() {
    let bbox = AxisBox::cube(3, -2.0, 2.0).unwrap();
    let c1 = [0.0; 3];
    let c2 = [0.25, -0.5, 0.75];
    let a = newton_capacity(&balls(vec![c1], 0.3, bbox), c1, 1.0, 0.125, Truncation::Sphere, 1e-12).unwrap();
    let b = newton_capacity(&balls(vec![c2], 0.3, bbox), c2, 1.0, 0.125, Truncation::Sphere, 1e-12).unwrap();
    assert!((a.value - b.value).abs() <= 1e-9 * a.value);
}

#[test]
fn coarse_ball_capacity_is_near_analytic() {
    let o = balls(vec![[0.0; 3]], 0.25, AxisBox::cube(3, -1.0, 1.0).unwrap());
    let est = newton_capacity(&o, [0.0; 3], 1.0, 1.0 / 24.0, Truncation::Sphere, 1e-10).unwrap();
    let exact = ball_capacity_truncated(0.25, 1.0);
    assert!((est.value / exact - 1.0).abs() < 0.15, "{} vs {exact}", est.value);
}

fn unit_mask(dim: usize, dx: f64) -> PerforatedMask {
    PerforatedMask::hole_free(&AxisBox::unit(dim), dx).unwrap()
}

#[test]
fn hole_free_cube_has_zero_capacity() {
    let m = unit_mask(3, 1.0 / 16.0);
    let cube = cube_at(3, [0.5; 3], 0.5).unwrap();
    let est = local_capacity(&m, &cube, 1e-10).unwrap();
    assert_eq!(est.value, 0.0);
    assert_eq!(est.iterations, 0);
}

#[test]
fn local_capacity_is_monotone_under_inclusion() {
    let dx = 1.0 / 32.0;
    let cube = cube_at(2, [0.5; 3], 0.5).unwrap();
    for seed in 0..10 {
        let mut a = unit_mask(2, dx);
        let mut r = rng::stream(seed);
        for f in a.flags.iter_mut() {
            if *f == CellFlag::Material && r.random::<f64>() < 0.05 {
                *f = CellFlag::Hole;
            }
        }
        let mut b = a.clone();
        for f in b.flags.iter_mut() {
            if *f == CellFlag::Material && r.random::<f64>() < 0.05 {
                *f = CellFlag::Hole;
            }
        }
        let ca = local_capacity(&a, &cube, 1e-12).unwrap().value;
        let cb = local_capacity(&b, &cube, 1e-12).unwrap().value;
        assert!(ca <= cb, "seed {seed}: {ca} > {cb}");
    }
}

#[test]
fn local_capacity_equals_cube_truncated_newton_capacity() {
    let dx = 1.0 / 32.0;
    let bbox = AxisBox::unit(3);
    let o = balls(vec![[0.5; 3]], 0.1, bbox);
    let m = rasterize(&o, &bbox, dx).unwrap();
    let cube = cube_at(3, [0.5; 3], 1.0).unwrap();
    let local = local_capacity(&m, &cube, 1e-12).unwrap().value;
    let newton = newton_capacity(&o, [0.5; 3], 0.5, dx, Truncation::Cube, 1e-12).unwrap().value;
    assert!((local - newton).abs() <= 1e-8 * newton, "{local} vs {newton}");
}

#[test]
fn split_cubes_bound_parent_capacity() {
    let dx = 1.0 / 32.0;
    let bbox = AxisBox::unit(2);
    let o = balls(vec![[0.3, 0.35, 0.0], [0.62, 0.7, 0.0], [0.55, 0.4, 0.0]], 0.06, bbox);
    let m = rasterize(&o, &bbox, dx).unwrap();
    let h = 0.5;
    let parent = local_capacity(&m, &cube_at(2, [0.5; 3], h).unwrap(), 1e-12).unwrap().value;
    let mut sum = 0.0;
    for cx in [0.375, 0.625] {
        for cy in [0.375, 0.625] {
            sum += local_capacity(&m, &cube_at(2, [cx, cy, 0.0], h / 2.0).unwrap(), 1e-12).unwrap().value;
        }
    }
    assert!(parent > 0.0);
    assert!(sum >= parent * (1.0 - 5.0 * dx / h));
}

#[test]
fn penalized_functional_basics() {
    let dx = 1.0 / 32.0;
    let bbox = AxisBox::unit(2);
    let o = balls(vec![[0.42, 0.55, 0.0]], 0.1, bbox);
    let m = rasterize(&o, &bbox, dx).unwrap();
    let z = [0.5, 0.5, 0.0];
    let zero = penalized_functional(&m, z, 0.5, 1.0, &[0.0, 0.0], 1e-12).unwrap();
    assert_eq!(zero.value, 0.0);
    assert!(zero.field.iter().all(|&v| v == 0.0));
    // superposition of minimizers
    let p1 = penalized_functional(&m, z, 0.5, 1.0, &[1.0, 0.0], 1e-13).unwrap();
    let p2 = penalized_functional(&m, z, 0.5, 1.0, &[0.0, 1.0], 1e-13).unwrap();
    let p12 = penalized_functional(&m, z, 0.5, 1.0, &[1.0, 1.0], 1e-13).unwrap();
    let scale = p12.field.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for i in 0..p12.field.len() {
        assert!((p12.field[i] - p1.field[i] - p2.field[i]).abs() <= 1e-9 * scale);
    }
    // quadratic form
    let a = conductivity_tensor(&m, z, 0.5, 1.0, 1e-13).unwrap();
    assert!(a.asymmetry() <= 1e-10);
    assert!(a.eigenvalues()[0] >= -1e-10 * 0.25);
    let mut r = rng::stream(3);
    for _ in 0..5 {
        let xi = [r.random::<f64>() - 0.5, r.random::<f64>() - 0.5];
        let p = penalized_functional(&m, z, 0.5, 1.0, &xi, 1e-13).unwrap().value;
        let norm2 = xi[0] * xi[0] + xi[1] * xi[1];
        assert!((p - a.quadratic_form(&xi)).abs() <= 1e-6 * norm2 * 0.25);
    }
    assert!(penalized_functional(&m, z, 0.5, 2.5, &[1.0, 0.0], 1e-8).is_err());
}

#[test]
fn mirror_symmetric_obstacle_decouples_axes() {
    let dx = 1.0 / 32.0;
    let bbox = AxisBox::unit(2);
    // symmetric under x -> 1 - x
    let o = balls(vec![[0.3, 0.62, 0.0], [0.7, 0.62, 0.0], [0.5, 0.3, 0.0]], 0.08, bbox);
    let m = rasterize(&o, &bbox, dx).unwrap();
    let a = conductivity_tensor(&m, [0.5, 0.5, 0.0], 0.75, 1.0, 1e-13).unwrap();
    assert!(a.entries[0][1].abs() <= 1e-9 * a.entries[0][0], "{:?}", a.entries);
}

struct HoleFree;

impl MaskFamily for HoleFree {
    fn domain(&self) -> AxisBox {
        AxisBox::unit(3)
    }

    fn seed(&self, _eps: f64, replica: usize) -> u64 {
        replica as u64
    }

    fn mask(&self, _eps: f64, _replica: usize) -> crate::Result<PerforatedMask> {
        PerforatedMask::hole_free(&AxisBox::unit(3), 1.0 / 16.0)
    }
}

#[test]
fn strange_term_of_hole_free_family_is_zero() {
    let opts = StrangeTermOptions {
        hs: vec![0.5, 0.75],
        epsilons: vec![0.1, 0.05, 0.025],
        replicas: 2,
        center: None,
        tol: 1e-10,
        bound: Some(1.0),
    };
    let est = strange_term(&HoleFree, &opts).unwrap();
    assert_eq!(est.c, 0.0);
    assert_eq!(est.rows.len(), 12);
    assert!(est.rows.iter().all(|r| r.cap == 0.0));
    let bad = StrangeTermOptions {
        epsilons: vec![0.2, 0.1, 0.05],
        ..opts
    };
    assert!(strange_term(&HoleFree, &bad).is_err());
}
