use proptest::prelude::*;

use randhom::capacity::{cube_at, local_capacity};
use randhom::grid_solver::{energy_parts, solve_dirichlet_perforated, SolveOptions, Source};
use randhom::homogenization::{build_partition_of_unity, smoothstep};
use randhom::point_process::{self, sample_poisson, PointConfiguration};
use randhom::random_geometry::{build_balls, rasterize, BallRadiusRule, PerforatedMask};
use randhom::rng::{derive_seed, hash_uniform};
use randhom::AxisBox;

fn discs(seed: u64, intensity: f64, radius: f64, dx: f64) -> PerforatedMask {
    let domain = AxisBox::unit(2);
    let cfg = sample_poisson(&domain, intensity, seed).unwrap();
    rasterize(&build_balls(&cfg, &BallRadiusRule::Fixed { radius }, 0).unwrap(), &domain, dx).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampling_is_reproducible_and_inside(seed in any::<u64>(), intensity in 0.0f64..200.0) {
        let b = AxisBox::new(2, [-0.5, 1.0, 0.0], [0.5, 1.25, 0.0]).unwrap();
        let a = sample_poisson(&b, intensity, seed).unwrap();
        prop_assert_eq!(&a, &sample_poisson(&b, intensity, seed).unwrap());
        prop_assert!(a.points.iter().all(|p| b.contains_half_open(p)));
    }

    #[test]
    fn point_text_round_trips(seed in any::<u64>()) {
        let a = sample_poisson(&AxisBox::unit(3), 20.0, seed).unwrap();
        let b = point_process::from_text(&point_process::to_text(&a)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_separate_paths(master in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(master, &[a]), derive_seed(master, &[b]));
        let u = hash_uniform(master, a, b);
        prop_assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn mask_text_round_trips(seed in any::<u64>()) {
        let m = discs(seed, 15.0, 0.05, 1.0 / 32.0);
        prop_assert_eq!(PerforatedMask::from_text(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn adding_obstacles_never_lowers_capacity(seed in any::<u64>()) {
        let inner = discs(seed, 10.0, 0.04, 1.0 / 32.0);
        let outer = inner.union(&discs(seed ^ 1, 10.0, 0.04, 1.0 / 32.0)).unwrap();
        let cube = cube_at(2, [0.5, 0.5, 0.0], 0.5).unwrap();
        let c1 = local_capacity(&inner, &cube, 1e-10).unwrap().value;
        let c2 = local_capacity(&outer, &cube, 1e-10).unwrap().value;
        prop_assert!(c2 >= c1, "{} < {}", c2, c1);
    }

    #[test]
    fn solution_minimizes_energy(seed in any::<u64>(), reaction in 0.0f64..5.0) {
        let m = discs(seed, 10.0, 0.05, 1.0 / 24.0);
        prop_assume!(m.material_count() > 0);
        let src = Source::Constant(-1.0);
        let (u, _) = solve_dirichlet_perforated(&m, reaction, &src, &SolveOptions { tol: 1e-12, max_iter: None }).unwrap();
        prop_assert!(u.values.iter().all(|&v| v >= -1e-12));
        let f = src.sample(&m).unwrap();
        let g = energy_parts(&u, &m, reaction, &f).unwrap().gamma;
        prop_assert!(g <= 0.0);
        // u minimizes Γ, so rescaling it cannot lower the energy
        for s in [0.9, 1.1] {
            let mut v = u.clone();
            v.values.iter_mut().for_each(|x| *x *= s);
            let gs = energy_parts(&v, &m, reaction, &f).unwrap().gamma;
            prop_assert!(gs >= g - 1e-10 * g.abs(), "{} < {}", gs, g);
        }
    }

    #[test]
    fn partition_sums_to_one(h in 0.3f64..0.6, frac in 0.2f64..0.45) {
        let dx = 1.0 / 64.0;
        let r = (frac * h).max(4.0 * dx);
        prop_assume!(r < h / 2.0);
        let pu = build_partition_of_unity(&AxisBox::unit(2), h, r, dx).unwrap();
        for i in 0..pu.grid.len() {
            prop_assert!((pu.sum_at(i) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn smoothstep_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(smoothstep(lo) <= smoothstep(hi));
        prop_assert!((smoothstep(a) + smoothstep(1.0 - a) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fixed_balls_cover_their_centres(x in 0.1f64..0.9, y in 0.1f64..0.9, r in 0.02f64..0.1) {
        let cfg = PointConfiguration::from_points(vec![[x, y, 0.0]], AxisBox::unit(2), 1.0).unwrap();
        let o = build_balls(&cfg, &BallRadiusRule::Fixed { radius: r }, 0).unwrap();
        prop_assert!(o.contains(&[x, y, 0.0]));
        prop_assert!(!o.contains(&[x + 1.01 * r, y, 0.0]));
    }
}
