mod common;

use common::{c, disk, random_poly};
use henon_dynamics::henon::point_dist;
use henon_dynamics::periodic::{exact_period, fixed_points_henon, period2_points_henon, periodic_points, PeriodicConfig};
use henon_dynamics::{HenonComposition, HenonFactor, MonicCenteredPolynomial, Point, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lambda_family(l: f64) -> HenonComposition {
    let l2 = c(l * l, 0.0);
    HenonComposition::single(c(1.0, 0.0), MonicCenteredPolynomial::new(4, vec![l2 * l2, c(0.0, 0.0), -2.0 * l2]).unwrap()).unwrap()
}

#[test]
fn lambda_family_fixed_points_are_double() {
    let l = 0.7;
    let recs = fixed_points_henon(&lambda_family(l)).unwrap();
    assert_eq!(recs.iter().map(|r| r.multiplicity).sum::<usize>(), 4);
    for r in &recs {
        assert_eq!(r.multiplicity, 2);
        assert!(r.trace.norm() < 1e-6, "{:?}", r.trace);
        let z = r.points[0];
        assert!((z[0].norm() - l).abs() < 1e-7 && (z[0] - z[1]).norm() < 1e-7);
    }
}

#[test]
fn lambda_family_two_cycles_have_trace_two() {
    let l = 0.9;
    let recs = period2_points_henon(&lambda_family(l)).unwrap();
    assert!(!recs.is_empty());
    for r in &recs {
        assert!((r.trace - 2.0).norm() < 1e-9, "{:?}", r.trace);
    }
    let target: Point = [c(l, 0.0), c(-l, 0.0)];
    assert!(recs.iter().any(|r| r.points.iter().any(|p| point_dist(p, &target) < 1e-7)));
}

#[test]
fn quadratic_family_beta_eigenvalues() {
    let a = c(0.37, -0.21);
    let f = HenonComposition::quadratic(a, c(0.0, 0.0)).unwrap();
    let recs = fixed_points_henon(&f).unwrap();
    assert_eq!(recs.len(), 2);
    let beta = recs.iter().find(|r| (r.points[0][0] - (1.0 - a)).norm() < 1e-12).expect("beta");
    for l in beta.eigenvalues {
        assert!((l * l - 2.0 * (1.0 - a) * l - a).norm() < 1e-12);
    }
    let alpha = recs.iter().find(|r| r.points[0][0].norm() < 1e-12).expect("alpha");
    for l in alpha.eigenvalues {
        assert!((l * l - a).norm() < 1e-12);
    }
}

#[test]
fn period_two_count_matches_closed_form() {
    let f = HenonComposition::quadratic(c(0.3, 0.0), c(-1.0, 0.0)).unwrap();
    let set = periodic_points(&f, 2, &PeriodicConfig::default()).unwrap();
    assert_eq!(set.count_with_multiplicity(), 4);
    let two: usize = set.records.iter().filter(|r| r.period == 2).map(|r| r.multiplicity * 2).sum();
    assert_eq!(two, 2);
    let closed: usize = period2_points_henon(&f).unwrap().iter().map(|r| r.multiplicity * 2).sum();
    assert_eq!(closed, 2);
}

#[test]
fn exact_period_of_lower_period_points() {
    let f = HenonComposition::quadratic(c(0.3, 0.0), c(-1.0, 0.0)).unwrap();
    let set = periodic_points(&f, 4, &PeriodicConfig::default()).unwrap();
    let fixed = set.records.iter().find(|r| r.period == 1).unwrap();
    let two = set.records.iter().find(|r| r.period == 2).unwrap();
    assert_eq!(exact_period(&f, fixed, 4, 1e-9), 1);
    assert_eq!(exact_period(&f, two, 4, 1e-9), 2);
}

/// Newton on f²(z) = z, following a from `a0` to `a1`.
fn follow_two_cycle(z0: Point, a0: f64, a1: f64, steps: usize) -> Point {
    let mut z = z0;
    for s in 0..=steps {
        let a = a0 + (a1 - a0) * s as f64 / steps as f64;
        let f = HenonComposition::quadratic(c(a, 0.0), c(-1.0, 0.0)).unwrap();
        for _ in 0..30 {
            let w = f.iterate(z, 2);
            let m = f.differential(f.evaluate(z)).mul(&f.differential(z));
            let j = [[m.0[0][0] - 1.0, m.0[0][1]], [m.0[1][0], m.0[1][1] - 1.0]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let r = [w[0] - z[0], w[1] - z[1]];
            let dx = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            let dy = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
            z = [z[0] - dx, z[1] - dy];
        }
    }
    z
}

#[test]
fn superattracting_two_cycle_persists() {
    let z = follow_two_cycle([c(0.0, 0.0), c(-1.0, 0.0)], 1e-9, 0.3, 300);
    let f = HenonComposition::quadratic(c(0.3, 0.0), c(-1.0, 0.0)).unwrap();
    let set = periodic_points(&f, 6, &PeriodicConfig::default()).unwrap();
    let rec = set.records.iter().find(|r| r.points.iter().any(|p| point_dist(p, &z) < 1e-8)).expect("continued cycle present");
    assert_eq!(rec.period, 2);
    assert_eq!(exact_period(&f, rec, 6, 1e-9), 2);
}

#[test]
fn fixed_point_count_of_quadratic_family() {
    let f = HenonComposition::quadratic(c(0.6, 0.2), c(0.0, 0.0)).unwrap();
    assert_eq!(periodic_points(&f, 1, &PeriodicConfig::default()).unwrap().count_with_multiplicity(), 2);
}

fn random_map(seed: u64, d: usize) -> HenonComposition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HenonComposition::single(disk(&mut rng, 0.5) + c(0.02, 0.0), random_poly(&mut rng, d, 1.2)).unwrap()
}

fn jac_power(f: &HenonComposition, n: usize) -> C64 {
    f.jacobian_const().powu(n as u32)
}

#[test]
fn composition_of_two_factors_is_complete() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let f = HenonComposition::new(vec![
        HenonFactor::new(disk(&mut rng, 0.5) + 0.05, random_poly(&mut rng, 2, 1.0)).unwrap(),
        HenonFactor::new(disk(&mut rng, 0.5) + 0.05, random_poly(&mut rng, 3, 1.0)).unwrap(),
    ])
    .unwrap();
    for n in 1..=3 {
        let set = periodic_points(&f, n, &PeriodicConfig::default()).unwrap();
        assert!(set.is_complete());
        assert_eq!(set.count_with_multiplicity(), 6usize.pow(n as u32));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cycles_are_periodic_with_consistent_multipliers(seed in any::<u64>(), d in 2usize..=3, n in 1usize..=4) {
        let f = random_map(seed, d);
        let set = periodic_points(&f, n, &PeriodicConfig::default()).unwrap();
        prop_assert!(set.is_complete());
        prop_assert_eq!(set.count_with_multiplicity(), d.pow(n as u32));
        for r in &set.records {
            let z = r.points[0];
            prop_assert!(point_dist(&f.iterate(z, r.period), &z) <= 1e-9 * (1.0 + z[0].norm()));
            let det = r.eigenvalues[0] * r.eigenvalues[1];
            let target = jac_power(&f, r.period);
            prop_assert!((det - target).norm() <= 1e-8 * target.norm());
            prop_assert!((r.eigenvalues[0] + r.eigenvalues[1] - r.trace).norm() == 0.0);
        }
    }
}
