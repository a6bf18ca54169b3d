mod common;

use common::c;
use henon_dynamics::bifurcation::{
    attracting_cycle_scan, continue_orbit, quadratic_family_fixed_analysis, render_slice, ClassifierConfig, ContinuationConfig,
    ContinuationStatus, EventKind, ParamPath, PixelClass, QuadraticFamily, ScanConfig, ScanReport, SliceConfig, SliceImage, Window,
};
use henon_dynamics::henon::point_dist;
use henon_dynamics::periodic::{record_from_points, OrbitType};
use henon_dynamics::{HenonComposition, C64};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn small_scan(modulus: f64) -> ScanConfig {
    ScanConfig {
        moduli: vec![modulus],
        angles: 16,
        inits: 64,
        classifier: ClassifierConfig { max_iter: 5000, ..ClassifierConfig::default() },
        ..ScanConfig::default()
    }
}

#[test]
fn small_jacobian_ring_has_no_extra_sinks() {
    let rep = attracting_cycle_scan(&QuadraticFamily::default(), &small_scan(0.2)).unwrap();
    assert!(rep.hit_parameters().is_empty());
    assert!(rep.results.iter().all(|r| r.has_reference && r.undecided == 0));
}

#[test]
fn scan_is_independent_of_thread_count() {
    let cfg = small_scan(0.95);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&attracting_cycle_scan(&QuadraticFamily::default(), &cfg).unwrap()).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn scan_report_round_trips() {
    let rep = attracting_cycle_scan(&QuadraticFamily::default(), &small_scan(0.6)).unwrap();
    let back: ScanReport = serde_json::from_str(&serde_json::to_string(&rep).unwrap()).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn scan_grid_passes_through_requested_parameter() {
    let a = c(-0.669, 0.73);
    let cfg = ScanConfig { moduli: vec![a.norm()], angles: 500, angle_offset: ScanConfig::offset_through(a, 500), ..ScanConfig::default() };
    assert!(cfg.parameters().iter().any(|p| (p - a).norm() < 1e-12));
    assert_eq!(cfg.initial_points().len(), 10000);
}

fn slice(a: C64, side: usize, max_iter: usize, window: Window) -> SliceImage {
    let f = HenonComposition::quadratic(a, c(0.0, 0.0)).unwrap();
    let cfg = SliceConfig { window, width: side, height: side, classifier: ClassifierConfig { max_iter, ..ClassifierConfig::default() } };
    render_slice(&f, &cfg).unwrap()
}

#[test]
fn small_jacobian_basin_matches_unit_disk() {
    let side = 160;
    let w = Window::square(2.0);
    let im = slice(c(0.05, 0.0), side, 2000, w);
    let mut inside = 0;
    for row in 0..side {
        for col in 0..side {
            if w.pixel_center(col, row, side, side).norm() < 1.0 {
                inside += 1;
            }
        }
    }
    let oracle = inside as f64 / (side * side) as f64;
    let black = im.fraction(PixelClass::Basin(0));
    assert!(im.origin_basin);
    assert!((black - oracle).abs() <= 0.02 * oracle, "{black} vs {oracle}");
    assert!((oracle - PI / 16.0).abs() < 0.01);
}

#[test]
fn far_window_escapes_entirely() {
    let im = slice(c(0.3, 0.1), 20, 1000, Window { x_min: 30.0, x_max: 40.0, y_min: 30.0, y_max: 40.0 });
    assert_eq!(im.fraction(PixelClass::Escape), 1.0);
}

#[test]
fn period_three_parameter_shows_two_basins() {
    let im = slice(c(-0.669, 0.73), 120, 20000, Window::square(2.0));
    assert!(im.origin_basin);
    assert!(im.fraction(PixelClass::Basin(0)) > 0.0);
    assert_eq!(im.registry[1].period, 3);
    assert!(im.fraction(PixelClass::Basin(1)) > 0.0);
    assert_eq!(SliceImage::color(PixelClass::Basin(1)), [220, 20, 20]);
}

#[test]
fn doubling_iterations_only_refines() {
    let a = c(-0.669, 0.73);
    let coarse = slice(a, 48, 300, Window::square(2.0));
    let fine = slice(a, 48, 600, Window::square(2.0));
    assert!(coarse.fraction(PixelClass::Undecided) < 0.5);
    for (p, q) in coarse.pixels.iter().zip(&fine.pixels) {
        match (p, q) {
            (PixelClass::Undecided, _) => {}
            (PixelClass::Escape, PixelClass::Escape) => {}
            (PixelClass::Basin(i), PixelClass::Basin(j)) => {
                assert!(coarse.registry[*i as usize].same_as(&fine.registry[*j as usize], 1e-6));
            }
            _ => panic!("{p:?} became {q:?}"),
        }
    }
}

#[test]
fn ppm_header_is_exact() {
    let im = slice(c(0.3, 0.0), 7, 100, Window::square(2.0));
    let ppm = im.to_ppm();
    let header = b"P6\n7 7\n255\n";
    assert_eq!(&ppm[..header.len()], header);
    assert_eq!(ppm.len(), header.len() + 3 * 49);
}

#[test]
fn render_rejects_bad_resolution() {
    let f = HenonComposition::quadratic(c(0.3, 0.0), c(0.0, 0.0)).unwrap();
    let cfg = SliceConfig { window: Window::square(2.0), width: 0, height: 10, classifier: ClassifierConfig::default() };
    assert!(render_slice(&f, &cfg).is_err());
}

#[test]
fn quadratic_fixed_point_examples() {
    let r = quadratic_family_fixed_analysis(c(0.5, 0.0));
    assert_eq!(r.alpha.kind, OrbitType::Attracting);
    assert_eq!(r.beta.kind, OrbitType::Saddle);
    assert_eq!(r.beta.point, [c(0.5, 0.0), c(0.5, 0.0)]);
    let golden = C64::from_polar(1.0, TAU * (5f64.sqrt() - 1.0) / 2.0);
    assert!(quadratic_family_fixed_analysis(golden).siegel_candidate);
    assert!(!quadratic_family_fixed_analysis(c(-1.0, 0.0)).siegel_candidate);
    assert!(!quadratic_family_fixed_analysis(C64::from_polar(1.0, TAU / 7.0)).siegel_candidate);
}

#[test]
fn continuation_invariants_hold_along_radial_path() {
    let fam = QuadraticFamily::default();
    let path = ParamPath::radial(2.0, 0.4, 1.6);
    let f0 = HenonComposition::quadratic(path.at(0.0), c(0.0, 0.0)).unwrap();
    let alpha = record_from_points(&f0, vec![[c(0.0, 0.0); 2]], 1, 1);
    let track = continue_orbit(&fam, path, &alpha, &ContinuationConfig::default()).unwrap();
    assert_eq!(track.status, ContinuationStatus::Completed);
    for s in &track.steps {
        let f = HenonComposition::quadratic(s.param, c(0.0, 0.0)).unwrap();
        let z = s.orbit.points[0];
        assert!(point_dist(&f.iterate(z, 1), &z) <= 1e-9);
    }
    let mut changes = 0;
    for w in track.steps.windows(2) {
        assert!(point_dist(&w[0].orbit.points[0], &w[1].orbit.points[0]) <= 0.1);
        for i in 0..2 {
            let (u, v) = (w[0].eigenvalues[i].norm().ln(), w[1].eigenvalues[i].norm().ln());
            if u * v < 0.0 {
                changes += 1;
            }
        }
    }
    assert_eq!(changes, track.unit_crossings());
    assert_eq!(changes, 2);
    for e in &track.events {
        assert!(matches!(e.event, EventKind::UnitCrossing { .. }));
        assert!((e.param.norm() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn two_cycle_returns_around_collision() {
    // the 2-cycle (sω, sω²), s = 1 − a, collapses at a = 1
    let fam = QuadraticFamily::default();
    let path = ParamPath::Arc { center: c(1.0, 0.0), radius: 0.5, theta0: 0.0, theta1: TAU };
    let a0 = path.at(0.0);
    let s = 1.0 - a0;
    let w = C64::from_polar(1.0, TAU / 3.0);
    let pts = vec![[s * w, s * w * w], [s * w * w, s * w]];
    let f0 = HenonComposition::quadratic(a0, c(0.0, 0.0)).unwrap();
    assert!(point_dist(&f0.iterate(pts[0], 2), &pts[0]) < 1e-12);
    let rec = record_from_points(&f0, pts, 1, 2);
    let track = continue_orbit(&fam, path, &rec, &ContinuationConfig::default()).unwrap();
    assert_eq!(track.status, ContinuationStatus::Completed);
    assert_eq!(track.monodromy, Some(vec![0, 1]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_on_unit_circle_is_neutral(theta in -PI..PI) {
        let r = quadratic_family_fixed_analysis(C64::from_polar(1.0, theta));
        for l in r.alpha.eigenvalues {
            prop_assert!((l.norm() - 1.0).abs() < 1e-12);
        }
        let prod = r.beta.eigenvalues[0] * r.beta.eigenvalues[1];
        prop_assert!((prod.norm() - 1.0).abs() < 1e-12);
    }
}
