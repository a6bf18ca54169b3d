//! Acceptance checks, one line of output per check.

mod common;

use std::time::{Duration, Instant};

use henon_dynamics::bifurcation::{attracting_cycle_scan, continue_orbit, ContinuationConfig, ContinuationStatus, EventKind, ParamPath, QuadraticFamily, ScanConfig};
use henon_dynamics::lyap::{chi_plus_periodic, fold_certificate, FoldConfig, FoldOutcome};
use henon_dynamics::periodic::{fixed_points_henon, period2_points_henon, periodic_points, record_from_points, PeriodicConfig};
use henon_dynamics::spectra::{isospectral_search, spectra_equal, trace_spectrum, IsospectralConfig, SearchMode};
use henon_dynamics::{HenonComposition, MonicCenteredPolynomial, PeriodicOrbitRecord, C64};
use common::{backward_lyapunov, c, disk, random_poly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn within(elapsed: Duration, limit: Duration) -> Check {
    if elapsed <= limit {
        Ok(format!("{:.1}s", elapsed.as_secs_f64()))
    } else {
        Err(format!("took {:.1}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn functional_equations() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut g_worst, mut phi_worst, mut certified): (f64, f64, usize) = (0.0, 0.0, 0);
    for _ in 0..10_000 {
        let d = rng.gen_range(2..=5);
        let p = random_poly(&mut rng, d, 1.5);
        let r = p.escape_radius();
        let z = disk(&mut rng, 3.0 * r);
        let pz = p.eval(z);
        let gz = p.green(z, 1e-14);
        g_worst = g_worst.max((p.green(pz, 1e-14) - d as f64 * gz).abs());
        if let (Ok(phi_z), Ok(phi_pz)) = (p.bottcher(z), p.bottcher(pz)) {
            let target = phi_z.powu(d as u32);
            phi_worst = phi_worst.max((phi_pz - target).norm() / target.norm());
            certified += 1;
        }
    }
    let time = within(t.elapsed(), Duration::from_secs(10))?;
    let detail = format!("G dev {g_worst:.1e}, phi rel dev {phi_worst:.1e} on {certified} certified points, {time}");
    if g_worst <= 1e-8 && phi_worst <= 1e-8 && certified > 1000 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn manning_przytycki() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = 2 + i % 3;
        let p = random_poly(&mut rng, d, 1.2);
        let mp = p.mp_lyapunov(1e-14).map_err(|e| e.to_string())?;
        let oracle = backward_lyapunov(&p, 200_000, &mut rng);
        worst = worst.max((mp - oracle).abs());
    }
    let mut mono: f64 = 0.0;
    for d in 2..=4 {
        let v = MonicCenteredPolynomial::monomial(d).mp_lyapunov(1e-14).map_err(|e| e.to_string())?;
        mono = mono.max((v - (d as f64).ln()).abs());
    }
    let time = within(t.elapsed(), Duration::from_secs(60))?;
    let detail = format!("max |mp - oracle| {worst:.2e}, monomial dev {mono:.1e}, {time}");
    if worst <= 1e-2 && mono <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mobius(n: usize) -> i64 {
    let (mut m, mut k, mut sign) = (n, 2, 1i64);
    while k * k <= m {
        if m % k == 0 {
            m /= k;
            if m % k == 0 {
                return 0;
            }
            sign = -sign;
        }
        k += 1;
    }
    if m > 1 {
        sign = -sign;
    }
    sign
}

fn exact_count(n: usize) -> i64 {
    (1..=n).filter(|m| n % m == 0).map(|m| mobius(n / m) * (1i64 << m)).sum()
}

fn periodic_completeness() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = PeriodicConfig::default();
    let mut maps = vec![HenonComposition::quadratic(c(0.3, 0.0), c(-1.0, 0.0)).unwrap()];
    for _ in 0..5 {
        maps.push(HenonComposition::single(disk(&mut rng, 0.5), random_poly(&mut rng, 2, 1.5)).unwrap());
    }
    for f in &maps {
        for n in 1..=6 {
            let set = periodic_points(f, n, &cfg).map_err(|e| e.to_string())?;
            if set.count_with_multiplicity() != 1 << n {
                return Err(format!("n={n}: {} points", set.count_with_multiplicity()));
            }
            for m in (1..=n).filter(|m| n % m == 0) {
                let got: usize = set.records.iter().filter(|r| r.period == m).map(|r| r.multiplicity * m).sum();
                if got as i64 != exact_count(m) {
                    return Err(format!("n={n}: exact period {m} has {got} points, expected {}", exact_count(m)));
                }
            }
        }
    }
    let time = within(t.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{} maps, n ≤ 6, {time}", maps.len()))
}

fn cycle_points(recs: &[PeriodicOrbitRecord], period: usize) -> Vec<[C64; 2]> {
    recs.iter().filter(|r| r.period == period).flat_map(|r| r.points.iter().copied().flat_map(move |p| std::iter::repeat(p).take(r.multiplicity))).collect()
}

fn greedy_match(a: &[[C64; 2]], b: &[[C64; 2]]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let dist = |p: &[C64; 2], q: &[C64; 2]| (p[0] - q[0]).norm().max((p[1] - q[1]).norm());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for p in a {
        let (j, dj) = b.iter().enumerate().filter(|(j, _)| !used[*j]).map(|(j, q)| (j, dist(p, q))).min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        used[j] = true;
        worst = worst.max(dj);
    }
    worst
}

fn closed_forms() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = PeriodicConfig::default();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = 2 + i % 3;
        let f = HenonComposition::single(disk(&mut rng, 0.8) + c(0.05, 0.0), random_poly(&mut rng, d, 1.0)).unwrap();
        let fix_cf = cycle_points(&fixed_points_henon(&f).map_err(|e| e.to_string())?, 1);
        let fix_gen = cycle_points(&periodic_points(&f, 1, &cfg).map_err(|e| e.to_string())?.records, 1);
        let p2_cf = cycle_points(&period2_points_henon(&f).map_err(|e| e.to_string())?, 2);
        let p2_gen = cycle_points(&periodic_points(&f, 2, &cfg).map_err(|e| e.to_string())?.records, 2);
        worst = worst.max(greedy_match(&fix_cf, &fix_gen)).max(greedy_match(&p2_cf, &p2_gen));
    }
    let detail = format!("max point distance {worst:.1e}");
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn example_family(l: f64) -> HenonComposition {
    let l2 = c(l * l, 0.0);
    let p = MonicCenteredPolynomial::new(4, vec![l2 * l2, c(0.0, 0.0), -2.0 * l2]).unwrap();
    HenonComposition::single(c(1.0, 0.0), p).unwrap()
}

fn constant_spectrum_family() -> Check {
    let cfg = PeriodicConfig::default();
    let mut tables = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let l = 0.3 + 0.17 * i as f64;
        let t = trace_spectrum(&example_family(l), 2, &cfg).map_err(|e| e.to_string())?;
        let p1 = t.period(1).unwrap();
        let p2 = t.period(2).unwrap();
        if p1.traces.len() != 4 || p2.formal_traces.is_empty() {
            return Err(format!("lambda={l}: {} fixed traces, {} period-2 traces", p1.traces.len(), p2.formal_traces.len()));
        }
        worst = p1.traces.iter().map(|t| t.norm()).chain(p2.formal_traces.iter().map(|t| (t - 2.0).norm())).fold(worst, f64::max);
        tables.push(t);
    }
    for i in 0..tables.len() {
        for j in i + 1..tables.len() {
            let cmp = spectra_equal(&tables[i], &tables[j], 1e-9);
            if !cmp.equal {
                return Err(format!("tables {i} and {j} differ: {:?}", cmp.reason));
            }
        }
    }
    let detail = format!("max deviation from (0, 2) {worst:.1e}, all pairs equal");
    if worst <= 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rigidity_search() -> Check {
    let t = Instant::now();
    let f0 = HenonComposition::quadratic(c(0.3, 0.0), c(-1.0, 0.0)).unwrap();
    let cfg = IsospectralConfig { mode: SearchMode::FixedJac, max_period: 2, radius: 2.0, grid: 200, ..IsospectralConfig::default() };
    let res = isospectral_search(&f0, &cfg).map_err(|e| e.to_string())?;
    let time = within(t.elapsed(), Duration::from_secs(300))?;
    let found: Vec<C64> = res.matches.iter().map(|m| m.map.factors()[0].poly.coeffs()[0]).collect();
    let detail = format!("{} grid points, {} minima, matches {found:?}, {time}", res.grid_points, res.local_minima);
    if res.matches.len() == 1 && (found[0] - c(-1.0, 0.0)).norm() < 1e-8 && !res.partial {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lyapunov_sandwich() -> Check {
    let t = Instant::now();
    let cfg = PeriodicConfig::default();
    let mut lines = Vec::new();
    for cc in [1e2, 1e3, 1e4] {
        let f = HenonComposition::quadratic(c(0.001, 0.0), c(cc, 0.0)).unwrap();
        let m = f.escape_rate(1e-14).map_err(|e| e.to_string())?.m;
        let chi = chi_plus_periodic(&f, 5, &cfg).map_err(|e| e.to_string())?.chi_plus_estimate;
        let ln2 = 2f64.ln();
        let (lo, hi) = (ln2 + m - 0.5 * (4.0f64 / 3.0).ln(), ln2 + 2.0 * m + 2.0 * 30f64.ln());
        if !(lo <= chi && chi <= hi) {
            return Err(format!("c={cc}: chi {chi} outside [{lo}, {hi}]"));
        }
        lines.push(format!("c={cc:e}: {lo:.3} ≤ {chi:.3} ≤ {hi:.3}"));
    }
    let f = HenonComposition::quadratic(c(0.05, 0.0), c(0.0, 0.0)).unwrap();
    let chi = chi_plus_periodic(&f, 6, &cfg).map_err(|e| e.to_string())?.chi_plus_estimate;
    let dev = (chi - 2f64.ln()).abs();
    let time = within(t.elapsed(), Duration::from_secs(300))?;
    let detail = format!("{}; small a: |chi - log 2| = {dev:.4}; {time}", lines.join(", "));
    if dev <= 0.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fold() -> Check {
    let f = HenonComposition::quadratic(c(0.001, 0.0), c(100.0, 0.0)).unwrap();
    match fold_certificate(&f, &FoldConfig::default()).map_err(|e| e.to_string())? {
        FoldOutcome::Certificate(cert) => {
            let detail = format!("q={}, degrees {:?}, divisibility {}, fully certified {}", cert.q, cert.sampled_degrees, cert.divisibility_ok, cert.certified);
            if cert.q == 2 && cert.divisibility_ok && cert.sampled_y.len() == 10 {
                Ok(detail)
            } else {
                Err(detail)
            }
        }
        other => Err(format!("{other:?}")),
    }
}

fn period_three_detection() -> Check {
    let t = Instant::now();
    let a = c(-0.669, 0.73);
    let cfg = ScanConfig { moduli: vec![a.norm()], angles: 500, angle_offset: ScanConfig::offset_through(a, 500), ..ScanConfig::default() };
    let rep = attracting_cycle_scan(&QuadraticFamily::default(), &cfg).map_err(|e| e.to_string())?;
    let res = rep.results.iter().min_by(|x, y| (x.param - a).norm().total_cmp(&(y.param - a).norm())).unwrap();
    if (res.param - a).norm() > 1e-12 {
        return Err(format!("grid misses the parameter, nearest {}", res.param));
    }
    let target = c(0.111236, -0.069787);
    let hit = res.hits.iter().filter(|h| h.period == 3).find(|h| h.points.iter().any(|p| (p[0] - target).norm() < 1e-3));
    let time = within(t.elapsed(), Duration::from_secs(900))?;
    match hit {
        Some(h) => {
            let p = h.points.iter().min_by(|x, y| (x[0] - target).norm().total_cmp(&(y[0] - target).norm())).unwrap();
            Ok(format!("period 3 through ({:.6}, {:.6}), {time}", p[0], p[1]))
        }
        None => Err(format!("hits {:?}", res.hits.iter().map(|h| h.period).collect::<Vec<_>>())),
    }
}

fn ring_count() -> Check {
    let t = Instant::now();
    let cfg = ScanConfig { moduli: vec![0.99], angles: 500, ..ScanConfig::default() };
    let rep = attracting_cycle_scan(&QuadraticFamily::default(), &cfg).map_err(|e| e.to_string())?;
    let hits = rep.hit_parameters();
    let paired = rep.conjugate_paired(1e-9);
    let time = within(t.elapsed(), Duration::from_secs(900))?;
    let args: Vec<String> = hits.iter().map(|a| format!("{:.5}", a.arg())).collect();
    let detail = format!("{} hit parameters (expected 12), conjugate pairs {paired}, args [{}], undecided {:.1e}, {time}", hits.len(), args.join(", "), rep.undecided_fraction);
    if hits.len() == 12 && paired {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn continuation() -> Check {
    let fam = QuadraticFamily::default();
    let cfg = ContinuationConfig::default();
    let radial = ParamPath::radial(1.0, 0.5, 1.5);
    let f0 = HenonComposition::quadratic(radial.at(0.0), c(0.0, 0.0)).unwrap();
    let alpha = record_from_points(&f0, vec![[c(0.0, 0.0); 2]], 1, 1);
    let track = continue_orbit(&fam, radial, &alpha, &cfg).map_err(|e| e.to_string())?;
    let crossings: Vec<f64> = track.events.iter().filter(|e| matches!(e.event, EventKind::UnitCrossing { .. })).map(|e| e.param.norm()).collect();
    if crossings.len() != 2 || crossings.iter().any(|r| (r - 1.0).abs() > 1e-6) || track.status != ContinuationStatus::Completed {
        return Err(format!("alpha crossings at |a| = {crossings:?}, status {:?}", track.status));
    }
    let circle = ParamPath::circle(0.5, 0.0);
    let a0 = circle.at(0.0);
    let f0 = HenonComposition::quadratic(a0, c(0.0, 0.0)).unwrap();
    let beta = record_from_points(&f0, vec![[1.0 - a0, 1.0 - a0]], 1, 1);
    let track = continue_orbit(&fam, circle, &beta, &cfg).map_err(|e| e.to_string())?;
    if track.unit_crossings() != 0 || track.status != ContinuationStatus::Completed {
        return Err(format!("beta: {} crossings, status {:?}", track.unit_crossings(), track.status));
    }
    let err: f64 = crossings.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    Ok(format!("alpha crosses at |a| = 1 ± {err:.1e}; beta: 0 crossings over {} steps", track.steps.len()))
}

fn conjugacy_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = PeriodicConfig::default();
    for i in 0..10 {
        let f = HenonComposition::single(disk(&mut rng, 0.8) + c(0.05, 0.0), random_poly(&mut rng, 3, 1.0)).unwrap();
        let t1 = trace_spectrum(&f, 3, &cfg).map_err(|e| e.to_string())?;
        for alpha in f.unity_group() {
            let g = f.unity_action(alpha).map_err(|e| e.to_string())?;
            let t2 = trace_spectrum(&g, 3, &cfg).map_err(|e| e.to_string())?;
            let cmp = spectra_equal(&t1, &t2, 1e-8);
            if !cmp.equal {
                return Err(format!("map {i}, alpha {alpha}: {:?}", cmp.reason));
            }
        }
    }
    Ok("10 maps of degree 3, periods ≤ 3".into())
}

fn main() {
    let checks: [(&str, fn() -> Check); 12] = [
        ("one-variable functional equations", functional_equations),
        ("Lyapunov exponent vs backward-orbit oracle", manning_przytycki),
        ("periodic point completeness", periodic_completeness),
        ("closed forms vs general solver", closed_forms),
        ("constant spectrum family", constant_spectrum_family),
        ("isolated isospectral search", rigidity_search),
        ("Lyapunov sandwich", lyapunov_sandwich),
        ("fold certificate", fold),
        ("period-3 attracting cycle", period_three_detection),
        ("ring |a|=0.99 hit count", ring_count),
        ("continuation crossings", continuation),
        ("conjugacy invariance", conjugacy_invariance),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
