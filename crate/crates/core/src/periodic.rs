//! Periodic points of Hénon compositions: closed forms for periods one and
//! two, a complete homotopy solver for general periods, and classification.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};
use crate::henon::{point_dist, HenonComposition, Point};
use crate::homotopy::{self, CyclicSystem, TrackOptions};
use crate::io::hex;
use crate::linalg::{self, eigen_from_trace_det, Mat2};
use crate::poly1d::MonicCenteredPolynomial;
use crate::roots::{self, AberthOptions};
use std::f64::consts::TAU;

pub const NEUTRAL_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitType {
    Saddle,
    Attracting,
    Repelling,
    NeutralMixed,
}

impl OrbitType {
    pub fn classify(l1: C64, l2: C64, margin: f64) -> Self {
        let (lo, hi) = {
            let (a, b) = (l1.norm(), l2.norm());
            (a.min(b), a.max(b))
        };
        if hi < 1.0 - margin {
            OrbitType::Attracting
        } else if lo > 1.0 + margin {
            OrbitType::Repelling
        } else if lo < 1.0 - margin && hi > 1.0 + margin {
            OrbitType::Saddle
        } else {
            OrbitType::NeutralMixed
        }
    }
}

/// One cycle of exact period `period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitRecord {
    pub period: usize,
    #[serde(with = "hex::points")]
    pub points: Vec<Point>,
    /// Eigenvalues of Df^period, smaller modulus first.
    #[serde(with = "hex::pair")]
    pub eigenvalues: [C64; 2],
    #[serde(with = "hex::complex")]
    pub trace: C64,
    #[serde(rename = "type")]
    pub kind: OrbitType,
    pub multiplicity: usize,
    #[serde(with = "hex::real")]
    pub residual: f64,
    /// 1 is an eigenvalue of Df^n for the requested n (formal-period flag).
    #[serde(default)]
    pub degenerate: bool,
}

impl PeriodicOrbitRecord {
    pub fn lambda_s(&self) -> C64 {
        self.eigenvalues[0]
    }

    pub fn lambda_u(&self) -> C64 {
        self.eigenvalues[1]
    }

    /// tr(Df^n) for a multiple n of the period.
    pub fn trace_of_power(&self, n: usize) -> C64 {
        let e = (n / self.period) as u32;
        self.eigenvalues[0].powu(e) + self.eigenvalues[1].powu(e)
    }

    pub fn eigenvalues_of_power(&self, n: usize) -> [C64; 2] {
        let e = (n / self.period) as u32;
        [self.eigenvalues[0].powu(e), self.eigenvalues[1].powu(e)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum SolveStatus {
    Complete,
    Partial { deficit: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSet {
    pub n: usize,
    pub degree: usize,
    pub status: SolveStatus,
    pub records: Vec<PeriodicOrbitRecord>,
}

impl PeriodicSet {
    /// Σ multiplicity·period: the count of Fix(f^n) with multiplicity.
    pub fn count_with_multiplicity(&self) -> usize {
        self.records.iter().map(|r| r.multiplicity * r.period).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.status == SolveStatus::Complete
    }

    /// tr(Df^n) for every point of Fix(f^n), repeated by multiplicity.
    pub fn fix_traces(&self) -> Vec<C64> {
        let mut v = Vec::new();
        for r in &self.records {
            let t = r.trace_of_power(self.n);
            for _ in 0..r.multiplicity * r.period {
                v.push(t);
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicConfig {
    pub budget: usize,
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        PeriodicConfig { budget: 4096, seed: 0x5eed, max_attempts: 4 }
    }
}

/// Builds a record from the x-sequence of the cyclic system, taking the
/// state (x_{jk}, x_{jk−1}) at composition times.
fn record_from_sequence(f: &HenonComposition, x: &[C64], period: usize, multiplicity: usize, n_req: usize) -> PeriodicOrbitRecord {
    let k = f.len();
    let total = period * k;
    let at = |j: usize| x[j % x.len()];
    let points: Vec<Point> = (0..period)
        .map(|j| [at(j * k), at((j * k + x.len() - 1) % x.len())])
        .collect();
    let mut m = Mat2::identity();
    for j in 0..total {
        let h = &f.factors()[j % k];
        let dj = Mat2([[h.poly.derivative(at(j)), h.a], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]]);
        m = dj.mul(&m);
    }
    finish_record(f, points, m.trace(), period, multiplicity, n_req)
}

fn finish_record(f: &HenonComposition, points: Vec<Point>, trace: C64, period: usize, multiplicity: usize, n_req: usize) -> PeriodicOrbitRecord {
    let det = f.jacobian_const().powu(period as u32);
    let (big, small) = eigen_from_trace_det(trace, det);
    let kind = OrbitType::classify(big, small, NEUTRAL_MARGIN);
    let z0 = points[0];
    let residual = point_dist(&f.iterate(z0, period), &z0);
    let e = (n_req / period).max(1) as u32;
    let degenerate = (big.powu(e) - 1.0).norm() < 1e-6 || (small.powu(e) - 1.0).norm() < 1e-6;
    PeriodicOrbitRecord {
        period,
        points,
        eigenvalues: [small, big],
        trace: small + big,
        kind,
        multiplicity,
        residual,
        degenerate,
    }
}

/// Record for a cycle given by its points, eigenvalues from the product of
/// differentials.
pub fn record_from_points(f: &HenonComposition, points: Vec<Point>, multiplicity: usize, n_req: usize) -> PeriodicOrbitRecord {
    let period = points.len();
    let mut m = Mat2::identity();
    for z in &points {
        m = f.differential(*z).mul(&m);
    }
    finish_record(f, points, m.trace(), period, multiplicity, n_req)
}

fn single_factor(f: &HenonComposition) -> Result<(C64, &MonicCenteredPolynomial)> {
    if f.len() != 1 {
        return Err(HenonError::InvalidInput("closed forms need a single Hénon factor".into()));
    }
    let h = &f.factors()[0];
    Ok((h.a, &h.poly))
}

fn cluster_radius(f: &HenonComposition) -> Result<f64> {
    Ok(1e-6 * (1.0 + 2.0 * f.escape_rate(1e-13)?.r))
}

/// Fixed points of a single Hénon map via p(x) = (1−a)x, or p(x) = 0 when a = 1.
pub fn fixed_points_henon(f: &HenonComposition) -> Result<Vec<PeriodicOrbitRecord>> {
    let (a, p) = single_factor(f)?;
    let mut coeffs = p.full_coefficients();
    coeffs[1] -= C64::new(1.0, 0.0) - a;
    let radius = cluster_radius(f)?;
    let roots = roots::polynomial_roots(&coeffs, radius)?;
    let out = roots
        .iter()
        .map(|r| {
            let x = r.center;
            finish_record(f, vec![[x, x]], p.derivative(x), 1, r.multiplicity, 1)
        })
        .collect();
    Ok(out)
}

/// All solutions (x0, y0) of f²(z) = z for a single Hénon map, with
/// multiplicity, from the one-variable reduction x0 = q(q(x0)), y0 = q(x0),
/// q = p/(1−a); when a = 1 both coordinates are roots of p.
pub fn fix2_solutions_henon(f: &HenonComposition) -> Result<Vec<(C64, C64, usize)>> {
    let (a, p) = single_factor(f)?;
    let one = C64::new(1.0, 0.0);
    let d = p.degree();
    let radius = cluster_radius(f)?;
    let mut sols = Vec::new();
    if (a - one).norm() < 1e-14 {
        let rts = roots::polynomial_roots(&p.full_coefficients(), radius)?;
        for r0 in &rts {
            for r1 in &rts {
                sols.push((r0.center, r1.center, r0.multiplicity * r1.multiplicity));
            }
        }
        return Ok(sols);
    }
    let s = (one - a).inv();
    let q = |z: C64| p.eval(z) * s;
    let dq = |z: C64| p.derivative(z) * s;
    let start_r = 1.5 * f.escape_radius().max(p.escape_radius() * (1.0 + s.norm()));
    let approx = roots::aberth(
        roots::circle_start(d * d, start_r),
        |z| {
            let y = q(z);
            (q(y) - z) / (dq(y) * dq(z) - 1.0)
        },
        AberthOptions::default(),
    );
    let mut worst: f64 = 0.0;
    for (c, members) in roots::cluster(&approx.points, &approx.last_step, radius) {
        let y = q(c);
        let r = (q(y) - c).norm() / (1.0 + c.norm());
        worst = worst.max(r.powf(1.0 / members.len() as f64));
        sols.push((c, y, members.len()));
    }
    if !(worst < 1e-6) {
        return Err(HenonError::RootFinder { degree: d * d, residual: worst });
    }
    Ok(sols)
}

/// Period-two cycles (fixed points excluded) of a single Hénon map.
pub fn period2_points_henon(f: &HenonComposition) -> Result<Vec<PeriodicOrbitRecord>> {
    let (a, p) = single_factor(f)?;
    let radius = cluster_radius(f)?;
    let pairs: Vec<(C64, C64, usize)> = fix2_solutions_henon(f)?
        .into_iter()
        .filter(|(x, y, _)| (x - y).norm() > 10.0 * radius)
        .collect();
    let mut out: Vec<PeriodicOrbitRecord> = Vec::new();
    let mut used = vec![false; pairs.len()];
    for i in 0..pairs.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let (x0, y0, mult) = pairs[i];
        if let Some(j) = (0..pairs.len()).find(|&j| {
            !used[j] && (pairs[j].0 - y0).norm() <= 10.0 * radius && (pairs[j].1 - x0).norm() <= 10.0 * radius
        }) {
            used[j] = true;
        }
        let trace = p.derivative(x0) * p.derivative(y0) + a * 2.0;
        out.push(finish_record(f, vec![[x0, y0], [y0, x0]], trace, 2, mult, 2));
    }
    Ok(out)
}

/// tr(Df^n) over Fix(f^n) with multiplicity, n ∈ {1, 2}, from the closed forms.
pub fn closed_form_fix_traces(f: &HenonComposition, n: usize) -> Result<Vec<C64>> {
    let (a, p) = single_factor(f)?;
    match n {
        1 => Ok(fixed_points_henon(f)?
            .iter()
            .flat_map(|r| std::iter::repeat(r.trace).take(r.multiplicity))
            .collect()),
        2 => Ok(fix2_solutions_henon(f)?
            .iter()
            .flat_map(|&(x, y, m)| std::iter::repeat(p.derivative(x) * p.derivative(y) + a * 2.0).take(m))
            .collect()),
        _ => Err(HenonError::InvalidInput("closed forms cover periods 1 and 2 only".into())),
    }
}

/// All points of Fix(f^n), grouped into cycles of their exact period.
pub fn periodic_points(f: &HenonComposition, n: usize, cfg: &PeriodicConfig) -> Result<PeriodicSet> {
    if n == 0 {
        return Err(HenonError::InvalidInput("period must be positive".into()));
    }
    let d = f.degree();
    let total = (d as f64).powi(n as i32);
    if total > cfg.budget as f64 {
        return Err(HenonError::Budget(format!("d^n = {total} exceeds budget {}", cfg.budget)));
    }
    let total = total as usize;
    let radius = cluster_radius(f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut best: Option<PeriodicSet> = None;
    for attempt in 0..cfg.max_attempts.max(1) {
        let eta = rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let hvec: Vec<C64> = (0..8).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let set = solve_once(f, n, total, eta, &hvec, radius, attempt)?;
        let done = set.is_complete();
        let better = match &best {
            None => true,
            Some(b) => deficit(&set) < deficit(b),
        };
        if better {
            best = Some(set);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one attempt"))
}

fn deficit(s: &PeriodicSet) -> usize {
    match s.status {
        SolveStatus::Complete => 0,
        SolveStatus::Partial { deficit } => deficit,
    }
}

/// Starting solutions of the monomial system x_{j+1} = x_j^{d_σ(j)}: the
/// orbits of 0 and of the (d^n − 1)-th roots of unity.
/// Typical modulus of periodic points: max(1, R_f, |a_i|^{1/(d_i−1)}).
fn start_scale(f: &HenonComposition) -> Result<f64> {
    let mut s = f.escape_rate(1e-13)?.r.max(1.0);
    for h in f.factors() {
        s = s.max(h.a.norm().powf(1.0 / (h.degree() as f64 - 1.0)));
    }
    Ok(s)
}

fn monomial_starts(f: &HenonComposition, n: usize, total: usize) -> Vec<Vec<C64>> {
    let k = f.len();
    let degs = f.multidegree();
    let mut out = vec![vec![C64::new(0.0, 0.0); n * k]];
    let m = total - 1;
    for r in 0..m {
        // x_j = ω^{D_j} with D_j the cumulative degree, reduced mod m exactly
        let mut e: u64 = r as u64;
        let mut v = Vec::with_capacity(n * k);
        for j in 0..n * k {
            v.push(C64::from_polar(1.0, TAU * e as f64 / m as f64));
            e = (e * degs[j % k] as u64) % m as u64;
        }
        out.push(v);
    }
    out
}

fn solve_once(
    f: &HenonComposition,
    n: usize,
    total: usize,
    eta: f64,
    hvec: &[C64],
    radius: f64,
    attempt: usize,
) -> Result<PeriodicSet> {
    let k = f.len();
    let zero_start: Vec<Vec<C64>> = f.factors().iter().map(|h| vec![C64::new(0.0, 0.0); h.degree() - 1]).collect();
    let scale = start_scale(f)?;
    let sys = CyclicSystem::new(f, n, &zero_start, scale);
    let starts: Vec<Vec<C64>> = monomial_starts(f, n, total)
        .into_iter()
        .map(|v| v.into_iter().map(|z| z * scale).collect())
        .collect();
    let opts = TrackOptions {
        h_init: 0.02,
        h_max: 0.1 / (1.0 + attempt as f64),
        h_min: 1e-13,
        eta,
    };
    let ends: Vec<homotopy::PathEnd> = starts.into_par_iter().map(|s| homotopy::track(&sys, s, opts)).collect();

    let one = C64::new(1.0, 0.0);
    let dim = n * k;
    let mut pts: Vec<(Vec<C64>, bool)> = Vec::new();
    for e in ends {
        if !e.ok || !e.x.iter().all(|z| z.is_finite()) {
            continue;
        }
        let x = homotopy::newton_at_target(&sys, &e.x, 3);
        let sv = linalg::singular_values(&sys.jacobian(&x, one));
        let smax = sv[0].max(1.0);
        let corank = sv.iter().filter(|&&s| s < 1e-5 * smax).count();
        if corank > 0 {
            match homotopy::deflate(&sys, &x, corank, hvec) {
                Some(xd) => pts.push((xd, true)),
                None => pts.push((x, true)),
            }
        } else {
            pts.push((x, false));
        }
    }

    // single-linkage clusters in the max norm
    let m = pts.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let dist = |a: &[C64], b: &[C64]| a.iter().zip(b).fold(0.0_f64, |s, (u, v)| s.max((u - v).norm()));
    for i in 0..m {
        for j in (i + 1)..m {
            if dist(&pts[i].0, &pts[j].0) <= radius {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    struct Cl {
        x: Vec<C64>,
        size: usize,
        singular: bool,
    }
    let mut clusters: Vec<Cl> = Vec::new();
    let mut index_of: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        let r = root(&mut parent, i);
        match index_of[r] {
            Some(c) => {
                clusters[c].size += 1;
                clusters[c].singular |= pts[i].1;
            }
            None => {
                index_of[r] = Some(clusters.len());
                clusters.push(Cl { x: pts[i].0.clone(), size: 1, singular: pts[i].1 });
            }
        }
    }
    // a regular root reached by several paths means a path jumped
    let mut counted = 0;
    for c in clusters.iter_mut() {
        if c.size > 1 && !c.singular {
            counted += 1;
            c.size = 1;
        } else {
            counted += c.size;
        }
    }
    let deficit = total - counted.min(total);

    // cycles under the shift by k positions
    let shift = |x: &[C64]| -> Vec<C64> { (0..dim).map(|j| x[(j + k) % dim]).collect() };
    let nc = clusters.len();
    let mut image: Vec<Option<usize>> = vec![None; nc];
    for i in 0..nc {
        let sx = shift(&clusters[i].x);
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for j in 0..nc {
            let dj = dist(&sx, &clusters[j].x);
            if dj < best_d {
                best_d = dj;
                best = Some(j);
            }
        }
        if best_d <= 10.0 * radius {
            image[i] = best;
        }
    }
    let mut seen = vec![false; nc];
    let mut records = Vec::new();
    for i in 0..nc {
        if seen[i] {
            continue;
        }
        let mut cycle = vec![i];
        seen[i] = true;
        let mut cur = i;
        let mut closed = false;
        while let Some(nx) = image[cur] {
            if nx == i {
                closed = true;
                break;
            }
            if seen[nx] || cycle.len() > n {
                break;
            }
            seen[nx] = true;
            cycle.push(nx);
            cur = nx;
        }
        let full_cycle = closed && n % cycle.len() == 0;
        let period = if full_cycle { cycle.len() } else { exact_period_of(f, &clusters[i].x, n, radius) };
        let mult = if full_cycle { cycle.iter().map(|&c| clusters[c].size).min().unwrap_or(1) } else { clusters[i].size };
        records.push(record_from_sequence(f, &clusters[i].x, period, mult, n));
        if !full_cycle {
            for &c in &cycle[1..] {
                seen[c] = false;
            }
        }
    }
    // records built from partially matched cycles may duplicate points
    records = dedup_records(records, radius);
    records.sort_by(|a, b| {
        (a.period, ordering_key(&a.points[0]))
            .partial_cmp(&(b.period, ordering_key(&b.points[0])))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let status = if deficit == 0 { SolveStatus::Complete } else { SolveStatus::Partial { deficit } };
    let set = PeriodicSet { n, degree: f.degree(), status, records };
    if set.is_complete() && set.count_with_multiplicity() != total {
        return Ok(PeriodicSet { status: SolveStatus::Partial { deficit: total.abs_diff(set.count_with_multiplicity()) }, ..set });
    }
    Ok(set)
}

fn ordering_key(z: &Point) -> (f64, f64, f64, f64) {
    (z[0].re, z[0].im, z[1].re, z[1].im)
}

/// Rotates each cycle so that its first point is the lexicographically
/// smallest, then removes records describing the same cycle.
fn dedup_records(records: Vec<PeriodicOrbitRecord>, radius: f64) -> Vec<PeriodicOrbitRecord> {
    let mut out: Vec<PeriodicOrbitRecord> = Vec::new();
    for mut r in records {
        let start = (0..r.points.len())
            .min_by(|&a, &b| ordering_key(&r.points[a]).partial_cmp(&ordering_key(&r.points[b])).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        r.points.rotate_left(start);
        let p = r.points.len();
        let dup = out.iter().any(|o| {
            o.period == r.period
                && o.points.len() == p
                && (0..p).any(|t| (0..p).all(|i| point_dist(&r.points[(i + t) % p], &o.points[i]) <= 10.0 * radius))
        });
        if !dup {
            out.push(r);
        }
    }
    out
}

fn exact_period_of(f: &HenonComposition, x: &[C64], n: usize, radius: f64) -> usize {
    let z = [x[0], x[x.len() - 1]];
    let tol = 10.0 * radius;
    (1..=n).filter(|m| n % m == 0).find(|&m| point_dist(&f.iterate(z, m), &z) <= tol).unwrap_or(n)
}

/// Smallest divisor m of n with ‖f^m(z) − z‖ within `tol`.
pub fn exact_period(f: &HenonComposition, record: &PeriodicOrbitRecord, n: usize, tol: f64) -> usize {
    let z = record.points[0];
    (1..=n)
        .filter(|m| n % m == 0)
        .find(|&m| point_dist(&f.iterate(z, m), &z) <= tol.max(record.residual))
        .unwrap_or(n)
}
