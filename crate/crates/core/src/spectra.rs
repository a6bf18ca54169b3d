//! Trace and multiplier spectra: tables, comparison, isospectral search,
//! exceptionality and the one-variable reduction for periods one and two.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{hungarian, threshold_matching_exists};
use crate::error::{HenonError, Result};
use crate::henon::{HenonComposition, HenonFactor};
use crate::linalg;
use crate::periodic::{self, OrbitType, PeriodicConfig, SolveStatus};
use crate::poly1d::{MonicCenteredPolynomial, Polynomial};
use crate::roots::{self, AberthOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactClass {
    pub period: usize,
    pub count: usize,
}

/// A lower-period cluster at which 1 is an eigenvalue of Df^n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCluster {
    pub period: usize,
    pub multiplicity: usize,
    pub trace: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSpectrum {
    pub n: usize,
    pub status: SolveStatus,
    /// tr(Df^n) over Fix(f^n), with multiplicity.
    pub traces: Vec<C64>,
    pub exact: Vec<ExactClass>,
    /// tr(Df^n) over points of exact period n, with multiplicity.
    pub formal_traces: Vec<C64>,
    pub flagged: Vec<FlaggedCluster>,
    /// λ^u over saddle points of exact period n.
    pub unstable: Vec<C64>,
    /// λ^s over the same saddle points.
    pub stable: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub degree: usize,
    pub jacobian: C64,
    pub max_period: usize,
    pub periods: Vec<PeriodSpectrum>,
}

impl SpectrumTable {
    pub fn period(&self, n: usize) -> Option<&PeriodSpectrum> {
        self.periods.iter().find(|p| p.n == n)
    }

    pub fn is_complete(&self) -> bool {
        self.periods.iter().all(|p| p.status == SolveStatus::Complete)
    }

    pub fn trace_lists(&self) -> Vec<Vec<C64>> {
        self.periods.iter().map(|p| p.traces.clone()).collect()
    }
}

pub fn period_spectrum(set: &periodic::PeriodicSet) -> PeriodSpectrum {
    let n = set.n;
    let mut exact: Vec<ExactClass> = Vec::new();
    let mut formal = Vec::new();
    let mut flagged = Vec::new();
    let mut unstable = Vec::new();
    let mut stable = Vec::new();
    for r in &set.records {
        let count = r.multiplicity * r.period;
        match exact.iter_mut().find(|e| e.period == r.period) {
            Some(e) => e.count += count,
            None => exact.push(ExactClass { period: r.period, count }),
        }
        if r.period == n {
            for _ in 0..count {
                formal.push(r.trace);
            }
            if r.kind == OrbitType::Saddle {
                for _ in 0..count {
                    unstable.push(r.lambda_u());
                    stable.push(r.lambda_s());
                }
            }
        } else if r.degenerate {
            flagged.push(FlaggedCluster { period: r.period, multiplicity: r.multiplicity, trace: r.trace_of_power(n) });
        }
    }
    exact.sort_by_key(|e| e.period);
    PeriodSpectrum { n, status: set.status, traces: set.fix_traces(), exact, formal_traces: formal, flagged, unstable, stable }
}

/// Spectra for n = 1..=P from the general periodic-point solver.
pub fn trace_spectrum(f: &HenonComposition, max_period: usize, cfg: &PeriodicConfig) -> Result<SpectrumTable> {
    let mut periods = Vec::with_capacity(max_period);
    for n in 1..=max_period {
        let set = periodic::periodic_points(f, n, cfg)?;
        periods.push(period_spectrum(&set));
    }
    Ok(SpectrumTable { degree: f.degree(), jacobian: f.jacobian_const(), max_period, periods })
}

/// Optimal assignment between two multisets of equal size under |·|;
/// returns the largest matched distance and the pair realising it.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> Option<(f64, C64, C64)> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some((0.0, C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let sol = hungarian(&cost);
    let (mut worst, mut wa, mut wb) = (0.0, a[0], b[sol[0]]);
    for (i, &j) in sol.iter().enumerate() {
        if cost[i][j] > worst || cost[i][j].is_nan() {
            worst = cost[i][j];
            wa = a[i];
            wb = b[j];
        }
    }
    Some((worst, wa, wb))
}

pub fn multisets_equal(a: &[C64], b: &[C64], tol: f64) -> bool {
    match multiset_distance(a, b) {
        None => false,
        Some((w, _, _)) if w <= tol => true,
        Some(_) => {
            let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
            threshold_matching_exists(&cost, tol)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodMatch {
    pub n: usize,
    pub size_left: usize,
    pub size_right: usize,
    pub max_distance: Option<f64>,
    pub worst_pair: Option<[C64; 2]>,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraComparison {
    pub equal: bool,
    pub reason: Option<String>,
    pub periods: Vec<PeriodMatch>,
}

pub fn spectra_equal(s1: &SpectrumTable, s2: &SpectrumTable, tol: f64) -> SpectraComparison {
    if s1.degree != s2.degree || s1.max_period != s2.max_period {
        return SpectraComparison {
            equal: false,
            reason: Some(format!(
                "tables differ in shape: degree {} vs {}, max period {} vs {}",
                s1.degree, s2.degree, s1.max_period, s2.max_period
            )),
            periods: Vec::new(),
        };
    }
    compare_lists(&s1.trace_lists(), &s2.trace_lists(), tol)
}

pub fn compare_lists(l1: &[Vec<C64>], l2: &[Vec<C64>], tol: f64) -> SpectraComparison {
    let mut periods = Vec::new();
    let mut equal = true;
    let mut reason = None;
    for (i, (a, b)) in l1.iter().zip(l2).enumerate() {
        let n = i + 1;
        let dist = multiset_distance(a, b);
        let eq = multisets_equal(a, b, tol);
        if a.len() != b.len() && reason.is_none() {
            reason = Some(format!("period {n}: sizes {} and {} differ", a.len(), b.len()));
        } else if !eq && reason.is_none() {
            reason = Some(format!("period {n}: matched distance exceeds {tol:e}"));
        }
        equal &= eq;
        periods.push(PeriodMatch {
            n,
            size_left: a.len(),
            size_right: b.len(),
            max_distance: dist.map(|d| d.0),
            worst_pair: dist.map(|d| [d.1, d.2]),
            equal: eq,
        });
    }
    SpectraComparison { equal, reason, periods }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    FixedJac,
    FreeJac,
    HuguinP2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsospectralConfig {
    pub mode: SearchMode,
    pub max_period: usize,
    /// Radius of each complex coordinate disk around the base point.
    pub radius: f64,
    /// Grid points per real axis.
    pub grid: usize,
    pub tol: f64,
    pub max_polish: usize,
    /// Optional affine slice: parameters = base + Σ u_i·directions[i].
    pub directions: Option<Vec<Vec<C64>>>,
    pub periodic: PeriodicConfig,
}

impl Default for IsospectralConfig {
    fn default() -> Self {
        IsospectralConfig {
            mode: SearchMode::FixedJac,
            max_period: 2,
            radius: 1.0,
            grid: 50,
            tol: 1e-8,
            max_polish: 64,
            directions: None,
            periodic: PeriodicConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsospectralMatch {
    pub map: HenonComposition,
    pub slice_coords: Vec<C64>,
    pub max_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsospectralResult {
    pub matches: Vec<IsospectralMatch>,
    pub grid_points: usize,
    pub local_minima: usize,
    pub polished: usize,
    pub partial: bool,
}

/// Coefficients of all factors, followed by the a_i in free-Jacobian mode.
pub fn family_params(f: &HenonComposition, mode: SearchMode) -> Vec<C64> {
    let mut v: Vec<C64> = f.factors().iter().flat_map(|h| h.poly.coeffs().to_vec()).collect();
    if mode == SearchMode::FreeJac {
        v.extend(f.factors().iter().map(|h| h.a));
    }
    v
}

pub fn family_map(base: &HenonComposition, params: &[C64], mode: SearchMode) -> Result<HenonComposition> {
    let mut idx = 0;
    let mut factors = Vec::with_capacity(base.len());
    let nco: usize = base.factors().iter().map(|h| h.degree() - 1).sum();
    for (i, h) in base.factors().iter().enumerate() {
        let m = h.degree() - 1;
        let poly = MonicCenteredPolynomial::new(h.degree(), params[idx..idx + m].to_vec())?;
        idx += m;
        let a = if mode == SearchMode::FreeJac { params[nco + i] } else { h.a };
        factors.push(HenonFactor::new(a, poly)?);
    }
    HenonComposition::new(factors)
}

fn fix_trace_lists(f: &HenonComposition, cfg: &IsospectralConfig) -> Result<Vec<Vec<C64>>> {
    if f.len() == 1 && cfg.max_period <= 2 {
        return (1..=cfg.max_period).map(|n| periodic::closed_form_fix_traces(f, n)).collect();
    }
    let mut out = Vec::new();
    for n in 1..=cfg.max_period {
        let s = periodic::periodic_points(f, n, &cfg.periodic)?;
        if !s.is_complete() {
            return Err(HenonError::Precision(format!("incomplete periodic set at n = {n}")));
        }
        out.push(s.fix_traces());
    }
    Ok(out)
}

struct Slice {
    base: Vec<C64>,
    dirs: Option<Vec<Vec<C64>>>,
}

impl Slice {
    fn dim(&self) -> usize {
        self.dirs.as_ref().map(|d| d.len()).unwrap_or(self.base.len())
    }

    fn point(&self, u: &[C64]) -> Vec<C64> {
        match &self.dirs {
            None => self.base.iter().zip(u).map(|(b, x)| b + x).collect(),
            Some(dirs) => {
                let mut p = self.base.clone();
                for (ui, d) in u.iter().zip(dirs) {
                    for (pj, dj) in p.iter_mut().zip(d) {
                        *pj += ui * dj;
                    }
                }
                p
            }
        }
    }
}

fn mismatch(lists: &[Vec<C64>], target: &[Vec<C64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b) in lists.iter().zip(target) {
        let scale = 1.0 + b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        match multiset_distance(a, b) {
            Some((d, _, _)) => worst = worst.max(d / scale),
            None => return f64::INFINITY,
        }
    }
    worst
}

type CMat = nalgebra::DMatrix<C64>;

fn companion(monic: &[C64]) -> CMat {
    let n = monic.len() - 1;
    let lead = monic[n];
    let mut m = CMat::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic[i] / lead;
    }
    m
}

fn matrix_poly(coeffs: &[C64], m: &CMat) -> CMat {
    let n = m.nrows();
    let mut acc = CMat::zeros(n, n);
    for &c in coeffs.iter().rev() {
        acc = &acc * m;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

fn derivative_coeffs(c: &[C64]) -> Vec<C64> {
    c.iter().enumerate().skip(1).map(|(k, &v)| v * k as f64).collect()
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_compose(outer: &[C64], inner: &[C64]) -> Vec<C64> {
    let mut acc = vec![outer[outer.len() - 1]];
    for &c in outer.iter().rev().skip(1) {
        acc = poly_mul(&acc, inner);
        acc[0] += c;
    }
    acc
}

/// Matrices whose eigenvalues are the Fix(f^n) traces (n = 1, 2) of a
/// single Hénon map, built from companion matrices so that their power
/// traces depend polynomially on the coefficients.
fn closed_form_trace_matrices(f: &HenonComposition, max_period: usize) -> Option<Vec<CMat>> {
    if f.len() != 1 || max_period > 2 {
        return None;
    }
    let h = &f.factors()[0];
    let one = C64::new(1.0, 0.0);
    let a = h.a;
    let pc = h.poly.full_coefficients();
    let dp = derivative_coeffs(&pc);
    let mut fixed = pc.clone();
    fixed[1] -= one - a;
    let mut out = vec![matrix_poly(&dp, &companion(&fixed))];
    if max_period == 2 {
        let t2 = if (a - one).norm() < 1e-14 {
            let c = companion(&pc);
            let id = CMat::identity(c.nrows(), c.nrows());
            let left = matrix_poly(&dp, &c.kronecker(&id));
            let right = matrix_poly(&dp, &id.kronecker(&c));
            left * right
        } else {
            let q: Vec<C64> = pc.iter().map(|c| c / (one - a)).collect();
            let mut g = poly_compose(&q, &q);
            g[1] -= one;
            let c = companion(&g);
            let qc = matrix_poly(&q, &c);
            matrix_poly(&dp, &c) * matrix_poly(&dp, &qc)
        };
        let n = t2.nrows();
        out.push(t2 + CMat::identity(n, n) * (a * 2.0));
    }
    Some(out)
}

/// Normalised power traces tr((T/s)^j), j = 1..dim, of each matrix.
fn matrix_power_sums(mats: &[CMat], scales: &[f64]) -> Vec<C64> {
    let mut r = Vec::new();
    for (m, &s) in mats.iter().zip(scales) {
        let t = m / C64::new(s, 0.0);
        let mut pw = t.clone();
        let len = m.nrows() as f64;
        for _ in 0..m.nrows() {
            r.push(pw.trace() / len);
            pw = &pw * &t;
        }
    }
    r
}

fn power_sum_residual(lists: &[Vec<C64>], target: &[Vec<C64>]) -> Option<Vec<C64>> {
    let mut r = Vec::new();
    for (a, b) in lists.iter().zip(target) {
        if a.len() != b.len() {
            return None;
        }
        let scale = 1.0 + b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut pa: Vec<C64> = a.iter().map(|z| z / scale).collect();
        let mut pb: Vec<C64> = b.iter().map(|z| z / scale).collect();
        let ua: Vec<C64> = pa.clone();
        let ub: Vec<C64> = pb.clone();
        let len = a.len() as f64;
        for _ in 0..a.len() {
            let sa: C64 = pa.iter().sum();
            let sb: C64 = pb.iter().sum();
            r.push((sa - sb) / len);
            for (x, u) in pa.iter_mut().zip(&ua) {
                *x *= u;
            }
            for (x, u) in pb.iter_mut().zip(&ub) {
                *x *= u;
            }
        }
    }
    Some(r)
}

/// Grid scan of the trace mismatch followed by Gauss–Newton polishing on
/// power sums of the trace multisets.
pub fn isospectral_search(f0: &HenonComposition, cfg: &IsospectralConfig) -> Result<IsospectralResult> {
    if cfg.mode == SearchMode::HuguinP2 {
        if f0.len() != 1 || cfg.max_period != 2 {
            return Err(HenonError::InvalidInput("huguin-p2 mode needs a single factor and P = 2".into()));
        }
        if (f0.jacobian_const() + 1.0).norm() < 1e-12 {
            return Err(HenonError::Domain("huguin-p2 mode excludes Jacobian −1".into()));
        }
    }
    let target = fix_trace_lists(f0, cfg)?;
    let slice = Slice { base: family_params(f0, cfg.mode), dirs: cfg.directions.clone() };
    let m = slice.dim();
    let g = if cfg.radius == 0.0 { 1 } else { cfg.grid.max(1) };
    let axes = 2 * m;
    let total = (g as f64).powi(axes as i32);
    if total > 5e6 {
        return Err(HenonError::Budget(format!("grid of {total} points is too large")));
    }
    let total = total as usize;
    let coord = |i: usize| -> f64 {
        if g == 1 {
            0.0
        } else {
            -cfg.radius + 2.0 * cfg.radius * i as f64 / (g - 1) as f64
        }
    };
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut v = Vec::with_capacity(axes);
        for _ in 0..axes {
            v.push(idx % g);
            idx /= g;
        }
        v
    };
    let to_u = |ix: &[usize]| -> Vec<C64> { (0..m).map(|i| C64::new(coord(ix[2 * i]), coord(ix[2 * i + 1]))).collect() };
    let inside = |u: &[C64]| u.iter().all(|z| z.norm() <= cfg.radius * (1.0 + 1e-12) + 1e-300);
    let evaluate = |u: &[C64]| -> f64 {
        if !inside(u) {
            return f64::NAN;
        }
        match family_map(f0, &slice.point(u), cfg.mode).and_then(|f| fix_trace_lists(&f, cfg)) {
            Ok(l) => mismatch(&l, &target),
            Err(_) => f64::INFINITY,
        }
    };
    let values: Vec<f64> = (0..total).into_par_iter().map(|idx| evaluate(&to_u(&decode(idx)))).collect();
    let mut minima: Vec<usize> = (0..total)
        .filter(|&idx| {
            let v = values[idx];
            if !v.is_finite() {
                return false;
            }
            let ix = decode(idx);
            let mut stride = 1;
            for a in 0..axes {
                for delta in [-1i64, 1] {
                    let c = ix[a] as i64 + delta;
                    if c >= 0 && (c as usize) < g {
                        let nb = (idx as i64 + delta * stride as i64) as usize;
                        let w = values[nb];
                        if w.is_finite() && w < v {
                            return false;
                        }
                    }
                }
                stride *= g;
            }
            true
        })
        .collect();
    minima.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let local_minima = minima.len();
    let partial = local_minima > cfg.max_polish;
    minima.truncate(cfg.max_polish);

    let polished: Vec<Option<(Vec<C64>, f64)>> = minima
        .par_iter()
        .map(|&idx| polish(f0, &slice, &to_u(&decode(idx)), &target, cfg))
        .collect();
    let mut matches: Vec<IsospectralMatch> = Vec::new();
    for (u, dist) in polished.into_iter().flatten() {
        if !inside(&u) {
            continue;
        }
        let map = family_map(f0, &slice.point(&u), cfg.mode)?;
        let dup = matches.iter().any(|e| {
            map.unity_group().iter().any(|&al| match map.unity_action(al) {
                Ok(g) => {
                    let q = family_params(&g, cfg.mode);
                    let ep = family_params(&e.map, cfg.mode);
                    let scale = 1.0 + linalg::max_norm(&ep);
                    q.iter().zip(&ep).all(|(x, y)| (x - y).norm() <= 1e-5 * scale)
                }
                Err(_) => false,
            })
        });
        if !dup {
            matches.push(IsospectralMatch { map, slice_coords: u, max_distance: dist });
        }
    }
    Ok(IsospectralResult { matches, grid_points: total, local_minima, polished: minima.len(), partial })
}

fn polish(
    f0: &HenonComposition,
    slice: &Slice,
    u0: &[C64],
    target: &[Vec<C64>],
    cfg: &IsospectralConfig,
) -> Option<(Vec<C64>, f64)> {
    let lists_at = |u: &[C64]| -> Option<Vec<Vec<C64>>> {
        let f = family_map(f0, &slice.point(u), cfg.mode).ok()?;
        fix_trace_lists(&f, cfg).ok()
    };
    let scales: Vec<f64> = target.iter().map(|b| 1.0 + b.iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
    let target_sums = closed_form_trace_matrices(f0, cfg.max_period).map(|m| matrix_power_sums(&m, &scales));
    let res_at = |u: &[C64]| -> Option<Vec<C64>> {
        if let Some(ts) = &target_sums {
            let f = family_map(f0, &slice.point(u), cfg.mode).ok()?;
            let sums = matrix_power_sums(&closed_form_trace_matrices(&f, cfg.max_period)?, &scales);
            return Some(sums.iter().zip(ts).map(|(a, b)| a - b).collect());
        }
        power_sum_residual(&lists_at(u)?, target)
    };
    let norm = |r: &[C64]| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let m = u0.len();
    let mut u = u0.to_vec();
    let mut r = res_at(&u)?;
    let mut rn = norm(&r);
    let mut mu: f64 = 1e-4;
    for _ in 0..100 {
        if rn < 1e-13 {
            break;
        }
        let h = 1e-7;
        let mut jac = nalgebra::DMatrix::from_element(r.len(), m, C64::new(0.0, 0.0));
        for k in 0..m {
            let mut up = u.clone();
            let hk = h * (1.0 + u[k].norm());
            up[k] += hk;
            let rp = res_at(&up)?;
            for (i, (a, b)) in rp.iter().zip(&r).enumerate() {
                jac[(i, k)] = (a - b) / hk;
            }
        }
        // Levenberg–Marquardt step on the stacked system [J; √μ I]
        let rows = r.len();
        let jn = jac.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut improved = false;
        let mut last_step: f64 = 0.0;
        for _ in 0..30 {
            let mut big = nalgebra::DMatrix::from_element(rows + m, m, C64::new(0.0, 0.0));
            big.view_mut((0, 0), (rows, m)).copy_from(&jac);
            for k in 0..m {
                big[(rows + k, k)] = C64::new(mu.sqrt() * jn, 0.0);
            }
            let mut rhs = nalgebra::DVector::from_element(rows + m, C64::new(0.0, 0.0));
            for (i, z) in r.iter().enumerate() {
                rhs[i] = -z;
            }
            let step = linalg::lstsq(big, &rhs, 1e-14)?;
            last_step = step.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let cand: Vec<C64> = u.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(rc) = res_at(&cand) {
                let cn = norm(&rc);
                if cn < rn {
                    u = cand;
                    r = rc;
                    rn = cn;
                    improved = true;
                    mu = (mu * 0.1).max(1e-16);
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved || last_step < 1e-15 * (1.0 + linalg::max_norm(&u)) {
            break;
        }
    }
    let lists = lists_at(&u)?;
    let cmp = compare_lists(&lists, target, cfg.tol);
    if cmp.equal {
        let worst = cmp.periods.iter().filter_map(|p| p.max_distance).fold(0.0, f64::max);
        Some((u, worst))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ExceptionalOutcome {
    Exceptional { kappa: C64 },
    NotExceptional { period: usize, worst_relative_error: f64 },
    Inconclusive { reason: String },
}

/// Computes saddle data up to period P and runs [`exceptional_from_table`].
pub fn exceptional_test(f: &HenonComposition, max_period: usize, tol: f64, cfg: &PeriodicConfig) -> Result<ExceptionalOutcome> {
    Ok(exceptional_from_table(&trace_spectrum(f, max_period, cfg)?, tol))
}

/// Tests λ^u = κ^n over all saddles of exact period n ≤ P.
pub fn exceptional_from_table(table: &SpectrumTable, tol: f64) -> ExceptionalOutcome {
    let data: Vec<(usize, &Vec<C64>)> = table
        .periods
        .iter()
        .filter(|p| !p.unstable.is_empty())
        .map(|p| (p.n, &p.unstable))
        .collect();
    let (n0, first) = match data.first() {
        Some(&(n, v)) => (n, v),
        None => return ExceptionalOutcome::Inconclusive { reason: "no saddles up to the maximal period".into() },
    };
    let lam0 = first[0];
    let mut best = (f64::INFINITY, 0usize);
    for j in 0..n0 {
        let root = lam0.powf(1.0 / n0 as f64) * C64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n0 as f64);
        // refine by averaging aligned n-th roots of every λ^u
        let mut acc = C64::new(0.0, 0.0);
        let mut cnt = 0.0;
        for &(n, vals) in &data {
            for &l in vals {
                let base = l.powf(1.0 / n as f64);
                let aligned = (0..n)
                    .map(|w| base * C64::from_polar(1.0, std::f64::consts::TAU * w as f64 / n as f64))
                    .min_by(|a, b| (a - root).norm().partial_cmp(&(b - root).norm()).unwrap())
                    .unwrap();
                acc += aligned;
                cnt += 1.0;
            }
        }
        let kappa = acc / cnt;
        let mut worst: f64 = 0.0;
        let mut worst_n = n0;
        for &(n, vals) in &data {
            let kn = kappa.powu(n as u32);
            for &l in vals {
                let e = (l - kn).norm() / kn.norm();
                if e > worst {
                    worst = e;
                    worst_n = n;
                }
            }
        }
        if worst <= tol {
            return ExceptionalOutcome::Exceptional { kappa };
        }
        if worst < best.0 {
            best = (worst, worst_n);
        }
    }
    ExceptionalOutcome::NotExceptional { period: best.1, worst_relative_error: best.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuguinReport {
    /// q = p/(1−a).
    pub q: Polynomial,
    pub fixed_residual: f64,
    pub period2_residual: f64,
    pub fixed_count: usize,
    pub period2_count: usize,
}

/// Relates the period ≤ 2 traces of f to the multipliers of q = p/(1−a):
/// tr = (1−a)q′(x0) at fixed points and (1−a)²(q∘q)′(x0) + 2a on 2-cycles.
pub fn huguin_reduction(f: &HenonComposition, cfg: &PeriodicConfig) -> Result<HuguinReport> {
    if f.len() != 1 {
        return Err(HenonError::InvalidInput("reduction needs a single Hénon factor".into()));
    }
    let h = &f.factors()[0];
    let one = C64::new(1.0, 0.0);
    if (h.a - one).norm() < 1e-14 {
        return Err(HenonError::Domain(
            "a = 1 (Jacobian −1): fixed points satisfy p(x0) = 0 instead, see the Jacobian −1 family".into(),
        ));
    }
    let a = h.a;
    let s = (one - a).inv();
    let q = Polynomial::scaled(&h.poly, s);
    let d = h.degree();
    let radius = 1e-6 * (1.0 + 2.0 * f.escape_rate(1e-13)?.r);

    // one-variable side
    let mut fixed_eq = q.coeffs.clone();
    fixed_eq[1] -= one;
    let qfixed = roots::flatten(&roots::polynomial_roots(&fixed_eq, radius)?);
    let one_var_fixed: Vec<C64> = qfixed.iter().map(|&x| (one - a) * q.eval_with_derivative(x).1).collect();
    let start_r = 1.5 * f.escape_radius().max(h.poly.escape_radius() * (1.0 + s.norm()));
    let approx = roots::aberth(
        roots::circle_start(d * d, start_r),
        |z| {
            let (y, dy) = q.eval_with_derivative(z);
            let (qq, dqq) = q.eval_with_derivative(y);
            (qq - z) / (dqq * dy - 1.0)
        },
        AberthOptions::default(),
    );
    let mut one_var_p2 = Vec::new();
    for (x, members) in roots::cluster(&approx.points, &approx.last_step, radius) {
        let (y, dy) = q.eval_with_derivative(x);
        if (y - x).norm() <= 10.0 * radius {
            continue;
        }
        let dqq = q.eval_with_derivative(y).1 * dy;
        for _ in 0..members.len() {
            one_var_p2.push((one - a) * (one - a) * dqq + a * 2.0);
        }
    }

    // two-variable side from the general solver
    let s1 = periodic::periodic_points(f, 1, cfg)?;
    let s2 = periodic::periodic_points(f, 2, cfg)?;
    let henon_fixed = s1.fix_traces();
    let henon_p2: Vec<C64> = s2
        .records
        .iter()
        .filter(|r| r.period == 2)
        .flat_map(|r| std::iter::repeat(r.trace).take(2 * r.multiplicity))
        .collect();
    let fixed_residual = multiset_distance(&one_var_fixed, &henon_fixed).map(|x| x.0).unwrap_or(f64::INFINITY);
    let period2_residual = multiset_distance(&one_var_p2, &henon_p2).map(|x| x.0).unwrap_or(f64::INFINITY);
    Ok(HuguinReport {
        q,
        fixed_residual,
        period2_residual,
        fixed_count: henon_fixed.len(),
        period2_count: henon_p2.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn self_comparison() {
        let f = HenonComposition::quadratic(c(0.3, 0.0), c(-1.0, 0.0)).unwrap();
        let t = trace_spectrum(&f, 3, &PeriodicConfig::default()).unwrap();
        assert!(spectra_equal(&t, &t, 0.0).equal);
        assert_eq!(t.period(3).unwrap().traces.len(), 8);
    }

    #[test]
    fn shifted_constant_differs() {
        let f = HenonComposition::quadratic(c(0.3, 0.0), c(0.0, 0.0)).unwrap();
        let g = HenonComposition::quadratic(c(0.3, 0.0), c(0.01, 0.0)).unwrap();
        let cfg = PeriodicConfig::default();
        let cmp = spectra_equal(&trace_spectrum(&f, 1, &cfg).unwrap(), &trace_spectrum(&g, 1, &cfg).unwrap(), 1e-9);
        assert!(!cmp.equal);
        assert!(cmp.reason.is_some());
    }

    #[test]
    fn synthetic_exceptional() {
        let mk = |n: usize, v: Vec<C64>| PeriodSpectrum {
            n,
            status: SolveStatus::Complete,
            traces: vec![],
            exact: vec![],
            formal_traces: vec![],
            flagged: vec![],
            unstable: v,
            stable: vec![],
        };
        let table = SpectrumTable {
            degree: 2,
            jacobian: c(0.1, 0.0),
            max_period: 3,
            periods: vec![mk(1, vec![c(3.0, 0.0)]), mk(2, vec![c(9.0, 0.0); 2]), mk(3, vec![c(27.0, 0.0); 6])],
        };
        match exceptional_from_table(&table, 1e-12) {
            ExceptionalOutcome::Exceptional { kappa } => assert!((kappa - c(3.0, 0.0)).norm() < 1e-12),
            other => panic!("{other:?}"),
        }
        let empty = SpectrumTable { periods: vec![mk(1, vec![])], ..table };
        assert!(matches!(exceptional_from_table(&empty, 1e-9), ExceptionalOutcome::Inconclusive { .. }));
    }

    #[test]
    fn reduction_one_variable_limit() {
        let f = HenonComposition::quadratic(c(0.25, 0.1), c(0.0, 0.0)).unwrap();
        let rep = huguin_reduction(&f, &PeriodicConfig::default()).unwrap();
        assert!(rep.fixed_residual < 1e-10);
        assert!(rep.period2_residual < 1e-10);
        let g = HenonComposition::quadratic(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(huguin_reduction(&g, &PeriodicConfig::default()), Err(HenonError::Domain(_))));
    }
}
