//! Lyapunov exponents from saddle multipliers, the sandwich bounds, and the
//! crossed-mapping and folding constructions near infinity.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{HenonError, Result};
use crate::henon::{HenonComposition, HenonFactor, Point};
use crate::periodic::{self, OrbitType, PeriodicConfig, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub chi_plus_estimate: f64,
    pub period_used: usize,
    /// Saddle points of exact period n, counted with multiplicity.
    pub saddle_count: usize,
    /// log|jac| − χ⁺.
    pub chi_minus: f64,
    /// Mean of n⁻¹ log|λ^s| over the same saddles.
    pub stable_mean: f64,
    /// max − min of n⁻¹ log|λ^u| over the saddle cycles.
    pub spread: f64,
    pub status: SolveStatus,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
    pub hypotheses_ok: bool,
}

/// χ⁺ estimated by averaging n⁻¹ log|λ^u| over saddles of exact period n.
pub fn chi_plus_periodic(f: &HenonComposition, n: usize, cfg: &PeriodicConfig) -> Result<LyapunovReport> {
    let set = periodic::periodic_points(f, n, cfg)?;
    let mut sum_u = 0.0;
    let mut sum_s = 0.0;
    let mut count = 0usize;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in set.records.iter().filter(|r| r.period == n && r.kind == OrbitType::Saddle) {
        let w = r.period * r.multiplicity;
        let cu = r.lambda_u().norm().ln() / n as f64;
        let cs = r.lambda_s().norm().ln() / n as f64;
        sum_u += cu * w as f64;
        sum_s += cs * w as f64;
        count += w;
        lo = lo.min(cu);
        hi = hi.max(cu);
    }
    if count == 0 {
        return Err(HenonError::Uncertified(format!("no saddle orbits of exact period {n}")));
    }
    let chi = sum_u / count as f64;
    let bounds = lyapunov_bounds(f, &BoundsConfig::default())?;
    Ok(LyapunovReport {
        chi_plus_estimate: chi,
        period_used: n,
        saddle_count: count,
        chi_minus: f.jacobian_const().norm().ln() - chi,
        stable_mean: sum_s / count as f64,
        spread: hi - lo,
        status: set.status,
        bound_lower: bounds.lower.applicable.then_some(bounds.lower.value),
        bound_upper: bounds.upper.applicable.then_some(bounds.upper.value),
        hypotheses_ok: bounds.lower.applicable && bounds.upper.applicable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    /// Escape-rate threshold for the lower bound; `None` selects the default
    /// for the degree.
    pub min_escape_rate: Option<f64>,
    pub tol: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig { min_escape_rate: None, tol: 1e-13 }
    }
}

/// Default escape-rate threshold: 9 for d ≤ 4, otherwise log of
/// max((3200d)^{1/(d−1)}, 30d·12^{(d−1)/2}).
pub fn default_escape_threshold(d: usize) -> f64 {
    if d <= 4 {
        return 9.0;
    }
    let df = d as f64;
    let r1 = (3200.0 * df).powf(1.0 / (df - 1.0));
    let r2 = 30.0 * df * 12f64.powf((df - 1.0) / 2.0);
    r1.max(r2).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub applicable: bool,
    pub reason: Option<String>,
    /// Signed distance from the estimate to the bound (positive inside).
    pub margin: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub escape_rate: f64,
    pub degree: usize,
    pub lower: BoundCheck,
    pub upper: BoundCheck,
    pub estimate: Option<f64>,
}

impl BoundsReport {
    /// True when every applicable bound holds; `None` if none applies.
    pub fn verdict(&self) -> Option<bool> {
        let checks: Vec<bool> = [&self.lower, &self.upper].iter().filter_map(|c| c.holds).collect();
        if checks.is_empty() {
            None
        } else {
            Some(checks.iter().all(|&b| b))
        }
    }
}

/// The bounds log d + M − (1/min d_i)log(4/3) ≤ χ⁺ ≤ log d + dM + d log(15d)
/// with their hypotheses evaluated.
pub fn lyapunov_bounds(f: &HenonComposition, cfg: &BoundsConfig) -> Result<BoundsReport> {
    let er = f.escape_rate(cfg.tol)?;
    let (m, r) = (er.m, er.r);
    let d = f.degree();
    let df = d as f64;
    let dmin = f.multidegree().into_iter().min().unwrap_or(d) as f64;
    let upper_value = df.ln() + df * m + df * (15.0 * df).ln();
    let lower_value = df.ln() + m - (4f64 / 3.0).ln() / dmin;

    let mut upper_reason = None;
    let mut lower_reason = None;
    for (i, h) in f.factors().iter().enumerate() {
        let di = h.degree() as f64;
        let bound = r.powf(di - 1.0);
        if h.a.norm() > bound && upper_reason.is_none() {
            upper_reason = Some(format!("|a_{}| = {} exceeds R_f^(d_i-1) = {bound}", i + 1, h.a.norm()));
        }
        if h.a.norm() > bound / (400.0 * di) && lower_reason.is_none() {
            lower_reason =
                Some(format!("|a_{}| = {} exceeds R_f^(d_i-1)/(400 d_i) = {}", i + 1, h.a.norm(), bound / (400.0 * di)));
        }
    }
    let threshold = cfg.min_escape_rate.unwrap_or_else(|| default_escape_threshold(d));
    if m < threshold && lower_reason.is_none() {
        lower_reason = Some(format!("M(f) = {m} is below the threshold {threshold}"));
    }
    let mk = |value: f64, reason: Option<String>| BoundCheck {
        value,
        applicable: reason.is_none(),
        reason,
        margin: None,
        holds: None,
    };
    Ok(BoundsReport {
        escape_rate: m,
        degree: d,
        lower: mk(lower_value, lower_reason),
        upper: mk(upper_value, upper_reason),
        estimate: None,
    })
}

/// Checks an estimate of χ⁺ against the applicable bounds.
pub fn verify_lyapunov_bounds(f: &HenonComposition, chi_estimate: f64, cfg: &BoundsConfig) -> Result<BoundsReport> {
    let mut rep = lyapunov_bounds(f, cfg)?;
    rep.estimate = Some(chi_estimate);
    if rep.lower.applicable {
        let m = chi_estimate - rep.lower.value;
        rep.lower.margin = Some(m);
        rep.lower.holds = Some(m >= 0.0);
    }
    if rep.upper.applicable {
        let m = rep.upper.value - chi_estimate;
        rep.upper.margin = Some(m);
        rep.upper.holds = Some(m >= 0.0);
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossedReport {
    pub ok: bool,
    pub radius: f64,
    pub degree: i64,
    /// min over the vertical boundary of |p(x)| − 10R|a|, divided by 6^d R^d.
    pub min_ratio: f64,
    pub witness: Option<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossedConfig {
    pub samples: usize,
    /// Required factor by which |p(x)+ay| exceeds 6^d R^d.
    pub margin: f64,
}

impl Default for CrossedConfig {
    fn default() -> Self {
        CrossedConfig { samples: 4096, margin: 2.0 }
    }
}

fn winding_number<F: Fn(C64) -> C64 + Sync>(g: F, center: C64, radius: f64, samples: usize) -> i64 {
    let vals: Vec<C64> =
        (0..samples).into_par_iter().map(|j| g(center + C64::from_polar(radius, TAU * j as f64 / samples as f64))).collect();
    let mut total = 0.0;
    for j in 0..samples {
        let a = vals[j];
        let b = vals[(j + 1) % samples];
        total += (b / a).arg();
    }
    (total / TAU).round() as i64
}

/// Samples the vertical boundary of D(0,10R)² and counts the degree of
/// x ↦ p(x)+ay over D(0,10R), for the target D(0,6^dR^d) × D(0,10R).
pub fn crossed_map_check(h: &HenonFactor, radius: f64, cfg: &CrossedConfig) -> Result<CrossedReport> {
    let d = h.degree();
    let rh = h.poly.max_escape_rate(1e-13)?.r;
    if radius < rh * (1.0 - 1e-12) {
        return Err(HenonError::InvalidInput(format!("radius {radius} is below R_h = {rh}")));
    }
    if h.a.norm() > radius.powi(d as i32 - 1) {
        return Err(HenonError::Domain(format!(
            "|a| = {} exceeds R^(d-1) = {}",
            h.a.norm(),
            radius.powi(d as i32 - 1)
        )));
    }
    let outer = 6f64.powi(d as i32) * radius.powi(d as i32);
    let rx = 10.0 * radius;
    let n = cfg.samples.max(16);
    // worst y on |y| ≤ 10R is anti-aligned with p(x)
    let worst = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = C64::from_polar(rx, TAU * j as f64 / n as f64);
            let px = h.poly.eval(x);
            let val = px.norm() - rx * h.a.norm();
            (val, j)
        })
        .reduce(|| (f64::INFINITY, usize::MAX), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a });
    let x = C64::from_polar(rx, TAU * worst.1 as f64 / n as f64);
    let px = h.poly.eval(x);
    let dir = if h.a.norm() > 0.0 && px.norm() > 0.0 { -(px / px.norm()) / (h.a / h.a.norm()) } else { C64::new(1.0, 0.0) };
    let witness_pt = [x, dir * rx];
    let ok_boundary = worst.0 > cfg.margin * outer;
    // degree of the horizontal image over the target disk, for several lines and targets
    let mut degree = winding_number(|x| h.poly.eval(x), C64::new(0.0, 0.0), rx, n);
    for (ky, kw) in [(0.5, 0.0), (1.0, 0.5), (0.3, 0.9)] {
        let y0 = C64::from_polar(ky * rx, 1.0);
        let w = C64::from_polar(kw * outer, 2.0);
        let dg = winding_number(|x| h.poly.eval(x) + h.a * y0 - w, C64::new(0.0, 0.0), rx, n);
        if dg != degree {
            degree = -1;
        }
    }
    let ok = ok_boundary && degree == d as i64;
    Ok(CrossedReport {
        ok,
        radius,
        degree,
        min_ratio: worst.0 / outer,
        witness: if ok_boundary { None } else { Some(witness_pt) },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldConfig {
    /// Refuse to run when the escape-rate threshold is not met.
    pub strict: bool,
    pub min_escape_rate: Option<f64>,
    /// Grid points per axis over D(0,10R) for locating the component.
    pub grid: usize,
    pub disks: usize,
}

impl Default for FoldConfig {
    fn default() -> Self {
        FoldConfig { strict: false, min_escape_rate: None, grid: 240, disks: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldHypotheses {
    pub escape_rate: f64,
    pub threshold: f64,
    pub threshold_met: bool,
    pub jacobian_bound_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldCertificate {
    pub s: f64,
    pub s_star: f64,
    pub k_star: usize,
    pub q: usize,
    /// Degree of p over the component U of p⁻¹(D(v, s*R^d/8)) containing c.
    pub q_one_variable: usize,
    pub critical_point: C64,
    pub critical_value: C64,
    pub radius: f64,
    /// Index of the factor used after cyclic rotation.
    pub factor: usize,
    pub sampled_y: Vec<C64>,
    pub sampled_degrees: Vec<usize>,
    pub divisibility_ok: bool,
    pub hypotheses: FoldHypotheses,
    /// All hypotheses of the construction hold, not only the numerics.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum FoldOutcome {
    Certificate(Box<FoldCertificate>),
    NotSolenoidal { q: usize },
    HypothesesUnmet { reason: String },
    Inconclusive { reason: String },
}

struct Component {
    mask: Vec<bool>,
    grid: usize,
    half: f64,
}

impl Component {
    fn cell_of(&self, x: C64) -> Option<usize> {
        let g = self.grid;
        let step = 2.0 * self.half / g as f64;
        let i = ((x.re + self.half) / step).floor();
        let j = ((x.im + self.half) / step).floor();
        if i < 0.0 || j < 0.0 || i >= g as f64 || j >= g as f64 {
            return None;
        }
        Some(j as usize * g + i as usize)
    }

    fn center(&self, idx: usize) -> C64 {
        let step = 2.0 * self.half / self.grid as f64;
        C64::new(-self.half + (idx % self.grid) as f64 * step + step / 2.0, -self.half + (idx / self.grid) as f64 * step + step / 2.0)
    }
}

/// Flood fill of {|g(x) − v| < ρ} ∩ D(0, half) from the cell nearest `seed`.
fn component_of<G: Fn(C64) -> Option<C64> + Sync>(g: &G, v: C64, rho: f64, seed: C64, grid: usize, half: f64) -> Option<Component> {
    let base = Component { mask: vec![false; grid * grid], grid, half };
    let inside: Vec<bool> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let x = base.center(idx);
            x.norm() < half && g(x).map(|w| (w - v).norm() < rho).unwrap_or(false)
        })
        .collect();
    let start = {
        let s = base.cell_of(seed)?;
        if inside[s] {
            s
        } else {
            (0..grid * grid)
                .filter(|&i| inside[i])
                .min_by(|&a, &b| (base.center(a) - seed).norm().partial_cmp(&(base.center(b) - seed).norm()).unwrap())?
        }
    };
    let mut mask = vec![false; grid * grid];
    let mut stack = vec![start];
    mask[start] = true;
    while let Some(c) = stack.pop() {
        let (i, j) = (c % grid, c / grid);
        let mut nbrs = Vec::with_capacity(4);
        if i > 0 {
            nbrs.push(c - 1);
        }
        if i + 1 < grid {
            nbrs.push(c + 1);
        }
        if j > 0 {
            nbrs.push(c - grid);
        }
        if j + 1 < grid {
            nbrs.push(c + grid);
        }
        for nb in nbrs {
            if inside[nb] && !mask[nb] {
                mask[nb] = true;
                stack.push(nb);
            }
        }
    }
    Some(Component { mask, grid, half })
}

/// Distinct solutions of g(x) = w inside the component, by Newton from
/// every component cell.
fn count_preimages<G: Fn(C64) -> Option<C64> + Sync>(g: &G, comp: &Component, w: C64) -> Option<usize> {
    let cells: Vec<usize> = (0..comp.mask.len()).filter(|&i| comp.mask[i]).collect();
    let step_cap = 2.0 * comp.half / comp.grid as f64 * 4.0;
    let roots: Vec<Option<C64>> = cells
        .par_iter()
        .map(|&c| {
            let mut x = comp.center(c);
            for _ in 0..80 {
                let h = 1e-6 * (1.0 + x.norm());
                let gx = g(x)? - w;
                let dg = (g(x + h)? - g(x - h)?) / (2.0 * h);
                if dg.norm() == 0.0 {
                    return None;
                }
                let mut dx = gx / dg;
                if dx.norm() > step_cap {
                    dx *= step_cap / dx.norm();
                }
                x -= dx;
                if dx.norm() < 1e-12 * (1.0 + x.norm()) {
                    let r = (g(x)? - w).norm();
                    return (r < 1e-8 * (1.0 + w.norm())).then_some(x);
                }
            }
            None
        })
        .collect();
    let mut distinct: Vec<C64> = Vec::new();
    let tol = 1e-7 * (1.0 + comp.half);
    for x in roots.into_iter().flatten() {
        match comp.cell_of(x) {
            Some(c) if comp.mask[c] => {}
            _ => continue,
        }
        if !distinct.iter().any(|y| (x - y).norm() < tol) {
            distinct.push(x);
        }
    }
    Some(distinct.len())
}

/// Runs the folding construction on the factor of largest escape rate and
/// counts the degree of the component through the dominant critical point.
pub fn fold_certificate(f: &HenonComposition, cfg: &FoldConfig) -> Result<FoldOutcome> {
    let tol = 1e-13;
    let rates: Vec<f64> = f.factors().iter().map(|h| h.poly.max_escape_rate(tol).map(|e| e.m)).collect::<Result<_>>()?;
    let (imax, m) = rates.iter().cloned().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    // rotate so that the dominant factor is applied last
    let g = f.rotated((imax + 1) % f.len());
    let h = g.factors().last().unwrap().clone();
    let d = h.degree();
    let r = m.exp();
    let threshold = cfg.min_escape_rate.unwrap_or_else(|| default_escape_threshold(f.degree()));
    let a_bound = r.powi(d as i32 - 1) / (400.0 * d as f64);
    let hyp = FoldHypotheses {
        escape_rate: m,
        threshold,
        threshold_met: m >= threshold,
        jacobian_bound_met: h.a.norm() <= a_bound,
    };
    if !hyp.jacobian_bound_met {
        return Ok(FoldOutcome::HypothesesUnmet { reason: format!("|a| = {} exceeds R^(d-1)/(400d) = {a_bound}", h.a.norm()) });
    }
    if !(m > 1e-9) {
        return Ok(FoldOutcome::HypothesesUnmet { reason: format!("M(f) = {m}: no escaping critical point") });
    }
    if cfg.strict && !hyp.threshold_met {
        return Ok(FoldOutcome::HypothesesUnmet { reason: format!("M(f) = {m} is below the threshold {threshold}") });
    }

    let p = &h.poly;
    let crit = p.critical_points()?;
    let c = *crit
        .iter()
        .max_by(|x, y| p.green(**x, tol).partial_cmp(&p.green(**y, tol)).unwrap())
        .unwrap();
    let v = p.eval(c);
    let rd = r.powi(d as i32);
    let crit_values: Vec<C64> = crit.iter().map(|&x| p.eval(x)).collect();
    let disk_r = 10.0 * r * h.a.norm();
    let two_d = 2 * d;
    let s_k = |k: usize| 1.0 + k as f64 / two_d as f64;
    let k_star = (1..=two_d).find(|&k| {
        let (lo, hi) = (s_k(k - 1) * rd / 8.0, s_k(k) * rd / 8.0);
        crit_values.iter().all(|cv| {
            let dist = (cv - v).norm();
            dist + disk_r <= lo || dist - disk_r >= hi
        })
    });
    let Some(k_star) = k_star else {
        return Ok(FoldOutcome::Inconclusive { reason: "every annulus meets a critical-value disk".into() });
    };
    let s_star = 0.5 * (s_k(k_star - 1) + s_k(k_star));
    let s = s_star - 1.0 / (100.0 * d as f64);
    let half = 10.0 * r;

    // one-variable degree of p over U
    let rho_star = s_star * rd / 8.0;
    let pv = |x: C64| Some(p.eval(x));
    let u_comp = match component_of(&pv, v, rho_star, c, cfg.grid, half) {
        Some(cmp) => cmp,
        None => return Ok(FoldOutcome::Inconclusive { reason: "component U not resolved on the grid".into() }),
    };
    let q1 = count_preimages(&pv, &u_comp, v + C64::from_polar(0.5 * rho_star, 0.7)).unwrap_or(0);

    let rho = s * rd / 8.0;
    let psi = |y0: C64| {
        let g = &g;
        let h = &h;
        move |x: C64| -> Option<C64> { g.bottcher_product(h.apply([x, y0]), None).ok() }
    };
    let degree_at = |y0: C64, fibers: &[C64]| -> Option<Vec<usize>> {
        let ps = psi(y0);
        let comp = component_of(&ps, v, rho, c, cfg.grid, half)?;
        fibers.iter().map(|&w| count_preimages(&ps, &comp, w)).collect()
    };
    let fibers: Vec<C64> = (0..3).map(|j| v + C64::from_polar(0.5 * rho, 0.3 + TAU * j as f64 / 3.0)).collect();
    let Some(base) = degree_at(C64::new(0.0, 0.0), &fibers) else {
        return Ok(FoldOutcome::Inconclusive { reason: "Böttcher coordinate unavailable on the component".into() });
    };
    if base.iter().any(|&x| x != base[0]) {
        return Ok(FoldOutcome::Inconclusive { reason: format!("fiber counts disagree: {base:?}") });
    }
    let q = base[0];
    if q < 2 {
        return Ok(FoldOutcome::NotSolenoidal { q });
    }
    let sampled_y: Vec<C64> = (0..cfg.disks)
        .map(|j| C64::from_polar(9.0 * r * ((j as f64 + 0.5) / cfg.disks as f64).sqrt(), 2.399_963 * j as f64))
        .collect();
    let mut sampled_degrees = Vec::with_capacity(cfg.disks);
    for &y0 in &sampled_y {
        match degree_at(y0, &fibers[..1]) {
            Some(v) => sampled_degrees.push(v[0]),
            None => return Ok(FoldOutcome::Inconclusive { reason: format!("disk at y = {y0} not resolved") }),
        }
    }
    let divisibility_ok = sampled_degrees.iter().all(|&k| k > 0 && k % q == 0);
    Ok(FoldOutcome::Certificate(Box::new(FoldCertificate {
        s,
        s_star,
        k_star,
        q,
        q_one_variable: q1,
        critical_point: c,
        critical_value: v,
        radius: r,
        factor: imax,
        sampled_y,
        sampled_degrees,
        divisibility_ok,
        certified: hyp.threshold_met,
        hypotheses: hyp,
    })))
}
