use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::henon::{point_dist, point_norm, HenonComposition, Point};
use crate::linalg::{eigen_from_trace_det, Mat2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub max_iter: usize,
    pub max_period: usize,
    /// Closeness of hare and tortoise that triggers a polish attempt.
    pub cycle_tol: f64,
    /// Required margin below 1 of the largest eigenvalue modulus.
    pub attract_margin: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { max_iter: 50_000, max_period: 12, cycle_tol: 1e-6, attract_margin: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractingCycle {
    pub period: usize,
    /// Cycle points, starting from the lexicographically smallest.
    pub points: Vec<Point>,
    pub eigenvalues: [C64; 2],
}

impl AttractingCycle {
    pub fn contains(&self, z: &Point, tol: f64) -> bool {
        self.points.iter().any(|w| point_dist(w, z) < tol)
    }

    pub fn same_as(&self, other: &AttractingCycle, tol: f64) -> bool {
        self.period == other.period && self.contains(&other.points[0], tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OrbitFate {
    Escape { iterations: usize },
    Reference { iterations: usize },
    Cycle { iterations: usize, cycle: AttractingCycle },
    Undecided,
}

/// Attracting cycle through the origin with its trap radius.
#[derive(Debug, Clone)]
pub(crate) struct Reference {
    pub cycle: AttractingCycle,
    pub trap: f64,
}

pub(crate) struct Classifier<'a> {
    pub f: &'a HenonComposition,
    pub escape: f64,
    pub reference: Option<Reference>,
    pub cfg: ClassifierConfig,
}

pub(crate) fn escape_radius(f: &HenonComposition) -> Result<f64> {
    Ok((10.0 * f.escape_rate(1e-13)?.r).max(4.0))
}

fn key(z: &Point) -> (f64, f64, f64, f64) {
    (z[0].re, z[0].im, z[1].re, z[1].im)
}

fn cmp_point(a: &Point, b: &Point) -> std::cmp::Ordering {
    let (ka, kb) = (key(a), key(b));
    ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.total_cmp(&kb.2)).then(ka.3.total_cmp(&kb.3))
}

fn jacobian_along(f: &HenonComposition, z: Point, n: usize) -> Mat2 {
    let mut m = Mat2::identity();
    let mut w = z;
    for _ in 0..n {
        m = f.differential(w).mul(&m);
        w = f.evaluate(w);
    }
    m
}

/// Newton polish of f^p(z) = z followed by the attraction test.
pub(crate) fn polish_cycle(f: &HenonComposition, z0: Point, p: usize, margin: f64) -> Option<AttractingCycle> {
    let one = C64::new(1.0, 0.0);
    let mut z = z0;
    for _ in 0..30 {
        let w = f.iterate(z, p);
        let r = [w[0] - z[0], w[1] - z[1]];
        let mut m = jacobian_along(f, z, p);
        m.0[0][0] -= one;
        m.0[1][1] -= one;
        let d = m.inverse()?.apply(r);
        z = [z[0] - d[0], z[1] - d[1]];
        if !z[0].is_finite() || !z[1].is_finite() {
            return None;
        }
        if point_norm(&d) <= 1e-15 * (1.0 + point_norm(&z)) {
            break;
        }
    }
    let scale = 1.0 + point_norm(&z);
    if point_dist(&f.iterate(z, p), &z) > 1e-11 * scale || point_dist(&z, &z0) > 1e-3 * scale {
        return None;
    }
    let mut pts = Vec::with_capacity(p);
    let mut w = z;
    for _ in 0..p {
        pts.push(w);
        w = f.evaluate(w);
    }
    for i in 1..p {
        if point_dist(&pts[i], &pts[0]) < 1e-8 * scale {
            return None;
        }
    }
    let m = jacobian_along(f, z, p);
    let (l1, l2) = eigen_from_trace_det(m.trace(), m.det());
    if l1.norm().max(l2.norm()) >= 1.0 - margin {
        return None;
    }
    let start = (0..p).min_by(|&i, &j| cmp_point(&pts[i], &pts[j])).unwrap_or(0);
    pts.rotate_left(start);
    Some(AttractingCycle { period: p, points: pts, eigenvalues: [l1, l2] })
}

/// The origin as an attracting fixed point of `f`, if it is one. The trap is a
/// ball on which the linear part contracts in an adapted norm.
pub(crate) fn origin_reference(f: &HenonComposition, margin: f64) -> Option<Reference> {
    let o = [C64::new(0.0, 0.0); 2];
    if point_norm(&f.evaluate(o)) > 1e-12 {
        return None;
    }
    let cycle = polish_cycle(f, o, 1, margin)?;
    let rho = cycle.eigenvalues[0].norm().max(cycle.eigenvalues[1].norm());
    let jac = f.jacobian_const().norm().sqrt();
    let mut second = 0.0f64;
    for h in f.factors() {
        second = second.max(h.poly.second_derivative(C64::new(0.0, 0.0)).norm() * 0.5);
    }
    let trap = 0.3 * (1.0 - rho) / (jac.max(1.0) * second.max(1.0)) / f.len() as f64;
    Some(Reference { cycle, trap })
}

impl Classifier<'_> {
    pub fn classify(&self, z0: Point) -> OrbitFate {
        let cfg = &self.cfg;
        let mut z = z0;
        let mut tortoise = z0;
        let mut power = 1usize;
        let mut lam = 0usize;
        for it in 0..cfg.max_iter {
            if point_norm(&z) > self.escape || !z[0].is_finite() || !z[1].is_finite() {
                return OrbitFate::Escape { iterations: it };
            }
            if let Some(r) = &self.reference {
                if r.cycle.contains(&z, r.trap) {
                    return OrbitFate::Reference { iterations: it };
                }
            }
            if lam > 0 && lam <= cfg.max_period && point_dist(&z, &tortoise) < cfg.cycle_tol {
                if let Some(cycle) = self.minimal_cycle(z, lam) {
                    let is_ref = self.reference.as_ref().is_some_and(|r| r.cycle.same_as(&cycle, 1e-8 * (1.0 + point_norm(&z))));
                    return if is_ref { OrbitFate::Reference { iterations: it } } else { OrbitFate::Cycle { iterations: it, cycle } };
                }
            }
            if power == lam {
                tortoise = z;
                power *= 2;
                lam = 0;
            }
            z = self.f.evaluate(z);
            lam += 1;
        }
        OrbitFate::Undecided
    }

    fn minimal_cycle(&self, z: Point, lam: usize) -> Option<AttractingCycle> {
        (1..=lam).filter(|p| lam % p == 0).find_map(|p| polish_cycle(self.f, z, p, self.cfg.attract_margin))
    }
}
