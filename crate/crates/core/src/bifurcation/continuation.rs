use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::Family;
use crate::error::{HenonError, Result};
use crate::henon::{point_dist, point_norm, HenonComposition, Point};
use crate::linalg::{eigen_from_trace_det, Mat2};
use crate::periodic::{record_from_points, PeriodicOrbitRecord};

/// Parameter path t ∈ [0, 1] ↦ a(t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ParamPath {
    Segment { from: C64, to: C64 },
    Arc { center: C64, radius: f64, theta0: f64, theta1: f64 },
}

impl ParamPath {
    pub fn radial(angle: f64, r0: f64, r1: f64) -> Self {
        ParamPath::Segment { from: C64::from_polar(r0, angle), to: C64::from_polar(r1, angle) }
    }

    pub fn circle(radius: f64, theta0: f64) -> Self {
        ParamPath::Arc { center: C64::new(0.0, 0.0), radius, theta0, theta1: theta0 + std::f64::consts::TAU }
    }

    pub fn at(&self, t: f64) -> C64 {
        match *self {
            ParamPath::Segment { from, to } => from + (to - from) * t,
            ParamPath::Arc { center, radius, theta0, theta1 } => center + C64::from_polar(radius, theta0 + (theta1 - theta0) * t),
        }
    }

    pub fn is_closed(&self) -> bool {
        (self.at(0.0) - self.at(1.0)).norm() <= 1e-12 * (1.0 + self.at(0.0).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    /// Largest step in the path variable t.
    pub max_step: f64,
    pub min_step: f64,
    /// Largest accepted move of the tracked point between steps.
    pub max_point_jump: f64,
    /// Largest accepted relative change of either eigenvalue between steps.
    pub max_eigen_jump: f64,
    pub residual_tol: f64,
    pub branch_margin: f64,
    pub event_tol: f64,
    pub max_steps: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            max_step: 0.01,
            min_step: 1e-12,
            max_point_jump: 0.1,
            max_eigen_jump: 0.2,
            residual_tol: 1e-9,
            branch_margin: 1e-6,
            event_tol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub t: f64,
    pub param: C64,
    /// Eigenvalues in a branch-consistent order along the track.
    pub eigenvalues: [C64; 2],
    pub orbit: PeriodicOrbitRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingDirection {
    Outward,
    Inward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    /// |λ_index| crosses 1.
    UnitCrossing { index: usize, direction: CrossingDirection },
    /// An eigenvalue reaches 1 within the branch margin.
    BranchPoint { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationEvent {
    /// Index of the first accepted step after the event.
    pub step: usize,
    pub t: f64,
    pub param: C64,
    pub modulus: f64,
    pub event: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ContinuationStatus {
    Completed,
    BranchPoint { t: f64 },
    StepFloor { t: f64 },
    StepLimit { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationTrack {
    pub path: ParamPath,
    pub period: usize,
    pub steps: Vec<ContinuationStep>,
    pub events: Vec<ContinuationEvent>,
    pub status: ContinuationStatus,
    /// For closed paths: entry i is the index of the starting orbit point
    /// reached by the continuation of point i.
    pub monodromy: Option<Vec<usize>>,
}

impl ContinuationTrack {
    pub fn params(&self) -> Vec<C64> {
        self.steps.iter().map(|s| s.param).collect()
    }

    pub fn unit_crossings(&self) -> usize {
        self.events.iter().filter(|e| matches!(e.event, EventKind::UnitCrossing { .. })).count()
    }
}

struct Solved {
    z: Point,
    eig: [C64; 2],
}

fn monodromy_matrix(f: &HenonComposition, z: Point, n: usize) -> Mat2 {
    let mut m = Mat2::identity();
    let mut w = z;
    for _ in 0..n {
        m = f.differential(w).mul(&m);
        w = f.evaluate(w);
    }
    m
}

fn newton(f: &HenonComposition, z0: Point, n: usize, tol: f64) -> Option<Point> {
    let mut z = z0;
    let one = C64::new(1.0, 0.0);
    for _ in 0..40 {
        let w = f.iterate(z, n);
        let r = [w[0] - z[0], w[1] - z[1]];
        let mut m = monodromy_matrix(f, z, n);
        m.0[0][0] -= one;
        m.0[1][1] -= one;
        let d = m.inverse()?.apply(r);
        z = [z[0] - d[0], z[1] - d[1]];
        if !z[0].is_finite() || !z[1].is_finite() || point_norm(&z) > 1e8 {
            return None;
        }
        if point_norm(&d) <= 1e-15 * (1.0 + point_norm(&z)) {
            break;
        }
    }
    (point_dist(&f.iterate(z, n), &z) <= tol).then_some(z)
}

fn ordered_eigen(m: &Mat2, prev: Option<[C64; 2]>) -> [C64; 2] {
    let (l1, l2) = eigen_from_trace_det(m.trace(), m.det());
    match prev {
        Some(p) if (l1 - p[1]).norm() + (l2 - p[0]).norm() < (l1 - p[0]).norm() + (l2 - p[1]).norm() => [l2, l1],
        _ => [l1, l2],
    }
}

fn solve_at<F: Family + ?Sized>(family: &F, a: C64, guess: Point, n: usize, prev: Option<[C64; 2]>, tol: f64) -> Option<Solved> {
    let f = family.map(a).ok()?;
    let z = newton(&f, guess, n, tol)?;
    let eig = ordered_eigen(&monodromy_matrix(&f, z, n), prev);
    Some(Solved { z, eig })
}

fn cycle_points(f: &HenonComposition, z: Point, n: usize) -> Vec<Point> {
    let mut pts = Vec::with_capacity(n);
    let mut w = z;
    for _ in 0..n {
        pts.push(w);
        w = f.evaluate(w);
    }
    pts
}

fn log_modulus(l: C64) -> f64 {
    l.norm().ln()
}

/// Follow a periodic orbit of `family` along `path`, with secant prediction,
/// Newton correction and step halving.
pub fn continue_orbit<F: Family + ?Sized>(family: &F, path: ParamPath, orbit0: &PeriodicOrbitRecord, cfg: &ContinuationConfig) -> Result<ContinuationTrack> {
    let n = orbit0.period;
    if n == 0 || orbit0.points.is_empty() {
        return Err(HenonError::InvalidInput("empty starting orbit".into()));
    }
    let a0 = path.at(0.0);
    let start = solve_at(family, a0, orbit0.points[0], n, None, cfg.residual_tol)
        .ok_or_else(|| HenonError::InvalidInput("starting orbit is not periodic at the start parameter".into()))?;
    if start.eig.iter().any(|l| (l - 1.0).norm() < cfg.branch_margin) {
        return Err(HenonError::InvalidInput("starting orbit has an eigenvalue equal to 1".into()));
    }
    let make_step = |t: f64, a: C64, s: &Solved| -> Result<ContinuationStep> {
        let f = family.map(a)?;
        let orbit = record_from_points(&f, cycle_points(&f, s.z, n), 1, n);
        Ok(ContinuationStep { t, param: a, eigenvalues: s.eig, orbit })
    };

    let mut steps = vec![make_step(0.0, a0, &start)?];
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut cur = start;
    let mut prev_z: Option<(f64, Point)> = None;
    let mut h = cfg.max_step;
    let status = loop {
        if t >= 1.0 {
            break ContinuationStatus::Completed;
        }
        if steps.len() > cfg.max_steps {
            break ContinuationStatus::StepLimit { t };
        }
        if h < cfg.min_step {
            break ContinuationStatus::StepFloor { t };
        }
        let t_new = (t + h).min(1.0);
        let dt = t_new - t;
        let guess = match prev_z {
            Some((dt_prev, zp)) if dt_prev > 0.0 => {
                let s = dt / dt_prev;
                [cur.z[0] + (cur.z[0] - zp[0]) * s, cur.z[1] + (cur.z[1] - zp[1]) * s]
            }
            _ => cur.z,
        };
        let a_new = path.at(t_new);
        let Some(next) = solve_at(family, a_new, guess, n, Some(cur.eig), cfg.residual_tol) else {
            h *= 0.5;
            continue;
        };
        let jump_ok = point_dist(&next.z, &cur.z) < cfg.max_point_jump
            && (0..2).all(|i| (next.eig[i] - cur.eig[i]).norm() <= cfg.max_eigen_jump * cur.eig[i].norm().max(1e-3));
        if !jump_ok {
            h *= 0.5;
            continue;
        }

        for i in 0..2 {
            let (l0, l1) = (log_modulus(cur.eig[i]), log_modulus(next.eig[i]));
            if (l0 < 0.0) != (l1 < 0.0) {
                let (tc, sc) = bisect_crossing(family, &path, n, i, (t, &cur), t_new, l0 < 0.0, cfg);
                events.push(ContinuationEvent {
                    step: steps.len(),
                    t: tc,
                    param: path.at(tc),
                    modulus: sc.eig[i].norm(),
                    event: EventKind::UnitCrossing {
                        index: i,
                        direction: if l0 < 0.0 { CrossingDirection::Outward } else { CrossingDirection::Inward },
                    },
                });
            }
        }
        prev_z = Some((dt, cur.z));
        t = t_new;
        cur = next;
        steps.push(make_step(t, a_new, &cur)?);
        if let Some(i) = (0..2).find(|&i| (cur.eig[i] - 1.0).norm() < cfg.branch_margin) {
            events.push(ContinuationEvent {
                step: steps.len() - 1,
                t,
                param: a_new,
                modulus: cur.eig[i].norm(),
                event: EventKind::BranchPoint { index: i },
            });
            break ContinuationStatus::BranchPoint { t };
        }
        h = (h * 1.5).min(cfg.max_step);
    };
    events.sort_by(|x, y| x.t.total_cmp(&y.t));

    let monodromy = if matches!(status, ContinuationStatus::Completed) && path.is_closed() {
        let first = &steps[0].orbit.points;
        let last = &steps.last().expect("at least one step").orbit.points;
        let tol = 1e-6 * (1.0 + first.iter().map(point_norm).fold(0.0, f64::max));
        last.iter()
            .map(|z| {
                first.iter().enumerate().map(|(j, w)| (j, point_dist(z, w))).min_by(|x, y| x.1.total_cmp(&y.1)).filter(|(_, d)| *d < tol).map(|(j, _)| j)
            })
            .collect::<Option<Vec<usize>>>()
    } else {
        None
    };

    Ok(ContinuationTrack { path, period: n, steps, events, status, monodromy })
}

fn bisect_crossing<F: Family + ?Sized>(
    family: &F,
    path: &ParamPath,
    n: usize,
    index: usize,
    (t_lo, lo): (f64, &Solved),
    t_hi: f64,
    inside_at_lo: bool,
    cfg: &ContinuationConfig,
) -> (f64, Solved) {
    let (mut a, mut b) = (t_lo, t_hi);
    let mut best = Solved { z: lo.z, eig: lo.eig };
    while b - a > cfg.event_tol {
        let m = 0.5 * (a + b);
        let Some(s) = solve_at(family, path.at(m), best.z, n, Some(best.eig), cfg.residual_tol) else {
            break;
        };
        if (log_modulus(s.eig[index]) < 0.0) == inside_at_lo {
            a = m;
        } else {
            b = m;
        }
        best = s;
    }
    (0.5 * (a + b), best)
}
