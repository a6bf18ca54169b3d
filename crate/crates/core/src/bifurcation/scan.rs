use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{escape_radius, origin_reference, Classifier, ClassifierConfig, OrbitFate};
use super::slice::Window;
use super::Family;
use crate::error::{HenonError, Result};
use crate::henon::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub moduli: Vec<f64>,
    pub angles: usize,
    /// Angle of the first parameter on each ring, in radians.
    pub angle_offset: f64,
    pub inits: usize,
    pub window: Window,
    pub classifier: ClassifierConfig,
    /// Stop a parameter at its first extra cycle.
    pub first_hit_only: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            moduli: vec![0.99],
            angles: 500,
            angle_offset: 0.0,
            inits: 10_000,
            window: Window::square(2.0),
            classifier: ClassifierConfig::default(),
            first_hit_only: false,
        }
    }
}

impl ScanConfig {
    /// Offset that puts the argument of `a` on the angle grid.
    pub fn offset_through(a: C64, angles: usize) -> f64 {
        let step = std::f64::consts::TAU / angles as f64;
        a.arg().rem_euclid(step)
    }

    pub fn parameters(&self) -> Vec<C64> {
        let step = std::f64::consts::TAU / self.angles as f64;
        self.moduli
            .iter()
            .flat_map(|&r| (0..self.angles).map(move |j| C64::from_polar(r, self.angle_offset + step * j as f64)))
            .collect()
    }

    pub fn initial_points(&self) -> Vec<Point> {
        let g = ((self.inits as f64).sqrt().floor() as usize).max(1);
        let w = &self.window;
        let mut pts = Vec::with_capacity(g * g);
        for i in 0..g {
            let im = w.y_max - (i as f64 + 0.5) * (w.y_max - w.y_min) / g as f64;
            for j in 0..g {
                let re = w.x_min + (j as f64 + 0.5) * (w.x_max - w.x_min) / g as f64;
                pts.push([C64::new(re, im), C64::new(0.0, 0.0)]);
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanHit {
    pub period: usize,
    pub points: Vec<Point>,
    pub eigenvalues: [C64; 2],
    pub initial_point: Point,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterResult {
    pub param: C64,
    pub hits: Vec<ScanHit>,
    pub escaped: usize,
    pub reference: usize,
    pub undecided: usize,
    pub tested: usize,
    pub has_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    pub results: Vec<ParameterResult>,
    pub undecided_fraction: f64,
}

impl ScanReport {
    /// Parameters admitting an attracting cycle other than the one through the origin.
    pub fn hit_parameters(&self) -> Vec<C64> {
        self.results.iter().filter(|r| !r.hits.is_empty()).map(|r| r.param).collect()
    }

    /// Hit parameters whose complex conjugate is also a hit.
    pub fn conjugate_paired(&self, tol: f64) -> bool {
        let hits = self.hit_parameters();
        hits.iter().all(|a| hits.iter().any(|b| (a.conj() - b).norm() < tol))
    }
}

fn scan_parameter<F: Family + ?Sized>(family: &F, a: C64, inits: &[Point], cfg: &ScanConfig) -> Result<ParameterResult> {
    let f = family.map(a)?;
    let reference = origin_reference(&f, cfg.classifier.attract_margin);
    let has_reference = reference.is_some();
    let c = Classifier { f: &f, escape: escape_radius(&f)?, reference, cfg: cfg.classifier };
    let mut res = ParameterResult { param: a, hits: Vec::new(), escaped: 0, reference: 0, undecided: 0, tested: 0, has_reference };
    for z in inits {
        res.tested += 1;
        match c.classify(*z) {
            OrbitFate::Escape { .. } => res.escaped += 1,
            OrbitFate::Reference { .. } => res.reference += 1,
            OrbitFate::Undecided => res.undecided += 1,
            OrbitFate::Cycle { iterations, cycle } => {
                let tol = 1e-6 * (1.0 + cycle.points.iter().map(crate::henon::point_norm).fold(0.0, f64::max));
                if !res.hits.iter().any(|h| h.period == cycle.period && cycle.contains(&h.points[0], tol)) {
                    res.hits.push(ScanHit { period: cycle.period, points: cycle.points, eigenvalues: cycle.eigenvalues, initial_point: *z, iterations });
                }
                if cfg.first_hit_only {
                    break;
                }
            }
        }
    }
    Ok(res)
}

/// Sweep rings of parameters, looking for attracting cycles on the slice
/// {y = 0} other than the origin.
pub fn attracting_cycle_scan<F: Family + ?Sized>(family: &F, cfg: &ScanConfig) -> Result<ScanReport> {
    if cfg.angles == 0 || cfg.inits == 0 {
        return Err(HenonError::InvalidInput("scan needs at least one angle and one initial point".into()));
    }
    let inits = cfg.initial_points();
    let results = cfg.parameters().par_iter().map(|&a| scan_parameter(family, a, &inits, cfg)).collect::<Result<Vec<_>>>()?;
    let tested: usize = results.iter().map(|r| r.tested).sum();
    let undecided: usize = results.iter().map(|r| r.undecided).sum();
    Ok(ScanReport { config: cfg.clone(), results, undecided_fraction: undecided as f64 / tested.max(1) as f64 })
}
