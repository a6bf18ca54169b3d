//! Parameter-space experiments for families of Hénon maps: continuation of
//! periodic orbits, attracting-cycle scans and slice rendering.

mod classify;
mod continuation;
mod scan;
mod slice;

pub use classify::{AttractingCycle, ClassifierConfig, OrbitFate};
pub use continuation::{continue_orbit, ContinuationConfig, ContinuationEvent, ContinuationStatus, ContinuationStep, ContinuationTrack, CrossingDirection, EventKind, ParamPath};
pub use scan::{attracting_cycle_scan, ParameterResult, ScanConfig, ScanHit, ScanReport};
pub use slice::{render_slice, PixelClass, SliceConfig, SliceImage, Window};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::henon::{HenonComposition, Point};
use crate::periodic::{OrbitType, NEUTRAL_MARGIN};

/// One-parameter family of compositions.
pub trait Family: Sync {
    fn map(&self, param: C64) -> Result<HenonComposition>;
}

impl<F> Family for F
where
    F: Fn(C64) -> Result<HenonComposition> + Sync,
{
    fn map(&self, param: C64) -> Result<HenonComposition> {
        self(param)
    }
}

/// (a, c) ↦ (a·y + x² + c, x) with c fixed and a the parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFamily {
    pub c: C64,
}

impl Default for QuadraticFamily {
    fn default() -> Self {
        QuadraticFamily { c: C64::new(0.0, 0.0) }
    }
}

impl Family for QuadraticFamily {
    fn map(&self, param: C64) -> Result<HenonComposition> {
        HenonComposition::quadratic(param, self.c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub point: Point,
    pub eigenvalues: [C64; 2],
    pub kind: OrbitType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFixedAnalysis {
    pub a: C64,
    pub alpha: FixedPointReport,
    pub beta: FixedPointReport,
    /// |a| = 1 and a/|a| is not a root of unity of order ≤ `SIEGEL_MAX_ORDER`.
    pub siegel_candidate: bool,
}

pub const SIEGEL_MAX_ORDER: u32 = 64;

fn near_root_of_unity(a: C64, max_order: u32, tol: f64) -> bool {
    let t = a.arg() / std::f64::consts::TAU;
    (1..=max_order).any(|q| {
        let qt = t * q as f64;
        (qt - qt.round()).abs() < tol
    })
}

/// Fixed points of (a·y + x², x): α = (0, 0) with eigenvalues ±√a and
/// β = (1−a, 1−a) with eigenvalues the roots of λ² − 2(1−a)λ − a.
pub fn quadratic_family_fixed_analysis(a: C64) -> QuadraticFixedAnalysis {
    let zero = C64::new(0.0, 0.0);
    let s = a.sqrt();
    let alpha = FixedPointReport {
        point: [zero, zero],
        eigenvalues: [s, -s],
        kind: OrbitType::classify(s, -s, NEUTRAL_MARGIN),
    };
    let b = 1.0 - a;
    let disc = (b * b + a).sqrt();
    let (l1, l2) = (b + disc, b - disc);
    let beta = FixedPointReport {
        point: [b, b],
        eigenvalues: [l1, l2],
        kind: OrbitType::classify(l1, l2, NEUTRAL_MARGIN),
    };
    let siegel_candidate = (a.norm() - 1.0).abs() < 1e-12 && !near_root_of_unity(a, SIEGEL_MAX_ORDER, 1e-9);
    QuadraticFixedAnalysis { a, alpha, beta, siegel_candidate }
}
