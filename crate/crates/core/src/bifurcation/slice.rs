use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{escape_radius, origin_reference, AttractingCycle, Classifier, ClassifierConfig, OrbitFate};
use crate::error::{HenonError, Result};
use crate::henon::{point_norm, HenonComposition};

pub const MAX_SIDE: usize = 16384;

/// Rectangle in the x-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn square(r: f64) -> Self {
        Window { x_min: -r, x_max: r, y_min: -r, y_max: r }
    }

    /// Center of pixel (col, row), rows running top to bottom.
    pub fn pixel_center(&self, col: usize, row: usize, width: usize, height: usize) -> C64 {
        C64::new(
            self.x_min + (col as f64 + 0.5) * (self.x_max - self.x_min) / width as f64,
            self.y_max - (row as f64 + 0.5) * (self.y_max - self.y_min) / height as f64,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub classifier: ClassifierConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "class", content = "id", rename_all = "kebab-case")]
pub enum PixelClass {
    Escape,
    /// Index into the cycle registry.
    Basin(u32),
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceImage {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<PixelClass>,
    /// Entry 0 is the cycle through the origin when the origin attracts.
    pub registry: Vec<AttractingCycle>,
    pub origin_basin: bool,
}

const PALETTE: [[u8; 3]; 8] = [
    [0, 0, 0],
    [220, 20, 20],
    [20, 160, 20],
    [30, 60, 220],
    [230, 160, 0],
    [150, 30, 180],
    [0, 170, 170],
    [120, 70, 20],
];

impl SliceImage {
    pub fn color(class: PixelClass) -> [u8; 3] {
        match class {
            PixelClass::Escape => [255, 255, 255],
            PixelClass::Undecided => [128, 128, 128],
            PixelClass::Basin(k) => PALETTE[k as usize % PALETTE.len()],
        }
    }

    pub fn pixel(&self, col: usize, row: usize) -> PixelClass {
        self.pixels[row * self.width + col]
    }

    pub fn fraction(&self, class: PixelClass) -> f64 {
        self.pixels.iter().filter(|&&p| p == class).count() as f64 / self.pixels.len() as f64
    }

    /// Binary PPM (P6) encoding.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.pixels.len());
        for &p in &self.pixels {
            out.extend_from_slice(&Self::color(p));
        }
        out
    }

    pub fn write_ppm(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_ppm())
    }
}

enum RawClass {
    Escape,
    Reference,
    Cycle(AttractingCycle),
    Undecided,
}

/// Classify the orbit of (x, 0) for every pixel x of the window.
pub fn render_slice(f: &HenonComposition, cfg: &SliceConfig) -> Result<SliceImage> {
    let (w, h) = (cfg.width, cfg.height);
    if w == 0 || h == 0 || w > MAX_SIDE || h > MAX_SIDE {
        return Err(HenonError::InvalidInput(format!("resolution {w}x{h} outside 1..={MAX_SIDE}")));
    }
    let reference = origin_reference(f, cfg.classifier.attract_margin);
    let origin_basin = reference.is_some();
    let ref_cycle = reference.as_ref().map(|r| r.cycle.clone());
    let c = Classifier { f, escape: escape_radius(f)?, reference, cfg: cfg.classifier };
    let rows: Vec<Vec<RawClass>> = (0..h)
        .into_par_iter()
        .map(|row| {
            (0..w)
                .map(|col| {
                    let x = cfg.window.pixel_center(col, row, w, h);
                    match c.classify([x, C64::new(0.0, 0.0)]) {
                        OrbitFate::Escape { .. } => RawClass::Escape,
                        OrbitFate::Reference { .. } => RawClass::Reference,
                        OrbitFate::Cycle { cycle, .. } => RawClass::Cycle(cycle),
                        OrbitFate::Undecided => RawClass::Undecided,
                    }
                })
                .collect()
        })
        .collect();

    let mut found: Vec<AttractingCycle> = Vec::new();
    for cl in rows.iter().flatten() {
        if let RawClass::Cycle(cy) = cl {
            let tol = 1e-6 * (1.0 + cy.points.iter().map(point_norm).fold(0.0, f64::max));
            if !found.iter().any(|g| g.same_as(cy, tol)) {
                found.push(cy.clone());
            }
        }
    }
    found.sort_by(|a, b| a.period.cmp(&b.period).then(a.points[0][0].re.total_cmp(&b.points[0][0].re)).then(a.points[0][0].im.total_cmp(&b.points[0][0].im)));
    let base = usize::from(origin_basin);
    let mut registry: Vec<AttractingCycle> = ref_cycle.into_iter().collect();
    registry.extend(found.iter().cloned());

    let pixels = rows
        .into_iter()
        .flatten()
        .map(|cl| match cl {
            RawClass::Escape => PixelClass::Escape,
            RawClass::Undecided => PixelClass::Undecided,
            RawClass::Reference => PixelClass::Basin(0),
            RawClass::Cycle(cy) => {
                let tol = 1e-6 * (1.0 + cy.points.iter().map(point_norm).fold(0.0, f64::max));
                let k = found.iter().position(|g| g.same_as(&cy, tol)).expect("registered cycle");
                PixelClass::Basin((base + k) as u32)
            }
        })
        .collect();
    Ok(SliceImage { window: cfg.window, width: w, height: h, pixels, registry, origin_basin })
}
