//! Small dense linear algebra over the complex numbers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// 2×2 complex matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        let o = C64::new(1.0, 0.0);
        let z = C64::new(0.0, 0.0);
        Mat2([[o, z], [z, o]])
    }

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let m = &self.0;
        Some(Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]))
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }
}

/// Roots of λ² − tλ + δ, larger modulus first. The small root is recovered
/// from the product to avoid cancellation.
pub fn eigen_from_trace_det(t: C64, det: C64) -> (C64, C64) {
    let disc = (t * t - 4.0 * det).sqrt();
    let plus = t + disc;
    let minus = t - disc;
    let big = if plus.norm() >= minus.norm() { plus } else { minus } / 2.0;
    if big.norm() == 0.0 {
        return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    }
    (big, det / big)
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Solves `a x = b` by LU with partial pivoting; `None` when singular.
pub fn solve(a: DMatrix<C64>, b: DVector<C64>) -> Option<DVector<C64>> {
    let lu = a.lu();
    lu.solve(&b)
}

/// Minimum-norm least-squares solution with singular values below
/// `rel_cut · σ_max` discarded.
pub fn lstsq(a: DMatrix<C64>, b: &DVector<C64>, rel_cut: f64) -> Option<DVector<C64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    svd.solve(b, (smax * rel_cut).max(f64::MIN_POSITIVE)).ok()
}

/// Singular values of a dense complex matrix, descending.
pub fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().cloned().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}
