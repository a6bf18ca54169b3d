//! Parameter homotopy for the cyclic periodic-orbit system
//! x_{j+1} = a_{σ(j)} x_{j−1} + p_{σ(j)}(x_j), indices mod N.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::henon::HenonComposition;
use crate::linalg;

/// One factor with coefficients affine in the homotopy parameter s:
/// a(s) = s·a, b(s) = b0 + s·db, leading coefficient l0 + s·(1 − l0).
#[derive(Debug, Clone)]
pub(crate) struct FactorLine {
    pub a: C64,
    pub degree: usize,
    pub l0: C64,
    pub b0: Vec<C64>,
    pub db: Vec<C64>,
}

impl FactorLine {
    fn coeff(&self, m: usize, s: C64) -> C64 {
        self.b0[m] + s * self.db[m]
    }

    fn lead(&self, s: C64) -> C64 {
        self.l0 + s * (1.0 - self.l0)
    }

    /// (p_s(x), p_s'(x), p_s''(x)).
    fn eval(&self, x: C64, s: C64) -> (C64, C64, C64) {
        let l = self.lead(s);
        let mut p = l * x;
        let mut dp = l;
        let mut ddp = C64::new(0.0, 0.0);
        for m in (0..self.degree - 1).rev() {
            ddp = ddp * x + dp * 2.0;
            dp = dp * x + p;
            p = p * x + self.coeff(m, s);
        }
        (p, dp, ddp)
    }

    fn eval_db(&self, x: C64) -> C64 {
        let mut v = (1.0 - self.l0) * x;
        for m in (0..self.degree - 1).rev() {
            v = v * x + self.db[m];
        }
        v
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CyclicSystem {
    pub factors: Vec<FactorLine>,
    pub n: usize,
}

impl CyclicSystem {
    /// `scale` = λ gives the start system x_{j+1} = λ^{1−d}x_j^d + b0(x_j).
    pub fn new(f: &HenonComposition, period: usize, start: &[Vec<C64>], scale: f64) -> Self {
        let factors = f
            .factors()
            .iter()
            .zip(start)
            .map(|(h, b0)| FactorLine {
                a: h.a,
                degree: h.degree(),
                l0: C64::new(scale.powi(1 - h.degree() as i32), 0.0),
                b0: b0.clone(),
                db: h.poly.coeffs().iter().zip(b0).map(|(t, s)| t - s).collect(),
            })
            .collect::<Vec<_>>();
        let n = period * factors.len();
        CyclicSystem { factors, n }
    }

    fn factor(&self, j: usize) -> &FactorLine {
        &self.factors[j % self.factors.len()]
    }

    pub fn residual(&self, x: &[C64], s: C64) -> DVector<C64> {
        let n = self.n;
        DVector::from_iterator(
            n,
            (0..n).map(|j| {
                let h = self.factor(j);
                let (p, _, _) = h.eval(x[j], s);
                x[(j + 1) % n] - s * h.a * x[(j + n - 1) % n] - p
            }),
        )
    }

    pub fn jacobian(&self, x: &[C64], s: C64) -> DMatrix<C64> {
        let n = self.n;
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for j in 0..n {
            let h = self.factor(j);
            let (_, dp, _) = h.eval(x[j], s);
            m[(j, (j + 1) % n)] += C64::new(1.0, 0.0);
            m[(j, (j + n - 1) % n)] -= s * h.a;
            m[(j, j)] -= dp;
        }
        m
    }

    fn ds_column(&self, x: &[C64]) -> DVector<C64> {
        let n = self.n;
        DVector::from_iterator(
            n,
            (0..n).map(|j| {
                let h = self.factor(j);
                -h.a * x[(j + n - 1) % n] - h.eval_db(x[j])
            }),
        )
    }

    /// ∂(DF(x)·w)/∂x, which is diagonal for this system.
    fn hessian_action(&self, x: &[C64], w: &DVector<C64>, s: C64) -> DMatrix<C64> {
        let n = self.n;
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for j in 0..n {
            let (_, _, ddp) = self.factor(j).eval(x[j], s);
            m[(j, j)] = -ddp * w[j];
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TrackOptions {
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct PathEnd {
    pub x: Vec<C64>,
    pub ok: bool,
}

fn s_of(t: f64, eta: f64) -> (C64, C64) {
    let s = C64::new(t, eta * t * (1.0 - t));
    let ds = C64::new(1.0, eta * (1.0 - 2.0 * t));
    (s, ds)
}

fn tangent(sys: &CyclicSystem, x: &[C64], t: f64, eta: f64) -> Option<DVector<C64>> {
    let (s, ds) = s_of(t, eta);
    let j = sys.jacobian(x, s);
    let rhs = -sys.ds_column(x) * ds;
    linalg::solve(j, rhs)
}

fn axpy(x: &[C64], v: &DVector<C64>, h: f64) -> Vec<C64> {
    x.iter().zip(v.iter()).map(|(a, b)| a + b * h).collect()
}

fn rk4(sys: &CyclicSystem, x: &[C64], t: f64, h: f64, eta: f64) -> Option<Vec<C64>> {
    let k1 = tangent(sys, x, t, eta)?;
    let k2 = tangent(sys, &axpy(x, &k1, h / 2.0), t + h / 2.0, eta)?;
    let k3 = tangent(sys, &axpy(x, &k2, h / 2.0), t + h / 2.0, eta)?;
    let k4 = tangent(sys, &axpy(x, &k3, h), t + h, eta)?;
    let two = C64::new(2.0, 0.0);
    let v = (k1 + k2 * two + k3 * two + k4) * C64::new(1.0 / 6.0, 0.0);
    Some(axpy(x, &v, h))
}

fn scale_of(x: &[C64]) -> f64 {
    1.0 + linalg::max_norm(x)
}

/// Newton corrector with a contraction requirement.
fn correct(sys: &CyclicSystem, x: &[C64], s: C64, max_first: f64) -> Option<Vec<C64>> {
    let mut x = x.to_vec();
    let mut prev = f64::INFINITY;
    for it in 0..4 {
        let j = sys.jacobian(&x, s);
        let r = sys.residual(&x, s);
        let dx = linalg::solve(j, -r)?;
        let step = dx.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        if !step.is_finite() {
            return None;
        }
        if it == 0 && step > max_first {
            return None;
        }
        if it > 0 && step > 0.25 * prev && step > 1e-13 * scale_of(&x) {
            return None;
        }
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi += d;
        }
        if step <= 1e-12 * scale_of(&x) {
            return Some(x);
        }
        prev = step;
    }
    None
}

/// Plain Newton at the target; returns the best iterate seen.
pub(crate) fn newton_at_target(sys: &CyclicSystem, x: &[C64], iters: usize) -> Vec<C64> {
    let one = C64::new(1.0, 0.0);
    let mut x = x.to_vec();
    let mut best = x.clone();
    let mut best_res = sys.residual(&x, one).iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    for _ in 0..iters {
        let j = sys.jacobian(&x, one);
        let r = sys.residual(&x, one);
        let dx = match linalg::lstsq(j, &(-r), 1e-14) {
            Some(v) => v,
            None => break,
        };
        if !dx.iter().all(|v| v.is_finite()) {
            break;
        }
        for (xi, d) in x.iter_mut().zip(dx.iter()) {
            *xi += d;
        }
        let res = sys.residual(&x, one).iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        if res < best_res {
            best_res = res;
            best = x.clone();
        }
        if res == 0.0 {
            break;
        }
    }
    best
}

pub(crate) fn track(sys: &CyclicSystem, start: Vec<C64>, opts: TrackOptions) -> PathEnd {
    let mut x = start;
    let mut t = 0.0_f64;
    let mut h = opts.h_init;
    let mut good = 0;
    while t < 1.0 {
        h = h.min(1.0 - t);
        let next_t = if 1.0 - t - h < 1e-15 { 1.0 } else { t + h };
        let step_h = next_t - t;
        let accepted = rk4(sys, &x, t, step_h, opts.eta).and_then(|pred| {
            let jump = pred.iter().zip(&x).fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
            let (s, _) = s_of(next_t, opts.eta);
            correct(sys, &pred, s, 0.1 * (jump + 1e-8 * scale_of(&x)) + 1e-9 * scale_of(&x))
        });
        match accepted {
            Some(xn) => {
                x = xn;
                t = next_t;
                good += 1;
                if good >= 3 {
                    h = (h * 2.0).min(opts.h_max);
                    good = 0;
                }
            }
            None => {
                h /= 2.0;
                good = 0;
                if h < opts.h_min {
                    if t > 0.95 {
                        let x_end = newton_at_target(sys, &x, 200);
                        return PathEnd { x: x_end, ok: true };
                    }
                    return PathEnd { x, ok: false };
                }
            }
        }
    }
    PathEnd { x, ok: true }
}

/// Deflation-based refinement of a singular root at s = 1: solves
/// F(x) = 0, DF(x)·V·λ = 0, h·λ = 1 by Gauss–Newton with pseudo-inverse.
pub(crate) fn deflate(sys: &CyclicSystem, x0: &[C64], corank: usize, hvec: &[C64]) -> Option<Vec<C64>> {
    let one = C64::new(1.0, 0.0);
    let n = sys.n;
    let j0 = sys.jacobian(x0, one);
    let svd = j0.svd(false, true);
    let vt = svd.v_t?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    let r = corank.max(1).min(n);
    let mut v = DMatrix::from_element(n, r, C64::new(0.0, 0.0));
    for (col, &idx) in order.iter().take(r).enumerate() {
        for row in 0..n {
            v[(row, col)] = vt[(idx, row)].conj();
        }
    }
    let hv: Vec<C64> = hvec.iter().take(r).cloned().collect();
    let hn: f64 = hv.iter().map(|z| z.norm_sqr()).sum();
    let mut lam: Vec<C64> = hv.iter().map(|z| z.conj() / hn).collect();
    let mut x = x0.to_vec();
    let rows = 2 * n + 1;
    let cols = n + r;
    let mut last_res = f64::INFINITY;
    for _ in 0..60 {
        let jx = sys.jacobian(&x, one);
        let lam_v = DVector::from_vec(lam.clone());
        let w = &v * &lam_v;
        let f = sys.residual(&x, one);
        let g = &jx * &w;
        let hl = hv.iter().zip(&lam).fold(C64::new(0.0, 0.0), |s, (a, b)| s + a * b) - one;
        let mut res = DVector::from_element(rows, C64::new(0.0, 0.0));
        res.rows_mut(0, n).copy_from(&f);
        res.rows_mut(n, n).copy_from(&g);
        res[2 * n] = hl;
        let rn = res.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        if rn < 1e-15 * scale_of(&x) {
            last_res = rn;
            break;
        }
        let mut big = DMatrix::from_element(rows, cols, C64::new(0.0, 0.0));
        big.view_mut((0, 0), (n, n)).copy_from(&jx);
        big.view_mut((n, 0), (n, n)).copy_from(&sys.hessian_action(&x, &w, one));
        big.view_mut((n, n), (n, r)).copy_from(&(&jx * &v));
        for (c, hc) in hv.iter().enumerate() {
            big[(2 * n, n + c)] = *hc;
        }
        let du = linalg::lstsq(big, &(-res), 1e-12)?;
        if !du.iter().all(|z| z.is_finite()) {
            return None;
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += du[i];
        }
        for (c, l) in lam.iter_mut().enumerate() {
            *l += du[n + c];
        }
        let step = du.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        last_res = rn;
        if step < 1e-15 * scale_of(&x) {
            break;
        }
    }
    let final_f = sys.residual(&x, one).iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    if final_f.is_finite() && final_f < 1e-11 * scale_of(&x) && last_res.is_finite() {
        Some(x)
    } else {
        None
    }
}
