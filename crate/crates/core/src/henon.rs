//! Compositions of Hénon maps h(x, y) = (a·y + p(x), x) in normal form.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{HenonError, Result};
use crate::linalg::Mat2;
use crate::poly1d::{cutoff_steps, EscapeRate, MonicCenteredPolynomial};

pub type Point = [C64; 2];

pub fn point_norm(z: &Point) -> f64 {
    z[0].norm().max(z[1].norm())
}

pub fn point_dist(z: &Point, w: &Point) -> f64 {
    (z[0] - w[0]).norm().max((z[1] - w[1]).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorRepr")]
pub struct HenonFactor {
    pub a: C64,
    pub poly: MonicCenteredPolynomial,
}

#[derive(Deserialize)]
struct FactorRepr {
    a: C64,
    poly: MonicCenteredPolynomial,
}

impl TryFrom<FactorRepr> for HenonFactor {
    type Error = HenonError;
    fn try_from(r: FactorRepr) -> Result<Self> {
        HenonFactor::new(r.a, r.poly)
    }
}

impl HenonFactor {
    pub fn new(a: C64, poly: MonicCenteredPolynomial) -> Result<Self> {
        if a.norm() == 0.0 || !a.is_finite() {
            return Err(HenonError::InvalidInput(format!("Jacobian parameter must be finite and nonzero, got {a}")));
        }
        Ok(HenonFactor { a, poly })
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn apply(&self, z: Point) -> Point {
        [self.a * z[1] + self.poly.eval(z[0]), z[0]]
    }

    pub fn apply_inverse(&self, z: Point) -> Point {
        [z[1], (z[0] - self.poly.eval(z[1])) / self.a]
    }

    pub fn differential(&self, z: Point) -> Mat2 {
        Mat2([[self.poly.derivative(z[0]), self.a], [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]])
    }

    /// Radius R with |x'| ≥ 2|x| ≥ R and |x'| ≥ |x| = |y'| whenever
    /// |x| ≥ R and |y| ≤ |x|.
    pub fn escape_radius(&self) -> f64 {
        let d = self.degree() as f64;
        let mut r = 10.0_f64.max(4.0_f64.powf(1.0 / (d - 1.0)));
        r = r.max((4.0 * self.a.norm()).powf(1.0 / (d - 1.0)));
        for (j, b) in self.poly.coeffs().iter().enumerate() {
            r = r.max((4.0 * (d - 1.0) * b.norm()).powf(1.0 / (d - j as f64)));
        }
        r
    }

    /// θ' = (a y + p(x))/x^d − 1.
    pub fn theta(&self, z: Point) -> C64 {
        self.poly.theta(z[0]) + self.a * z[1] / z[0].powu(self.degree() as u32)
    }
}

/// f = h_k ∘ … ∘ h_1, stored in application order h_1, …, h_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CompositionRepr")]
pub struct HenonComposition {
    factors: Vec<HenonFactor>,
}

#[derive(Deserialize)]
struct CompositionRepr {
    factors: Vec<HenonFactor>,
}

impl TryFrom<CompositionRepr> for HenonComposition {
    type Error = HenonError;
    fn try_from(r: CompositionRepr) -> Result<Self> {
        HenonComposition::new(r.factors)
    }
}

/// (x, y) ↦ (sx·y, sy·x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapScaling {
    pub sx: C64,
    pub sy: C64,
}

impl SwapScaling {
    pub fn apply(&self, z: Point) -> Point {
        [self.sx * z[1], self.sy * z[0]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseNormalForm {
    pub map: HenonComposition,
    /// C with map ∘ C = C ∘ f^{−1}.
    pub conjugacy: SwapScaling,
}

impl HenonComposition {
    pub fn new(factors: Vec<HenonFactor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(HenonError::InvalidInput("composition needs at least one factor".into()));
        }
        Ok(HenonComposition { factors })
    }

    pub fn single(a: C64, p: MonicCenteredPolynomial) -> Result<Self> {
        Self::new(vec![HenonFactor::new(a, p)?])
    }

    /// (a·y + x² + c, x).
    pub fn quadratic(a: C64, c: C64) -> Result<Self> {
        Self::single(a, MonicCenteredPolynomial::quadratic(c))
    }

    pub fn factors(&self) -> &[HenonFactor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn degree(&self) -> usize {
        self.factors.iter().map(|h| h.degree()).product()
    }

    pub fn multidegree(&self) -> Vec<usize> {
        self.factors.iter().map(|h| h.degree()).collect()
    }

    /// (−1)^k ∏ a_i.
    pub fn jacobian_const(&self) -> C64 {
        let prod = self.factors.iter().fold(C64::new(1.0, 0.0), |p, h| p * h.a);
        if self.factors.len() % 2 == 1 {
            -prod
        } else {
            prod
        }
    }

    pub fn evaluate(&self, z: Point) -> Point {
        self.factors.iter().fold(z, |w, h| h.apply(w))
    }

    pub fn inverse_evaluate(&self, z: Point) -> Point {
        self.factors.iter().rev().fold(z, |w, h| h.apply_inverse(w))
    }

    pub fn iterate(&self, z: Point, n: usize) -> Point {
        (0..n).fold(z, |w, _| self.evaluate(w))
    }

    pub fn differential(&self, z: Point) -> Mat2 {
        let mut m = Mat2::identity();
        let mut w = z;
        for h in &self.factors {
            m = h.differential(w).mul(&m);
            w = h.apply(w);
        }
        m
    }

    /// Cyclic rotation h_{j+1}, …, h_k, h_1, …, h_j; conjugate to f.
    pub fn rotated(&self, j: usize) -> Self {
        let k = self.factors.len();
        let factors = (0..k).map(|i| self.factors[(i + j) % k].clone()).collect();
        HenonComposition { factors }
    }

    pub fn escape_rate(&self, tol: f64) -> Result<EscapeRate> {
        let mut m: f64 = 0.0;
        for h in &self.factors {
            m = m.max(h.poly.max_escape_rate(tol)?.m);
        }
        Ok(EscapeRate { m, r: m.exp() })
    }

    pub fn escape_radius(&self) -> f64 {
        self.factors.iter().map(|h| h.escape_radius()).fold(0.0, f64::max)
    }

    /// The diagonal action of a (d−1)-th root of unity α.
    pub fn unity_action(&self, alpha: C64) -> Result<Self> {
        let d = self.degree();
        if (alpha.powu(d as u32 - 1) - 1.0).norm() > 1e-12 {
            return Err(HenonError::Domain(format!("{alpha} is not a root of unity of order dividing {}", d - 1)));
        }
        let k = self.factors.len();
        // alphas[i] = α_{i+1}, i = 0..=k
        let mut alphas = vec![alpha];
        for h in &self.factors {
            let last = *alphas.last().unwrap();
            alphas.push(last.powu(h.degree() as u32));
        }
        let mut out = Vec::with_capacity(k);
        for (j, h) in self.factors.iter().enumerate() {
            let a_here = alphas[j];
            let a_next = alphas[j + 1];
            let a_prev = if j == 0 { alphas[k - 1] } else { alphas[j - 1] };
            let a = a_prev / a_next * h.a;
            let poly = h.poly.rescaled(a_here, a_next.inv())?;
            out.push(HenonFactor::new(a, poly)?);
        }
        HenonComposition::new(out)
    }

    /// The conjugacy L with unity_action(α) ∘ L = L ∘ f.
    pub fn unity_conjugacy(&self, alpha: C64) -> [C64; 2] {
        let k = self.factors.len();
        let mut alphas = vec![alpha];
        for h in &self.factors {
            let last = *alphas.last().unwrap();
            alphas.push(last.powu(h.degree() as u32));
        }
        [alpha.inv(), alphas[k - 1].inv()]
    }

    /// All elements of U_{d−1}.
    pub fn unity_group(&self) -> Vec<C64> {
        let n = self.degree() - 1;
        (0..n).map(|m| C64::from_polar(1.0, TAU * m as f64 / n as f64)).collect()
    }

    /// M̄(f) = max M(α·f) over α ∈ U_{d−1}.
    pub fn mbar(&self, tol: f64) -> Result<f64> {
        let mut best: f64 = 0.0;
        for alpha in self.unity_group() {
            best = best.max(self.unity_action(alpha)?.escape_rate(tol)?.m);
        }
        Ok(best)
    }

    /// A normal form g conjugate to f^{−1}, with the principal branch for
    /// the cyclic scaling system.
    pub fn inverse_normal_form(&self) -> Result<InverseNormalForm> {
        let k = self.factors.len();
        let d = self.degree();
        // g's j-th factor (1-based) is built from f's factor k+1−j
        let src: Vec<&HenonFactor> = (0..k).map(|j| &self.factors[k - 1 - j]).collect();
        let mut c = C64::new(1.0, 0.0);
        for h in &src {
            c = -c.powu(h.degree() as u32) / h.a;
        }
        if !c.is_finite() || c.norm() == 0.0 {
            return Err(HenonError::Precision("scaling constants overflow".into()));
        }
        let t = (c.inv().ln() / (d as f64 - 1.0)).exp();
        let mut gamma = vec![t];
        for h in &src {
            let last = *gamma.last().unwrap();
            gamma.push(-last.powu(h.degree() as u32) / h.a);
        }
        gamma[k] = t;
        let g_at = |i: isize| -> C64 { gamma[i.rem_euclid(k as isize) as usize] };
        let mut factors = Vec::with_capacity(k);
        for (idx, h) in src.iter().enumerate() {
            let j = idx as isize + 1;
            let gj = g_at(j);
            let b = g_at(j - 2) / (h.a * gj);
            let q = h.poly.rescaled(g_at(j - 1), -(h.a * gj).inv())?;
            factors.push(HenonFactor::new(b, q)?);
        }
        let map = HenonComposition::new(factors)?;
        let conjugacy = SwapScaling { sx: gamma[0].inv(), sy: g_at(-1).inv() };
        Ok(InverseNormalForm { map, conjugacy })
    }

    /// Forward Green function G^+.
    pub fn green_plus(&self, z: Point, tol: f64) -> f64 {
        let r = self.escape_radius();
        let k = self.factors.len();
        let cutoff = cutoff_steps(self.degree(), tol) * k;
        let mut w = z;
        let mut weight = 1.0;
        let mut step = 0;
        loop {
            if w[0].norm() >= r && w[1].norm() <= w[0].norm() {
                break;
            }
            if step >= cutoff || !w[0].is_finite() || !w[1].is_finite() {
                return 0.0;
            }
            let h = &self.factors[step % k];
            w = h.apply(w);
            weight /= h.degree() as f64;
            step += 1;
        }
        let mut g = w[0].norm().ln();
        let mut rel = 1.0;
        loop {
            let h = &self.factors[step % k];
            let th = h.theta(w);
            rel /= h.degree() as f64;
            g += rel * (C64::new(1.0, 0.0) + th).norm().ln();
            if rel * th.norm() < 1e-18 * g.abs().max(1.0) {
                break;
            }
            let next = h.apply(w);
            if !next[0].is_finite() {
                break;
            }
            w = next;
            step += 1;
        }
        weight * g
    }

    /// Backward Green function G^−, through the inverse normal form.
    pub fn green_minus(&self, z: Point, tol: f64) -> Result<f64> {
        let inv = self.inverse_normal_form()?;
        Ok(inv.map.green_plus(inv.conjugacy.apply(z), tol))
    }

    /// Log(1 + θ(z)) with θ = π_1∘f/x^d − 1, principal branch.
    pub fn log_one_plus_theta(&self, z: Point) -> C64 {
        let mut w = z;
        let mut total = C64::new(0.0, 0.0);
        let mut later: usize = self.degree();
        for h in &self.factors {
            later /= h.degree();
            let th = h.theta(w);
            total += (C64::new(1.0, 0.0) + th).ln() * later as f64;
            w = h.apply(w);
        }
        let wraps = (total.im / TAU).round();
        let mut l = total - C64::new(0.0, TAU * wraps);
        if l.im <= -PI {
            l.im += TAU;
        }
        l
    }

    pub fn theta(&self, z: Point) -> C64 {
        let l = self.log_one_plus_theta(z);
        if l.norm() < 1e-5 {
            l + l * l / 2.0 + l * l * l / 6.0 + l * l * l * l / 24.0
        } else {
            l.exp() - 1.0
        }
    }

    /// φ_f on the domain {|y| ≤ |x|, |x| ≥ 12dR_f}, requiring
    /// |a_i| ≤ R_f^{d_i−1}.
    pub fn bottcher_plus(&self, z: Point) -> Result<C64> {
        let rf = self.escape_rate(1e-14)?.r;
        for (i, h) in self.factors.iter().enumerate() {
            let bound = rf.powi(h.degree() as i32 - 1);
            if h.a.norm() > bound {
                return Err(HenonError::Uncertified(format!(
                    "|a_{}| = {} exceeds R_f^(d_i-1) = {}",
                    i + 1,
                    h.a.norm(),
                    bound
                )));
            }
        }
        let need = 12.0 * self.degree() as f64 * rf;
        if z[1].norm() > z[0].norm() || z[0].norm() < need {
            return Err(HenonError::Domain(format!(
                "point outside {{|y| <= |x|, |x| >= {need}}}"
            )));
        }
        self.bottcher_product(z, None)
    }

    /// x·∏_{k≥0}(1+θ(f^k z))^{1/d^{k+1}}; `depth` caps the factor count.
    pub fn bottcher_product(&self, z: Point, depth: Option<usize>) -> Result<C64> {
        let d = self.degree() as f64;
        let mut w = z;
        let mut weight = 1.0 / d;
        let mut sum = C64::new(0.0, 0.0);
        let mut k = 0;
        loop {
            if depth.map(|n| k >= n).unwrap_or(false) {
                break;
            }
            let l = self.log_one_plus_theta(w);
            let th = self.theta(w);
            if !(th.norm() < 1.0) {
                return Err(HenonError::Branch { step: k, theta_abs: th.norm() });
            }
            sum += l * weight;
            if 2.0 * weight * th.norm() < 1e-17 {
                break;
            }
            let next = self.evaluate(w);
            if !next[0].is_finite() || !next[1].is_finite() {
                if depth.is_none() {
                    break;
                }
                return Err(HenonError::Precision("orbit overflow in Böttcher product".into()));
            }
            w = next;
            weight /= d;
            k += 1;
        }
        Ok(z[0] * sum.exp())
    }
}
