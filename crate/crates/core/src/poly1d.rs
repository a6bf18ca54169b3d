//! One-variable polynomial dynamics: Green function, escape rate,
//! Böttcher coordinate and the Lyapunov exponent of the equilibrium measure.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};
use crate::roots::{self, RootCluster};

/// p(z) = z^d + Σ_{j≤d−2} a_j z^j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct MonicCenteredPolynomial {
    degree: usize,
    coeffs: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    degree: usize,
    coeffs: Vec<C64>,
}

impl TryFrom<PolyRepr> for MonicCenteredPolynomial {
    type Error = HenonError;
    fn try_from(r: PolyRepr) -> Result<Self> {
        MonicCenteredPolynomial::new(r.degree, r.coeffs)
    }
}

impl From<MonicCenteredPolynomial> for PolyRepr {
    fn from(p: MonicCenteredPolynomial) -> Self {
        PolyRepr { degree: p.degree, coeffs: p.coeffs }
    }
}

/// Result of [`MonicCenteredPolynomial::max_escape_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeRate {
    pub m: f64,
    pub r: f64,
}

impl MonicCenteredPolynomial {
    pub fn new(degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        if degree < 2 {
            return Err(HenonError::InvalidInput(format!("degree {degree} < 2")));
        }
        if coeffs.len() != degree - 1 {
            return Err(HenonError::InvalidInput(format!(
                "degree {degree} needs {} coefficients, got {}",
                degree - 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(HenonError::InvalidInput("non-finite coefficient".into()));
        }
        Ok(MonicCenteredPolynomial { degree, coeffs })
    }

    pub fn monomial(degree: usize) -> Self {
        Self::new(degree, vec![C64::new(0.0, 0.0); degree - 1]).expect("degree ≥ 2")
    }

    /// z² + c.
    pub fn quadratic(c: C64) -> Self {
        MonicCenteredPolynomial { degree: 2, coeffs: vec![c] }
    }

    /// Builds from full ascending coefficients, checking monic and centered.
    pub fn from_full(full: &[C64]) -> Result<Self> {
        let d = full.len().saturating_sub(1);
        if d < 2 {
            return Err(HenonError::InvalidInput("degree < 2".into()));
        }
        let lead = full[d];
        let sub = full[d - 1];
        let scale = full.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if (lead - 1.0).norm() > 1e-9 || sub.norm() > 1e-9 * scale {
            return Err(HenonError::InvalidInput("polynomial is not monic and centered".into()));
        }
        Self::new(d, full[..d - 1].to_vec())
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients a_0 … a_{d−2}.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Ascending coefficients including the implicit z^{d−1} and z^d terms.
    pub fn full_coefficients(&self) -> Vec<C64> {
        let mut v = self.coeffs.clone();
        v.push(C64::new(0.0, 0.0));
        v.push(C64::new(1.0, 0.0));
        v
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut p = z;
        for c in self.coeffs.iter().rev() {
            p = p * z + c;
        }
        p
    }

    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = z;
        let mut dp = C64::new(1.0, 0.0);
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        self.eval_with_derivative(z).1
    }

    pub fn second_derivative(&self, z: C64) -> C64 {
        let full = self.full_coefficients();
        let mut acc = C64::new(0.0, 0.0);
        for j in (2..full.len()).rev() {
            acc = acc * z + full[j] * ((j * (j - 1)) as f64);
        }
        acc
    }

    /// θ(z) = p(z)/z^d − 1, evaluated without cancellation.
    pub fn theta(&self, z: C64) -> C64 {
        let u = z.inv();
        // Σ_j a_j u^{d−j} = u² Σ_j a_j u^{d−2−j}
        let mut h = C64::new(0.0, 0.0);
        for c in &self.coeffs {
            h = h * u + c;
        }
        h * u * u
    }

    /// A radius beyond which every orbit escapes monotonically: for
    /// |z| ≥ r one has |θ(z)| ≤ 1/2 and |p(z)| ≥ 2|z|.
    pub fn escape_radius(&self) -> f64 {
        let d = self.degree;
        let mut r = 10.0_f64.max(4.0_f64.powf(1.0 / (d as f64 - 1.0)));
        for (j, c) in self.coeffs.iter().enumerate() {
            let k = (d - j) as f64;
            r = r.max((2.0 * (d as f64 - 1.0) * c.norm()).powf(1.0 / k));
        }
        r
    }

    /// Critical points with multiplicity (d−1 entries).
    pub fn critical_points(&self) -> Result<Vec<C64>> {
        Ok(roots::flatten(&self.critical_clusters()?))
    }

    pub fn critical_clusters(&self) -> Result<Vec<RootCluster>> {
        let full = self.full_coefficients();
        let deriv: Vec<C64> = (1..full.len()).map(|j| full[j] * j as f64).collect();
        let radius = 1e-7 * (1.0 + 2.0 * self.escape_radius());
        roots::polynomial_roots(&deriv, radius)
    }

    /// G_p(z) with absolute error at most `tol`.
    pub fn green(&self, z: C64, tol: f64) -> f64 {
        let d = self.degree as f64;
        let r = self.escape_radius();
        let cutoff = cutoff_steps(self.degree, tol);
        let mut w = z;
        let mut scale = 1.0;
        let mut n = 0;
        while w.norm() < r {
            if n >= cutoff {
                return 0.0;
            }
            w = self.eval(w);
            scale /= d;
            n += 1;
        }
        scale * self.escaped_log(w)
    }

    /// lim d^{−n} log|p^n(w)| for w already past the escape radius.
    fn escaped_log(&self, mut w: C64) -> f64 {
        let d = self.degree as f64;
        let mut g = w.norm().ln();
        let mut weight = 1.0 / d;
        loop {
            let th = self.theta(w);
            g += weight * (C64::new(1.0, 0.0) + th).norm().ln();
            if weight * th.norm() < 1e-18 * g.abs().max(1.0) {
                break;
            }
            let next = w.powu(self.degree as u32) * (C64::new(1.0, 0.0) + th);
            if !next.is_finite() {
                break;
            }
            w = next;
            weight /= d;
        }
        g
    }

    /// M(p) = max G_p(c) over critical points, and R_p = e^M.
    pub fn max_escape_rate(&self, tol: f64) -> Result<EscapeRate> {
        let crit = self.critical_points()?;
        let m = crit.iter().map(|&c| self.green(c, tol)).fold(0.0, f64::max);
        Ok(EscapeRate { m, r: m.exp() })
    }

    /// Böttcher coordinate on {G_p > M(p)}.
    pub fn bottcher(&self, z: C64) -> Result<C64> {
        let tol = 1e-14;
        let g = self.green(z, tol);
        let m = self.max_escape_rate(tol)?.m;
        if g <= m {
            return Err(HenonError::Domain(format!(
                "G_p(z) = {g} does not exceed M(p) = {m}"
            )));
        }
        self.bottcher_product(z, None)
    }

    /// The truncated product z·∏(1+θ_k)^{1/d^{k+1}} with principal roots.
    /// Fails if some |θ_k| ≥ 1. `depth` fixes the number of factors.
    pub fn bottcher_product(&self, z: C64, depth: Option<usize>) -> Result<C64> {
        let d = self.degree as f64;
        let mut w = z;
        let mut weight = 1.0 / d;
        let mut log_sum = C64::new(0.0, 0.0);
        let mut k = 0;
        loop {
            if let Some(n) = depth {
                if k >= n {
                    break;
                }
            }
            let th = self.theta(w);
            if !(th.norm() < 1.0) {
                return Err(HenonError::Branch { step: k, theta_abs: th.norm() });
            }
            log_sum += (C64::new(1.0, 0.0) + th).ln() * weight;
            if depth.is_none() && 2.0 * weight * th.norm() < 1e-17 {
                break;
            }
            let next = w.powu(self.degree as u32) * (C64::new(1.0, 0.0) + th);
            if !next.is_finite() {
                if depth.is_none() {
                    break;
                }
                return Err(HenonError::Precision("orbit overflow in Böttcher product".into()));
            }
            w = next;
            weight /= d;
            k += 1;
        }
        Ok(z * log_sum.exp())
    }

    /// χ = log d + Σ G_p(c_i), critical points counted with multiplicity.
    pub fn mp_lyapunov(&self, tol: f64) -> Result<f64> {
        let crit = self.critical_points()?;
        let tol_each = tol / crit.len() as f64;
        Ok((self.degree as f64).ln() + crit.iter().map(|&c| self.green(c, tol_each)).sum::<f64>())
    }

    /// Returns z ↦ s·p(t·z), which must again be monic and centered.
    pub fn rescaled(&self, t: C64, s: C64) -> Result<Self> {
        let lead = s * t.powu(self.degree as u32);
        if (lead - 1.0).norm() > 1e-9 {
            return Err(HenonError::Domain(format!("rescaling breaks monicity (leading {lead})")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| s * t.powu(j as u32) * c)
            .collect();
        Self::new(self.degree, coeffs)
    }
}

/// Bounded-orbit cutoff ⌈log(1/tol)/log d⌉ + 200.
pub fn cutoff_steps(degree: usize, tol: f64) -> usize {
    let tol = tol.clamp(1e-300, 0.5);
    ((1.0 / tol).ln() / (degree as f64).ln()).ceil() as usize + 200
}

/// A general polynomial in ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        roots::horner(&self.coeffs, z)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.eval_with_derivative(z).0
    }

    pub fn scaled(p: &MonicCenteredPolynomial, s: C64) -> Self {
        Polynomial { coeffs: p.full_coefficients().into_iter().map(|c| c * s).collect() }
    }
}
