#![allow(dead_code)]

use henon_dynamics::{MonicCenteredPolynomial, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Uniform point of the disk of radius `r`.
pub fn disk(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    let rho = r * rng.gen::<f64>().sqrt();
    C64::from_polar(rho, rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn random_poly(rng: &mut ChaCha8Rng, d: usize, r: f64) -> MonicCenteredPolynomial {
    MonicCenteredPolynomial::new(d, (0..d - 1).map(|_| disk(rng, r)).collect()).unwrap()
}

/// Roots of z^d + Σ low[j] z^j from companion-matrix eigenvalues.
pub fn companion_roots(low: &[C64]) -> Vec<C64> {
    let d = low.len();
    let mut m = DMatrix::<C64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = c(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -low[i];
    }
    m.schur().eigenvalues().expect("schur").iter().copied().collect()
}

/// Roots of p(x) = w.
pub fn preimages(p: &MonicCenteredPolynomial, w: C64) -> Vec<C64> {
    let d = p.degree();
    let mut low = vec![c(0.0, 0.0); d];
    low[..d - 1].copy_from_slice(p.coeffs());
    low[0] -= w;
    companion_roots(&low)
}

/// Ergodic average of log|p'| along a random backward orbit.
pub fn backward_lyapunov(p: &MonicCenteredPolynomial, steps: usize, rng: &mut ChaCha8Rng) -> f64 {
    let d = p.degree();
    let mut z = c(1.0, 0.5);
    let burn = 200;
    let mut sum = 0.0;
    for i in 0..steps + burn {
        let roots = preimages(p, z);
        z = roots[rng.gen_range(0..d)];
        if i >= burn {
            sum += p.derivative(z).norm().ln();
        }
    }
    sum / steps as f64
}

/// d^{-n} log|p^n(z)| by plain iteration.
pub fn green_by_iteration(p: &MonicCenteredPolynomial, z: C64, n: usize) -> f64 {
    let mut w = z;
    let mut scale = 1.0;
    for _ in 0..n {
        w = p.eval(w);
        scale /= p.degree() as f64;
        if w.norm() > 1e150 {
            break;
        }
    }
    scale * w.norm().ln()
}
