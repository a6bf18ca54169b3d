//! Aberth–Ehrlich simultaneous root finding with cluster detection.

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;

use crate::error::{HenonError, Result};

#[derive(Debug, Clone, Copy)]
pub struct AberthOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AberthOptions {
    fn default() -> Self {
        AberthOptions { max_iter: 600, tol: 4.0 * f64::EPSILON }
    }
}

/// Raw approximations plus the size of the last correction applied to each.
#[derive(Debug, Clone)]
pub struct Approximations {
    pub points: Vec<C64>,
    pub last_step: Vec<f64>,
    pub iterations: usize,
}

/// A group of approximations that resolve to one root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCluster {
    pub center: C64,
    pub multiplicity: usize,
}

/// Starting points on a circle, slightly rotated off the real axis.
pub fn circle_start(n: usize, radius: f64) -> Vec<C64> {
    (0..n)
        .map(|k| C64::from_polar(radius, TAU * (k as f64) / (n as f64) + 0.4))
        .collect()
}

/// Runs Aberth iteration for a function of known root count. `newton(z)`
/// must return the Newton correction q(z)/q'(z); non-finite values are
/// treated as "far from a root" and damped.
pub fn aberth<F>(start: Vec<C64>, newton: F, opts: AberthOptions) -> Approximations
where
    F: Fn(C64) -> C64,
{
    let n = start.len();
    let mut z = start;
    let mut frozen = vec![false; n];
    let mut last = vec![f64::INFINITY; n];
    let mut history: Vec<Vec<(C64, f64)>> = vec![Vec::new(); n];
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut active = 0;
        for i in 0..n {
            if frozen[i] {
                continue;
            }
            active += 1;
            let zi = z[i];
            let ratio = newton(zi);
            let w = if ratio.is_finite() {
                let mut s = C64::new(0.0, 0.0);
                for (j, zj) in z.iter().enumerate() {
                    if j != i {
                        let diff = zi - zj;
                        if diff.norm_sqr() > 0.0 {
                            s += diff.inv();
                        }
                    }
                }
                let denom = C64::new(1.0, 0.0) - ratio * s;
                let w = ratio / denom;
                if w.is_finite() {
                    w
                } else {
                    ratio
                }
            } else {
                zi * 0.5
            };
            let w = if w.is_finite() { w } else { C64::new(1e-3, 1e-3) * (1.0 + zi.norm()) };
            z[i] = zi - w;
            let step = w.norm();
            last[i] = step;
            let hist = &mut history[i];
            hist.push((z[i], step));
            if step <= opts.tol * (1.0 + z[i].norm()) {
                frozen[i] = true;
            } else if it >= 50 {
                // no net progress over the window: rounding noise
                let window = &hist[hist.len() - 11..];
                let moved = (window[10].0 - window[0].0).norm();
                let biggest = window.iter().map(|w| w.1).fold(0.0, f64::max);
                if moved < 2.0 * biggest {
                    frozen[i] = true;
                }
            }
        }
        if active == 0 {
            break;
        }
    }
    Approximations { points: z, last_step: last, iterations }
}

/// Single-linkage clustering of approximations. Two points are linked if
/// they are within `radius`, or within a few multiples of their own
/// uncertainty. Output order follows the first member of each cluster.
pub fn cluster(points: &[C64], uncertainty: &[f64], radius: f64) -> Vec<(C64, Vec<usize>)> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let ui = uncertainty.get(i).copied().unwrap_or(0.0);
            let uj = uncertainty.get(j).copied().unwrap_or(0.0);
            let link = radius.max(4.0 * (ui + uj));
            if (points[i] - points[j]).norm() <= link {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let c = members.iter().fold(C64::new(0.0, 0.0), |s, &k| s + points[k])
                / members.len() as f64;
            (c, members)
        })
        .collect()
}

/// Horner evaluation of an ascending coefficient list with its derivative.
pub fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Fujiwara bound on the root moduli of an ascending coefficient list.
pub fn root_bound(coeffs: &[C64]) -> f64 {
    let n = coeffs.len() - 1;
    let lead = coeffs[n].norm();
    let mut b: f64 = 0.0;
    for k in 1..=n {
        let c = coeffs[n - k].norm() / lead;
        let c = if k == n { c / 2.0 } else { c };
        b = b.max(c.powf(1.0 / k as f64));
    }
    2.0 * b
}

/// All roots (with multiplicity) of a polynomial given by ascending
/// coefficients with nonzero leading term. Clustered roots are replaced by
/// their centroid.
pub fn polynomial_roots(coeffs: &[C64], cluster_radius: f64) -> Result<Vec<RootCluster>> {
    let mut c: Vec<C64> = coeffs.to_vec();
    while c.len() > 1 && c.last().map(|v| v.norm() == 0.0).unwrap_or(false) {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(HenonError::InvalidInput("non-finite polynomial coefficient".into()));
    }
    if n == 1 {
        return Ok(vec![RootCluster { center: -c[0] / c[1], multiplicity: 1 }]);
    }
    let radius = 0.5 * root_bound(&c).max(1e-300);
    let approx = aberth(
        circle_start(n, radius),
        |z| {
            let (p, dp) = horner(&c, z);
            p / dp
        },
        AberthOptions::default(),
    );
    let groups = cluster(&approx.points, &approx.last_step, cluster_radius);
    let out: Vec<RootCluster> = groups
        .into_iter()
        .map(|(center, m)| RootCluster { center, multiplicity: m.len() })
        .collect();
    let residual = relative_residual(&c, &out);
    if !residual.is_finite() || residual > 1e-6 {
        return Err(HenonError::RootFinder { degree: n, residual });
    }
    Ok(out)
}

/// Largest per-root residual: the smaller of the backward error
/// |q(z)|/Σ|c_j||z|^j (taken to the power 1/m for an m-fold cluster) and
/// the relative Newton step.
pub fn relative_residual(coeffs: &[C64], roots: &[RootCluster]) -> f64 {
    roots
        .iter()
        .map(|r| {
            let (v, dv) = horner(coeffs, r.center);
            let scale: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, cj)| cj.norm() * r.center.norm().powi(j as i32))
                .sum();
            if v.norm() == 0.0 {
                return 0.0;
            }
            let bw = (v.norm() / scale.max(f64::MIN_POSITIVE)).powf(1.0 / r.multiplicity as f64);
            let newton = (v / dv).norm() / (1.0 + r.center.norm());
            if newton.is_finite() {
                bw.min(newton)
            } else {
                bw
            }
        })
        .fold(0.0, f64::max)
}

/// Expands clusters back to a flat multiset.
pub fn flatten(clusters: &[RootCluster]) -> Vec<C64> {
    clusters
        .iter()
        .flat_map(|c| std::iter::repeat(c.center).take(c.multiplicity))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quadratic_roots() {
        let r = polynomial_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 1e-7).unwrap();
        let mut v = flatten(&r);
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((v[0] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((v[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn multiple_root_at_zero() {
        let mut coeffs = vec![c(0.0, 0.0); 11];
        coeffs.push(c(12.0, 0.0));
        let r = polynomial_roots(&coeffs, 1e-7).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 11);
        assert!(r[0].center.norm() < 1e-10);
    }

    #[test]
    fn double_root_off_origin() {
        // (z-1)^2 (z+2)
        let coeffs = [c(2.0, 0.0), c(-3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let r = polynomial_roots(&coeffs, 1e-7).unwrap();
        assert_eq!(r.len(), 2);
        let double = r.iter().find(|x| x.multiplicity == 2).unwrap();
        assert!((double.center - c(1.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn wilkinson_like() {
        let mut coeffs = vec![c(1.0, 0.0)];
        for k in 1..=10 {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (j, v) in coeffs.iter().enumerate() {
                next[j + 1] += v;
                next[j] -= v * k as f64;
            }
            coeffs = next;
        }
        let r = polynomial_roots(&coeffs, 1e-9).unwrap();
        let mut v: Vec<f64> = flatten(&r).iter().map(|z| z.re).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, x) in v.iter().enumerate() {
            assert!((x - (k + 1) as f64).abs() < 1e-6);
        }
    }
}
