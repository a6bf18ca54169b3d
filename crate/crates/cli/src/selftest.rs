use henon_dynamics::bifurcation::{continue_orbit, quadratic_family_fixed_analysis, render_slice, ClassifierConfig, ContinuationConfig, ParamPath, PixelClass, QuadraticFamily, SliceConfig, Window};
use henon_dynamics::io::hexfloat;
use henon_dynamics::periodic::{self, record_from_points, PeriodicConfig};
use henon_dynamics::spectra;
use henon_dynamics::{HenonComposition, MonicCenteredPolynomial, C64};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckResult {
    match f() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run(seed: u64) -> Vec<CheckResult> {
    let pcfg = PeriodicConfig { seed, ..PeriodicConfig::default() };
    vec![
        check("green-functional-equation", || {
            let p = MonicCenteredPolynomial::new(3, vec![c(0.3, -0.2), c(-0.5, 0.1)]).map_err(e2s)?;
            let mut worst: f64 = 0.0;
            for z in [c(1.7, 0.4), c(-0.9, 2.2), c(3.0, -1.0)] {
                let lhs = p.green(p.eval(z), 1e-14);
                let rhs = 3.0 * p.green(z, 1e-14);
                worst = worst.max((lhs - rhs).abs());
            }
            if worst <= 1e-8 {
                Ok(format!("max deviation {worst:e}"))
            } else {
                Err(format!("max deviation {worst:e}"))
            }
        }),
        check("periodic-count", || {
            let f = HenonComposition::quadratic(c(0.3, 0.0), c(-1.0, 0.0)).map_err(e2s)?;
            for n in 1..=4 {
                let set = periodic::periodic_points(&f, n, &pcfg).map_err(e2s)?;
                if set.count_with_multiplicity() != 1 << n {
                    return Err(format!("n={n}: {} points", set.count_with_multiplicity()));
                }
            }
            Ok("2^n points for n ≤ 4".into())
        }),
        check("conjugacy-invariance", || {
            let p = MonicCenteredPolynomial::new(3, vec![c(0.2, 0.1), c(-0.4, 0.3)]).map_err(e2s)?;
            let f = HenonComposition::single(c(0.3, 0.2), p).map_err(e2s)?;
            let t1 = spectra::trace_spectrum(&f, 2, &pcfg).map_err(e2s)?;
            for alpha in f.unity_group() {
                let g = f.unity_action(alpha).map_err(e2s)?;
                let t2 = spectra::trace_spectrum(&g, 2, &pcfg).map_err(e2s)?;
                let cmp = spectra::spectra_equal(&t1, &t2, 1e-8);
                if !cmp.equal {
                    return Err(format!("alpha={alpha}: {:?}", cmp.reason));
                }
            }
            Ok("spectra equal across the unity group".into())
        }),
        check("quadratic-fixed-points", || {
            let a = c(0.5, 0.0);
            let r = quadratic_family_fixed_analysis(a);
            let prod = r.beta.eigenvalues[0] * r.beta.eigenvalues[1];
            if (prod + a).norm() < 1e-14 && (r.beta.point[0] - 0.5).norm() < 1e-15 {
                Ok(format!("beta eigenvalues {:?}", r.beta.eigenvalues))
            } else {
                Err(format!("eigenvalue product {prod}"))
            }
        }),
        check("continuation-crossing", || {
            let path = ParamPath::radial(1.0, 0.5, 1.5);
            let f0 = HenonComposition::quadratic(path.at(0.0), c(0.0, 0.0)).map_err(e2s)?;
            let orbit = record_from_points(&f0, vec![[c(0.0, 0.0); 2]], 1, 1);
            let track = continue_orbit(&QuadraticFamily::default(), path, &orbit, &ContinuationConfig::default()).map_err(e2s)?;
            let ok = track.unit_crossings() == 2 && track.events.iter().all(|e| (e.param.norm() - 1.0).abs() < 1e-6);
            if ok {
                Ok(format!("{} crossings", track.unit_crossings()))
            } else {
                Err(format!("events {:?}", track.events))
            }
        }),
        check("slice-escape-window", || {
            let f = HenonComposition::quadratic(c(0.05, 0.0), c(0.0, 0.0)).map_err(e2s)?;
            let cfg = SliceConfig {
                window: Window { x_min: 5.0, x_max: 7.0, y_min: 5.0, y_max: 7.0 },
                width: 16,
                height: 16,
                classifier: ClassifierConfig::default(),
            };
            let im = render_slice(&f, &cfg).map_err(e2s)?;
            if im.pixels.iter().all(|&p| p == PixelClass::Escape) {
                Ok("all pixels escape".into())
            } else {
                Err("non-escaping pixel outside the escape disk".into())
            }
        }),
        check("hexfloat-round-trip", || {
            for v in [0.1, -3.5e-300, 1e308, f64::MIN_POSITIVE / 4.0, std::f64::consts::PI] {
                if hexfloat::parse(&hexfloat::format(v)) != Some(v) {
                    return Err(format!("{v:e}"));
                }
            }
            Ok("exact".into())
        }),
    ]
}
