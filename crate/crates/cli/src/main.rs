use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use henon_dynamics::bifurcation::{
    self, attracting_cycle_scan, continue_orbit, quadratic_family_fixed_analysis, render_slice, ClassifierConfig, ContinuationConfig, ContinuationStatus, ParamPath, PixelClass, QuadraticFamily,
    ScanConfig, SliceConfig, Window,
};
use henon_dynamics::lyap::{self, BoundsConfig, FoldConfig, FoldOutcome};
use henon_dynamics::periodic::{self, record_from_points, PeriodicConfig};
use henon_dynamics::spectra::{self, IsospectralConfig, SearchMode};
use henon_dynamics::{HenonComposition, HenonError, PeriodicOrbitRecord, C64};
use serde::Serialize;

mod selftest;

#[derive(Parser, Debug)]
#[command(name = "henon", version, about = "Dynamics of complex Hénon maps")]
struct Cli {
    /// Worker threads; defaults to HENON_THREADS or the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// JSON output path, `-` for standard output.
    #[arg(long, global = true, default_value = "-")]
    out: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace spectrum up to a period.
    Spectrum {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_period: usize,
    },
    /// Grid search for maps sharing the spectrum of a base map.
    Isospectral(IsospectralArgs),
    /// χ⁺ estimated from saddles of one period.
    Lyapunov {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = 5)]
        period: usize,
    },
    /// Check an estimate of χ⁺ against the escape-rate bounds.
    VerifyBounds {
        #[arg(long)]
        map: PathBuf,
        /// Period used to estimate χ⁺ when --chi is absent.
        #[arg(long, default_value_t = 5)]
        period: usize,
        #[arg(long, allow_hyphen_values = true)]
        chi: Option<f64>,
        #[arg(long)]
        min_escape_rate: Option<f64>,
    },
    /// Fold certificate for a disconnected Julia set.
    Fold {
        #[arg(long)]
        map: PathBuf,
        /// Refuse to run when the escape-rate threshold is unmet.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 240)]
        grid: usize,
        #[arg(long)]
        min_escape_rate: Option<f64>,
    },
    /// Continue a periodic orbit of the quadratic family along a path.
    Continue(ContinueArgs),
    /// Attracting-cycle scan over rings of parameters.
    Scan(ScanArgs),
    /// Render the slice {y = 0} of the filled Julia set.
    Slice(SliceArgs),
    /// Fixed points of (a·y + x², x).
    AnalyzeQuadratic {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        a: C64,
    },
    /// Quick invariant checks.
    Selftest,
}

#[derive(Args, Debug)]
struct IsospectralArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::FixedJac)]
    mode: ModeArg,
    #[arg(long, default_value_t = 2)]
    max_period: usize,
    /// Radius of the coefficient box around the base map.
    #[arg(long = "box", alias = "radius", default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 50)]
    grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    FixedJac,
    FreeJac,
    HuguinP2,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::FixedJac => SearchMode::FixedJac,
            ModeArg::FreeJac => SearchMode::FreeJac,
            ModeArg::HuguinP2 => SearchMode::HuguinP2,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FamilyArg {
    Quadratic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PathKind {
    Radial,
    Circle,
}

#[derive(Args, Debug)]
struct ContinueArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Quadratic)]
    family: FamilyArg,
    /// Constant term c of (a·y + x² + c, x).
    #[arg(long, value_parser = parse_complex, default_value = "0,0", allow_hyphen_values = true)]
    c: C64,
    /// `alpha`, `beta`, or a JSON file with a periodic orbit record.
    #[arg(long, default_value = "alpha")]
    orbit: String,
    #[arg(long, value_enum, default_value_t = PathKind::Radial)]
    path: PathKind,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    angle: f64,
    #[arg(long, default_value_t = 0.5)]
    r0: f64,
    #[arg(long, default_value_t = 1.5)]
    r1: f64,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long, default_value_t = 0.01)]
    max_step: f64,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Quadratic)]
    family: FamilyArg,
    #[arg(long, value_parser = parse_complex, default_value = "0,0", allow_hyphen_values = true)]
    c: C64,
    /// Ring moduli, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.99")]
    modulus: Vec<f64>,
    #[arg(long, default_value_t = 500)]
    angles: usize,
    #[arg(long, default_value_t = 10_000)]
    inits: usize,
    /// Rotate the angle grid so that it contains the argument of this parameter.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    through: Option<C64>,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 12)]
    max_period: usize,
    #[arg(long)]
    first_hit_only: bool,
}

#[derive(Args, Debug)]
struct SliceArgs {
    /// Map JSON; when absent the quadratic family at --a is used.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    a: Option<C64>,
    /// x_min,x_max,y_min,y_max
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,2,-2,2")]
    window: Vec<f64>,
    #[arg(long, default_value_t = 400)]
    width: usize,
    #[arg(long, default_value_t = 400)]
    height: usize,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 12)]
    max_period: usize,
    /// PPM output file.
    #[arg(long)]
    image: PathBuf,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re,im`, got {s:?}")),
    }
}

/// Failure carrying the exit code.
enum Failure {
    Incomplete(anyhow::Error),
    Error(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<HenonError>() {
            Some(HenonError::Uncertified(_)) => Failure::Incomplete(e),
            _ => Failure::Error(e),
        }
    }
}

impl From<HenonError> for Failure {
    fn from(e: HenonError) -> Self {
        anyhow::Error::from(e).into()
    }
}

/// Exit status of a successful run.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Ok,
    Incomplete,
}

fn read_map(path: &Path) -> anyhow::Result<HenonComposition> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e))
}

fn read_orbit(path: &Path) -> anyhow::Result<PeriodicOrbitRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e))
}

fn emit<T: Serialize>(out: &str, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if out == "-" {
        print!("{text}");
    } else {
        std::fs::write(out, text).with_context(|| format!("writing {out}"))?;
    }
    Ok(())
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Ok
    } else {
        Outcome::Incomplete
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let pcfg = PeriodicConfig { seed: cli.seed, ..PeriodicConfig::default() };
    let out = cli.out.as_str();
    match &cli.command {
        Command::Spectrum { map, max_period } => {
            let f = read_map(map)?;
            let table = spectra::trace_spectrum(&f, *max_period, &pcfg)?;
            emit(out, &table)?;
            Ok(outcome(table.is_complete()))
        }
        Command::Isospectral(a) => {
            let f = read_map(&a.base)?;
            let cfg = IsospectralConfig { mode: a.mode.into(), max_period: a.max_period, radius: a.radius, grid: a.grid, tol: a.tol, periodic: pcfg, ..IsospectralConfig::default() };
            let res = spectra::isospectral_search(&f, &cfg)?;
            emit(out, &res)?;
            Ok(outcome(!res.partial))
        }
        Command::Lyapunov { map, period } => {
            let f = read_map(map)?;
            let rep = lyap::chi_plus_periodic(&f, *period, &pcfg)?;
            emit(out, &rep)?;
            Ok(outcome(rep.status == periodic::SolveStatus::Complete))
        }
        Command::VerifyBounds { map, period, chi, min_escape_rate } => {
            let f = read_map(map)?;
            let chi = match chi {
                Some(c) => *c,
                None => lyap::chi_plus_periodic(&f, *period, &pcfg)?.chi_plus_estimate,
            };
            let rep = lyap::verify_lyapunov_bounds(&f, chi, &BoundsConfig { min_escape_rate: *min_escape_rate, ..BoundsConfig::default() })?;
            emit(out, &rep)?;
            match rep.verdict() {
                Some(true) => Ok(Outcome::Ok),
                None => Ok(Outcome::Incomplete),
                Some(false) => Err(Failure::Error(anyhow!("estimate {chi} violates an applicable bound"))),
            }
        }
        Command::Fold { map, strict, grid, min_escape_rate } => {
            let f = read_map(map)?;
            let res = lyap::fold_certificate(&f, &FoldConfig { strict: *strict, grid: *grid, min_escape_rate: *min_escape_rate, ..FoldConfig::default() })?;
            emit(out, &res)?;
            Ok(match &res {
                FoldOutcome::Certificate(c) => outcome(c.certified),
                FoldOutcome::NotSolenoidal { .. } => Outcome::Ok,
                FoldOutcome::HypothesesUnmet { .. } | FoldOutcome::Inconclusive { .. } => Outcome::Incomplete,
            })
        }
        Command::Continue(a) => {
            let fam = QuadraticFamily { c: a.c };
            let path = match a.path {
                PathKind::Radial => ParamPath::radial(a.angle, a.r0, a.r1),
                PathKind::Circle => ParamPath::circle(a.radius, a.angle),
            };
            let a0 = path.at(0.0);
            let f0 = bifurcation::Family::map(&fam, a0)?;
            let orbit0 = match a.orbit.as_str() {
                "alpha" | "beta" => {
                    if a.c != C64::new(0.0, 0.0) {
                        return Err(Failure::Error(anyhow!("named orbits need c = 0")));
                    }
                    let rep = quadratic_family_fixed_analysis(a0);
                    let z = if a.orbit == "alpha" { rep.alpha.point } else { rep.beta.point };
                    record_from_points(&f0, vec![z], 1, 1)
                }
                file => read_orbit(Path::new(file))?,
            };
            let cfg = ContinuationConfig { max_step: a.max_step, ..ContinuationConfig::default() };
            let track = continue_orbit(&fam, path, &orbit0, &cfg)?;
            emit(out, &track)?;
            Ok(outcome(track.status == ContinuationStatus::Completed))
        }
        Command::Scan(a) => {
            let fam = QuadraticFamily { c: a.c };
            let cfg = ScanConfig {
                moduli: a.modulus.clone(),
                angles: a.angles,
                angle_offset: a.through.map_or(0.0, |p| ScanConfig::offset_through(p, a.angles)),
                inits: a.inits,
                classifier: ClassifierConfig { max_iter: a.max_iter, max_period: a.max_period, ..ClassifierConfig::default() },
                first_hit_only: a.first_hit_only,
                ..ScanConfig::default()
            };
            let rep = attracting_cycle_scan(&fam, &cfg)?;
            emit(out, &rep)?;
            Ok(Outcome::Ok)
        }
        Command::Slice(a) => {
            let f = match (&a.map, a.a) {
                (Some(p), None) => read_map(p)?,
                (None, Some(param)) => HenonComposition::quadratic(param, C64::new(0.0, 0.0))?,
                _ => return Err(Failure::Error(anyhow!("give exactly one of --map and --a"))),
            };
            let [x_min, x_max, y_min, y_max] = a.window[..] else {
                return Err(Failure::Error(anyhow!("--window needs four numbers")));
            };
            let cfg = SliceConfig {
                window: Window { x_min, x_max, y_min, y_max },
                width: a.width,
                height: a.height,
                classifier: ClassifierConfig { max_iter: a.max_iter, max_period: a.max_period, ..ClassifierConfig::default() },
            };
            let im = render_slice(&f, &cfg)?;
            im.write_ppm(&a.image).with_context(|| format!("writing {}", a.image.display()))?;
            let summary = SliceSummary {
                image: a.image.display().to_string(),
                width: im.width,
                height: im.height,
                window: im.window,
                escape_fraction: im.fraction(PixelClass::Escape),
                undecided_fraction: im.fraction(PixelClass::Undecided),
                basin_fractions: (0..im.registry.len()).map(|k| im.fraction(PixelClass::Basin(k as u32))).collect(),
                registry: im.registry.clone(),
                origin_basin: im.origin_basin,
            };
            emit(out, &summary)?;
            Ok(outcome(summary.undecided_fraction == 0.0))
        }
        Command::AnalyzeQuadratic { a } => {
            emit(out, &quadratic_family_fixed_analysis(*a))?;
            Ok(Outcome::Ok)
        }
        Command::Selftest => {
            let results = selftest::run(cli.seed);
            for r in &results {
                eprintln!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.name);
            }
            emit(out, &results)?;
            if results.iter().all(|r| r.passed) {
                Ok(Outcome::Ok)
            } else {
                Err(Failure::Error(anyhow!("selftest failed")))
            }
        }
    }
}

#[derive(Serialize)]
struct SliceSummary {
    image: String,
    width: usize,
    height: usize,
    window: Window,
    escape_fraction: f64,
    undecided_fraction: f64,
    basin_fractions: Vec<f64>,
    registry: Vec<bifurcation::AttractingCycle>,
    origin_basin: bool,
}

fn init_threads(cli: &Cli) -> anyhow::Result<()> {
    let n = match cli.threads {
        Some(n) => Some(n),
        None => match std::env::var("HENON_THREADS") {
            Ok(v) => Some(v.parse().with_context(|| format!("HENON_THREADS={v:?}"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(&cli) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Incomplete) => ExitCode::from(2),
        Err(Failure::Incomplete(e)) => {
            eprintln!("incomplete: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
