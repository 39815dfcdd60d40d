//! Batch experiment runner. Every suite from the core library is exposed as
//! a subcommand reading an optional JSON config (flags override file values)
//! and writing CSV tables plus a JSON report into the output directory.
//!
//! Exit codes: 0 all asserted invariants hold, 1 an invariant failed (the
//! report is still written), 2 the configuration was invalid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use tfloc_core::gamma::{product_inequality_scan, tau_spectrum};
use tfloc_core::lifting::{
    iso_condition, lifting_ratio, normal_solve, precond_solve, test_family,
};
use tfloc_core::operators::{
    canonical_diagonal, envelope_check, localization_matrix, tf_kernel,
};
use tfloc_core::phase_space::PhaseGrid;
use tfloc_core::{
    bargmann, CoreError, GaborSystem, HermiteBasis, HermiteCoeffs,
    RadialWeight, WeightSpec, VERSION,
};

#[derive(Parser)]
#[command(name = "tfloc", version, about = "Time-frequency localization experiment runner")]
struct Cli {
    /// JSON config file; command-line flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Weight shorthand `family:p1,p2` (polynomial, subexp, loglin,
    /// exponential, constant)
    #[arg(long, global = true)]
    weight: Option<String>,

    /// Hermite truncation degree
    #[arg(long = "N", global = true)]
    n: Option<usize>,

    /// Lattice time step
    #[arg(long, global = true)]
    a: Option<f64>,

    /// Lattice frequency step
    #[arg(long, global = true)]
    b: Option<f64>,

    /// Inner norm exponent
    #[arg(long, global = true)]
    p: Option<f64>,

    /// Outer norm exponent
    #[arg(long, global = true)]
    q: Option<f64>,

    /// First weight exponent
    #[arg(long, global = true)]
    s: Option<f64>,

    /// Second weight exponent
    #[arg(long, global = true)]
    t: Option<f64>,

    /// Pass/fail tolerance override
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// RNG seed for generated test families
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV/JSON reports
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Weighted spectral values and their reciprocal-exponent products
    Tau,
    /// Three-factor product scans and their sup/inf plateau
    Inequalities,
    /// Diagonality of the radial localization matrix in the Hermite basis
    Eigencheck,
    /// Two-norm equivalence ratios of the canonical diagonal map
    Iso,
    /// Norm-lifting ratios of a localization operator on a test family
    Lift,
    /// Preconditioned vs plain Krylov inversion of a Gabor multiplier
    Invert,
    /// Off-diagonal kernel envelope and its convolution domination
    Kernel,
    /// Toeplitz intertwining residuals on entire-function expansions
    Bargmann,
    /// Fast deterministic run of every suite's core invariant
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Tau => "tau",
            Command::Inequalities => "inequalities",
            Command::Eigencheck => "eigencheck",
            Command::Iso => "iso",
            Command::Lift => "lift",
            Command::Invert => "invert",
            Command::Kernel => "kernel",
            Command::Bargmann => "bargmann",
            Command::Selftest => "selftest",
        }
    }
}

/// On-disk config. Every field is optional; flags win over file values and
/// unknown fields are rejected outright.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    weight: Option<WeightSpec>,
    n: Option<usize>,
    a: Option<f64>,
    b: Option<f64>,
    p: Option<f64>,
    q: Option<f64>,
    s: Option<f64>,
    t: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

/// Fully resolved settings, echoed verbatim into every JSON report so a run
/// can be reproduced from its own output.
#[derive(Debug, Clone, Serialize)]
struct Settings {
    version: String,
    subcommand: String,
    weight: WeightSpec,
    n: usize,
    a: f64,
    b: f64,
    p: f64,
    q: f64,
    s: f64,
    t: f64,
    tol: f64,
    seed: u64,
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Invariant(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            // refusals and bad parameters are configuration problems, not
            // failed invariants
            CoreError::GrsViolation(_)
            | CoreError::InvalidParameter(_)
            | CoreError::NonRadialWeight(_) => CliError::Config(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o failure: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn resolve(cli: &Cli) -> CliResult<Settings> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!("invalid config {}: {e}", path.display()))
            })?
        }
        None => FileConfig::default(),
    };
    let weight = match &cli.weight {
        Some(text) => WeightSpec::parse_shorthand(text)
            .map_err(|e| CliError::Config(e.to_string()))?,
        None => file
            .weight
            .clone()
            .unwrap_or_else(|| WeightSpec::new("polynomial", &[2.0], 1)),
    };
    // weights must be constructible up front so bad params exit with 2
    RadialWeight::from_spec(&weight).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(Settings {
        version: VERSION.to_string(),
        subcommand: cli.command.name().to_string(),
        weight,
        n: cli.n.or(file.n).unwrap_or(64),
        a: cli.a.or(file.a).unwrap_or(0.5),
        b: cli.b.or(file.b).unwrap_or(0.5),
        p: cli.p.or(file.p).unwrap_or(2.0),
        q: cli.q.or(file.q).unwrap_or(2.0),
        s: cli.s.or(file.s).unwrap_or(1.0),
        t: cli.t.or(file.t).unwrap_or(-1.0),
        tol: cli.tol.or(file.tol).unwrap_or(1e-6),
        seed: cli.seed.or(file.seed).unwrap_or(7),
        out: cli.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_report<T: Serialize>(settings: &Settings, name: &str, body: &T) -> CliResult<()> {
    #[derive(Serialize)]
    struct Report<'a, T> {
        config: &'a Settings,
        report: &'a T,
    }
    let text = serde_json::to_string_pretty(&Report { config: settings, report: body })
        .map_err(|e| CliError::Config(format!("serialization failure: {e}")))?;
    write_file(&settings.out, name, &(text + "\n"))
}

/// Fixed-width scientific notation keeps CSV output byte-identical across
/// runs with the same config and seed.
fn num(v: f64) -> String {
    format!("{v:.12e}")
}

struct CheckList {
    lines: Vec<String>,
    all_pass: bool,
}

impl CheckList {
    fn new() -> Self {
        Self { lines: Vec::new(), all_pass: true }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        let tag = if pass { "pass" } else { "FAIL" };
        let line = format!("[{tag}] {name}: {detail}");
        println!("{line}");
        self.lines.push(line);
        self.all_pass &= pass;
    }
}

fn weight_of(settings: &Settings) -> CliResult<RadialWeight> {
    RadialWeight::from_spec(&settings.weight).map_err(CliError::from)
}

fn run_tau(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let theta = weight_of(settings)?;
    let plus = tau_spectrum(&theta, settings.s, settings.n)?;
    let minus = tau_spectrum(&theta, -settings.s, settings.n)?;
    let mut csv = String::from("alpha,s,tau,tau_neg,product,est_error\n");
    let mut min_product = f64::INFINITY;
    for n in 0..=settings.n {
        let (tp, tm) = (plus.values[n], minus.values[n]);
        min_product = min_product.min(tp * tm);
        let _ = writeln!(
            csv,
            "{n},{},{},{},{},{}",
            num(settings.s),
            num(tp),
            num(tm),
            num(tp * tm),
            num(plus.max_rel_error.max(minus.max_rel_error))
        );
    }
    write_file(&settings.out, "tau.csv", &csv)?;
    #[derive(Serialize)]
    struct TauReport {
        min_product: f64,
        max_rel_error: f64,
    }
    let body = TauReport {
        min_product,
        max_rel_error: plus.max_rel_error.max(minus.max_rel_error),
    };
    write_report(settings, "tau.json", &body)?;
    checks.check(
        "reciprocal-exponent products stay >= 1",
        min_product >= 1.0 - 1e-9,
        format!("min product {min_product:.12}"),
    );
    Ok(())
}

fn run_inequalities(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let theta = weight_of(settings)?;
    let scan = product_inequality_scan(&theta, settings.s, settings.t, settings.n)?;
    let mut csv = String::from("alpha,gamma,running_sup,running_inf\n");
    for n in 0..=settings.n {
        let _ = writeln!(
            csv,
            "{n},{},{},{}",
            num(scan.gammas[n]),
            num(scan.running_sup[n]),
            num(scan.running_inf[n])
        );
    }
    write_file(&settings.out, "inequalities.csv", &csv)?;
    write_report(settings, "inequalities.json", &scan)?;
    checks.check(
        "three-factor products bounded two-sidedly",
        scan.inf > 0.0 && scan.sup.is_finite(),
        format!("inf {:.6e}, sup {:.6e}", scan.inf, scan.sup),
    );
    if settings.n >= 40 {
        // plateau: the running sup must stop moving over the last fifth
        let tail_start = settings.n - settings.n / 5;
        let drift = (scan.sup - scan.running_sup[tail_start]) / scan.sup;
        checks.check(
            "running sup has plateaued",
            drift < 1e-3,
            format!("relative drift {drift:.3e} over the last fifth"),
        );
    }
    Ok(())
}

fn run_eigencheck(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let m = weight_of(settings)?;
    let op = localization_matrix(&m, settings.n)?;
    let diag = canonical_diagonal(&m, settings.n)?;
    let mut csv = String::from("alpha,matrix_diag,spectral,rel_error\n");
    let mut worst_rel = 0.0_f64;
    for n in 0..=settings.n {
        let md = op.matrix[(n, n)].re;
        let sd = diag.eigenvalues()[n];
        let rel = (md - sd).abs() / sd;
        worst_rel = worst_rel.max(rel);
        let _ = writeln!(csv, "{n},{},{},{}", num(md), num(sd), num(rel));
    }
    write_file(&settings.out, "eigencheck.csv", &csv)?;
    let offdiag = op.offdiag_ratio();
    #[derive(Serialize)]
    struct EigenReport {
        offdiag_ratio: f64,
        worst_diag_rel_error: f64,
    }
    write_report(
        settings,
        "eigencheck.json",
        &EigenReport { offdiag_ratio: offdiag, worst_diag_rel_error: worst_rel },
    )?;
    checks.check(
        "matrix is numerically diagonal",
        offdiag < settings.tol,
        format!("off-diagonal ratio {offdiag:.3e}"),
    );
    checks.check(
        "diagonal matches the spectral route",
        worst_rel < settings.tol,
        format!("worst relative error {worst_rel:.3e}"),
    );
    Ok(())
}

fn run_iso(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let theta = weight_of(settings)?;
    let report = iso_condition(&theta, settings.n)?;
    let mut csv = String::from("alpha,rho\n");
    for (n, r) in report.rho.iter().enumerate() {
        let _ = writeln!(csv, "{n},{}", num(*r));
    }
    write_file(&settings.out, "iso.csv", &csv)?;
    write_report(settings, "iso.json", &report)?;
    let in_range = report.rho.iter().all(|&r| r > 0.0 && r <= 1.0 + 1e-12);
    checks.check(
        "rho values lie in (0, 1]",
        in_range,
        format!("inf {:.6}, sup {:.6}", report.inf, report.sup),
    );
    let sup_drift = (report.sup - report.half_sup).abs() / report.sup;
    let inf_drift = (report.inf - report.half_inf).abs() / report.inf;
    checks.check(
        "extremes stable under doubling the cutoff",
        sup_drift < 0.01 && inf_drift < 0.01,
        format!("sup drift {sup_drift:.3e}, inf drift {inf_drift:.3e}"),
    );
    Ok(())
}

fn run_lift(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let m = weight_of(settings)?;
    let mu = m.pow(2.0);
    let pg = PhaseGrid::default_grid();
    let stats = lifting_ratio(&m, &mu, settings.p, settings.n, &pg, 30, settings.seed)?;
    let mut csv = String::from("index,ratio\n");
    for (i, r) in stats.ratios.iter().enumerate() {
        let _ = writeln!(csv, "{i},{}", num(*r));
    }
    write_file(&settings.out, "lift.csv", &csv)?;
    write_report(settings, "lift.json", &stats)?;
    checks.check(
        "norm ratios equivalent over the test family",
        stats.min > 0.0 && stats.spread.is_finite(),
        format!("min {:.6e}, max {:.6e}, spread {:.4}", stats.min, stats.max, stats.spread),
    );
    Ok(())
}

fn run_invert(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let m = weight_of(settings)?;
    let system = GaborSystem::gaussian(settings.a, settings.b)?;
    let basis = HermiteBasis::new(8, system.grid);
    let target = basis.function(2);
    let b = tfloc_core::operators::gabor_multiplier_apply(&system, &m, &target)?;
    let tol = settings.tol.min(1e-8);
    let (xp, tp) = precond_solve(&system, &m, &b, tol)?;
    let (_, tn) = normal_solve(&system, &m, &b, tol)?;
    let mut csv = String::from("iter,residual_preconditioned,residual_normal\n");
    for i in 0..tp.residuals.len().max(tn.residuals.len()) {
        let rp = tp.residuals.get(i).map_or(String::new(), |r| num(*r));
        let rn = tn.residuals.get(i).map_or(String::new(), |r| num(*r));
        let _ = writeln!(csv, "{i},{rp},{rn}");
    }
    write_file(&settings.out, "invert.csv", &csv)?;
    let recovery = xp.sub(&target).norm_l2() / target.norm_l2();
    #[derive(Serialize)]
    struct InvertReport {
        preconditioned: tfloc_core::SolveTrace,
        normal: tfloc_core::SolveTrace,
        recovery_rel_error: f64,
    }
    write_report(
        settings,
        "invert.json",
        &InvertReport {
            preconditioned: tp.clone(),
            normal: tn.clone(),
            recovery_rel_error: recovery,
        },
    )?;
    checks.check(
        "preconditioned iteration beats the normal equations",
        tp.converged && tn.converged && tp.iterations < tn.iterations,
        format!("{} vs {} iterations to {tol:.1e}", tp.iterations, tn.iterations),
    );
    checks.check(
        "known input recovered",
        recovery < 1e-7,
        format!("relative error {recovery:.3e}"),
    );
    Ok(())
}

fn run_kernel(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let m = weight_of(settings)?;
    let v = m.envelope().ok_or_else(|| {
        CliError::Config(format!(
            "no moderateness envelope available for {}",
            m.describe()
        ))
    })?;
    let n = settings.n.clamp(40, 64);
    let op = localization_matrix(&m, n)?;
    let identity =
        tfloc_core::DenseOperator::identity(n + 1, "identity reference");
    let kernel = tf_kernel(&op, 1.5, 0.25)?;
    let h0 = tf_kernel(&identity, 1.5, 0.25)?;
    let report = envelope_check(&kernel, &h0, &v)?;
    let mut csv = String::from("dx,dxi,envelope\n");
    let w = kernel.offsets_per_axis();
    for i in 0..w {
        for j in 0..w {
            let _ = writeln!(
                csv,
                "{},{},{}",
                num(kernel.offset_value(i)),
                num(kernel.offset_value(j)),
                num(kernel.envelope_at(i, j))
            );
        }
    }
    write_file(&settings.out, "kernel.csv", &csv)?;
    write_report(settings, "kernel.json", &report)?;
    checks.check(
        "envelope dominated by the Gaussian convolution bound",
        report.dominated,
        format!("near ratio {:.4}, far ratio {:.4}", report.ratio_near, report.ratio_far),
    );
    checks.check(
        "weighted envelope tails decrease",
        report.tail_decreasing,
        format!("outermost/peak ring ratio {:.3e}", report.tail_ratio),
    );
    Ok(())
}

fn run_bargmann(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let m = weight_of(settings)?;
    let mut f = HermiteCoeffs::zeros(settings.n.min(32));
    f.coeffs[0] = Complex64::new(1.0, 0.0);
    f.coeffs[1] = Complex64::new(1.0, 0.0);
    let points: Vec<Complex64> = {
        let mut out = Vec::new();
        for &r in &[0.0, 0.75, 1.5, 2.25, 3.0] {
            for k in 0..8 {
                let phi = k as f64 * std::f64::consts::FRAC_PI_4;
                out.push(Complex64::from_polar(r, phi));
            }
        }
        out
    };
    let residual = bargmann::intertwine_check(&m, &f, &points)?;
    let fock = bargmann::FockFunction::from_hermite(&f);
    let mut csv = String::from("re_z,im_z,re_f,im_f\n");
    for &z in &points {
        let v = fock.eval(z);
        let _ = writeln!(csv, "{},{},{},{}", num(z.re), num(z.im), num(v.re), num(v.im));
    }
    write_file(&settings.out, "bargmann.csv", &csv)?;
    #[derive(Serialize)]
    struct BargmannReport {
        intertwine_residual: f64,
        probe_points: usize,
    }
    write_report(
        settings,
        "bargmann.json",
        &BargmannReport { intertwine_residual: residual, probe_points: points.len() },
    )?;
    checks.check(
        "diagonal and Toeplitz actions intertwine",
        residual < settings.tol,
        format!("max relative residual {residual:.3e}"),
    );
    Ok(())
}

/// A quick pass through every suite with small fixed parameters. All inputs
/// are pinned, so two runs must produce byte-identical reports.
fn run_selftest(settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    let poly = RadialWeight::polynomial(1, 1.0);
    let subexp = RadialWeight::subexponential(1, 1.0, 0.5)?;

    let plus = tau_spectrum(&subexp, 1.0, 60)?;
    let minus = tau_spectrum(&subexp, -1.0, 60)?;
    let min_product = plus
        .values
        .iter()
        .zip(&minus.values)
        .map(|(a, b)| a * b)
        .fold(f64::INFINITY, f64::min);
    checks.check(
        "spectral products stay >= 1",
        min_product >= 1.0 - 1e-9,
        format!("min product {min_product:.12}"),
    );

    let scan = product_inequality_scan(&subexp, 1.0, -1.0, 60)?;
    checks.check(
        "three-factor scan bounded",
        scan.inf > 0.0 && scan.sup.is_finite(),
        format!("inf {:.6}, sup {:.6}", scan.inf, scan.sup),
    );

    let op = localization_matrix(&subexp, 24)?;
    let offdiag = op.offdiag_ratio();
    checks.check(
        "localization matrix diagonal",
        offdiag < 1e-6,
        format!("off-diagonal ratio {offdiag:.3e}"),
    );

    let iso = iso_condition(&poly, 80)?;
    checks.check(
        "diagonal map two-sided bounds",
        iso.inf > 0.0 && iso.sup <= 1.0 + 1e-12,
        format!("inf {:.6}, sup {:.6}", iso.inf, iso.sup),
    );

    let system = GaborSystem::gaussian(0.5, 0.5)?;
    let basis = HermiteBasis::new(6, system.grid);
    let f = basis.function(1);
    let dual = system.dual_window()?;
    let rec = system.reconstruct(&f, &dual)?;
    let rec_err = rec.sub(&f).norm_l2() / f.norm_l2();
    checks.check(
        "frame reconstruction",
        rec_err < 1e-8,
        format!("relative error {rec_err:.3e}"),
    );

    let mut c = HermiteCoeffs::zeros(16);
    c.coeffs[0] = Complex64::new(1.0, 0.0);
    c.coeffs[1] = Complex64::new(1.0, 0.0);
    let points: Vec<Complex64> =
        (0..12).map(|k| Complex64::from_polar(0.25 * k as f64, 0.7 * k as f64)).collect();
    let residual = bargmann::intertwine_check(&poly, &c, &points)?;
    checks.check(
        "Toeplitz intertwining",
        residual < 1e-6,
        format!("max residual {residual:.3e}"),
    );

    let family = test_family(16, 3, settings.seed);
    checks.check(
        "test family normalized",
        family.iter().all(|c| (c.norm_l2() - 1.0).abs() < 1e-12),
        format!("{} functions", family.len()),
    );

    #[derive(Serialize)]
    struct SelftestReport<'a> {
        lines: &'a [String],
        all_pass: bool,
    }
    write_report(
        settings,
        "selftest.json",
        &SelftestReport { lines: &checks.lines, all_pass: checks.all_pass },
    )?;
    Ok(())
}

fn dispatch(cli: &Cli, settings: &Settings, checks: &mut CheckList) -> CliResult<()> {
    match cli.command {
        Command::Tau => run_tau(settings, checks),
        Command::Inequalities => run_inequalities(settings, checks),
        Command::Eigencheck => run_eigencheck(settings, checks),
        Command::Iso => run_iso(settings, checks),
        Command::Lift => run_lift(settings, checks),
        Command::Invert => run_invert(settings, checks),
        Command::Kernel => run_kernel(settings, checks),
        Command::Bargmann => run_bargmann(settings, checks),
        Command::Selftest => run_selftest(settings, checks),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match resolve(&cli) {
        Ok(s) => s,
        Err(CliError::Config(msg)) | Err(CliError::Invariant(msg)) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    let mut checks = CheckList::new();
    match dispatch(&cli, &settings, &mut checks) {
        Ok(()) => {
            if checks.all_pass {
                println!("{}: all checks passed", settings.subcommand);
                ExitCode::SUCCESS
            } else {
                println!("{}: checks FAILED", settings.subcommand);
                ExitCode::from(1)
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Invariant(msg)) => {
            eprintln!("invariant failure: {msg}");
            ExitCode::from(1)
        }
    }
}
