//! `bicens`: fit, certify, smooth and simulate bivariate censored-data estimators.
//!
//! Exit status is 0 on success, 1 when a fit does not converge or a certificate fails,
//! and 2 for unusable input (unreadable files, malformed CSV, bad flag values).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use bicens::geometry::canonical_to_csv;
use bicens::npmle::random_sieve_with;
use bicens::plugin::{build_plugin_grid_on, plugin_lattice};
use bicens::simstudy::replication_sample;
use bicens::*;

/// Above these sizes `simulate` needs `--long-run`.
const DESK_MAX_N: usize = 2000;
const DESK_MAX_REPS: usize = 2000;

#[derive(Parser, Debug)]
#[command(
    name = "bicens",
    version,
    about = "Nonparametric estimators for bivariate current-status and interval-censored data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the NPMLE over the canonical rectangles (or a random sieve) and certify it.
    FitMle(FitArgs),
    /// Evaluate the smoothed MLE or the plug-in estimator on a grid.
    Eval(EvalArgs),
    /// Check the Fenchel optimality conditions for a masses file.
    Check(CheckArgs),
    /// Run the Monte Carlo comparison of the three estimators.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct DataSource {
    /// Rectangle CSV `L1,R1,L2,R2,freq`.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Current-status CSV `t,u,delta1,delta2`.
    #[arg(long, value_name = "PATH")]
    cs_input: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataSource,
    /// Masses CSV `x,y,mass` (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Fit report as JSON.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Also write the canonical rectangles.
    #[arg(long, value_name = "PATH")]
    canonical: Option<PathBuf>,
    /// Use a random sieve of ⌊n^{2/3}⌋ points in the unit square as candidates.
    #[arg(long, value_enum, value_name = "DESIGN")]
    sieve: Option<SieveArg>,
    /// Seed of the sieve permutation.
    #[arg(long, default_value_t = 1, requires = "sieve")]
    seed: u64,
    /// Tolerance of the Fenchel certificate.
    #[arg(long, default_value_t = 1e-8, value_parser = positive_f64)]
    tol: f64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    max_iter: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EstimatorArg {
    Smle,
    Plugin,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KernelArg {
    Second,
    Fourth,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SieveArg {
    Permutation,
    Lattice,
}

impl From<SieveArg> for SieveDesign {
    fn from(s: SieveArg) -> Self {
        match s {
            SieveArg::Permutation => SieveDesign::Permutation,
            SieveArg::Lattice => SieveDesign::Lattice,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Bandwidth {
    Auto,
    Fixed(f64),
}

impl Bandwidth {
    fn resolve(self, n: u64) -> f64 {
        match self {
            Bandwidth::Auto => (n as f64).powf(-1.0 / 6.0),
            Bandwidth::Fixed(h) => h,
        }
    }

    fn rule(self) -> simstudy::BandwidthRule {
        match self {
            Bandwidth::Auto => simstudy::BandwidthRule::Rate,
            Bandwidth::Fixed(h) => simstudy::BandwidthRule::Fixed(h),
        }
    }
}

fn parse_bandwidth(s: &str) -> Result<Bandwidth, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(Bandwidth::Auto);
    }
    positive_f64(s).map(Bandwidth::Fixed)
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_enum)]
    estimator: EstimatorArg,
    #[command(flatten)]
    data: DataSource,
    /// Masses CSV to smooth (SMLE only; fitted from the data when omitted).
    #[arg(long, value_name = "PATH")]
    masses: Option<PathBuf>,
    /// Bandwidth: `auto` for n^{-1/6}, or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    h: Bandwidth,
    /// Grid points per axis (plug-in default: the n^{-1/3} lattice).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    grid: Option<u32>,
    /// SMLE kernel order.
    #[arg(long, value_enum, default_value = "second")]
    kernel: KernelArg,
    /// Grid CSV (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Plug-in lattice masses as `x,y,mass`.
    #[arg(long, value_name = "PATH")]
    masses_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    data: DataSource,
    #[arg(long, value_name = "PATH")]
    masses: PathBuf,
    /// Allowed excess over 1 (and shortfall on the support).
    #[arg(long, default_value_t = 1e-6, value_parser = positive_f64)]
    tol: f64,
    /// Probe points per axis over the data range.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(2..))]
    probe: u32,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TruthArg {
    F0a,
    F0b,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    truth: TruthArg,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(8..))]
    n: u64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// SMLE bandwidth: `auto` for n^{-1/6}, or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    h_smle: Bandwidth,
    /// Plug-in half-width: `auto` for n^{-1/6}, or a positive number.
    #[arg(long, default_value = "auto", value_parser = parse_bandwidth)]
    h_plugin: Bandwidth,
    #[arg(long, value_enum, default_value = "permutation")]
    sieve: SieveArg,
    /// Summary CSV (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Full result, including failed replications, as JSON.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the first replication's sample as current-status CSV.
    #[arg(long, value_name = "PATH")]
    dump_sample: Option<PathBuf>,
    /// Allow n above 2000 or more than 2000 replications.
    #[arg(long)]
    long_run: bool,
}

/// Input problems map to exit status 2, everything reported as `Ok` carries its own.
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::FitMle(a) => fit_mle(a),
        Command::Eval(a) => eval(a),
        Command::Check(a) => check(a),
        Command::Simulate(a) => simulate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("BICENS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .with_context(|| format!("BICENS_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("cannot configure the thread pool")
}

enum Loaded {
    Rectangles(Dataset64),
    CurrentStatus(Vec<CurrentStatusObs64>, Dataset64),
}

impl Loaded {
    fn dataset(&self) -> &Dataset64 {
        match self {
            Loaded::Rectangles(d) | Loaded::CurrentStatus(_, d) => d,
        }
    }
}

fn load(src: &DataSource) -> Result<Loaded> {
    if let Some(path) = &src.input {
        let d = read_rectangle_csv(path)
            .with_context(|| format!("invalid input `{}`", path.display()))?;
        return Ok(Loaded::Rectangles(d));
    }
    let path = src.cs_input.as_ref().expect("clap enforces one source");
    let obs = read_cs_csv(path).with_context(|| format!("invalid input `{}`", path.display()))?;
    let d =
        cs_to_rectangles(&obs).with_context(|| format!("invalid input `{}`", path.display()))?;
    Ok(Loaded::CurrentStatus(obs, d))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write `{}`", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_masses(path: &Path) -> Result<DiscreteDistribution64> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read `{}`", path.display()))?;
    let dist = DiscreteDistribution::parse_csv(&text)
        .map_err(|e| anyhow::anyhow!("invalid masses file `{}`: {e}", path.display()))?;
    if dist.is_empty() {
        bail!("masses file `{}` contains no points", path.display());
    }
    Ok(dist)
}

/// Unit square when every finite bound lies in `[0, 1]`, otherwise from the smallest
/// finite coordinate to the sentinel.
fn region(d: &Dataset64) -> ((f64, f64), (f64, f64)) {
    let [lx, ly] = d.min_finite();
    let [hx, hy] = d.max_finite();
    let unit = [lx, ly].iter().flatten().all(|&v| v >= 0.0)
        && [hx, hy].iter().flatten().all(|&v| v <= 1.0);
    if unit {
        return ((0.0, 0.0), (1.0, 1.0));
    }
    let s = Sentinel::for_dataset(d);
    (
        (lx.unwrap_or(0.0).min(0.0), ly.unwrap_or(0.0).min(0.0)),
        (s.x, s.y),
    )
}

fn axis(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

fn fit_mle(a: FitArgs) -> Result<ExitCode> {
    let loaded = load(&a.data)?;
    let data = loaded.dataset();
    let canon = maximal_intersections(data);
    let candidates = match a.sieve {
        Some(design) => {
            let mut rng = simstudy::replication_rng(a.seed, 0);
            random_sieve_with(data.n().max(8) as usize, design.into(), &mut rng)
        }
        None => canonical_corners(data, &canon),
    };
    let opts = FitOptions {
        fenchel_tol: a.tol,
        max_iter: a.max_iter as usize,
        ..FitOptions::default()
    };
    let (dist, report) = match fit_distribution(data, &candidates, &opts) {
        Ok(r) => r,
        Err(e @ FitError::Unfittable { .. }) => bail!("{e}; the candidates miss an observation"),
        Err(e) => return Err(e.into()),
    };
    info!(
        "loglik {:.10}, {} iterations, support {}, max Fenchel {:.3e}",
        report.loglik, report.iterations, report.support_size, report.max_fenchel
    );
    write_out(a.out.as_deref(), &dist.to_csv())?;
    if let Some(p) = &a.report {
        let json = serde_json::to_string_pretty(&report)?;
        fs::write(p, json + "\n").with_context(|| format!("cannot write `{}`", p.display()))?;
    }
    if let Some(p) = &a.canonical {
        fs::write(p, canonical_to_csv(&canon))
            .with_context(|| format!("cannot write `{}`", p.display()))?;
    }
    if report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "not converged after {} iterations: max Fenchel {:.3e}",
            report.iterations, report.max_fenchel
        );
        Ok(ExitCode::from(1))
    }
}

fn eval(a: EvalArgs) -> Result<ExitCode> {
    let loaded = load(&a.data)?;
    match a.estimator {
        EstimatorArg::Smle => eval_smle(&a, loaded.dataset()),
        EstimatorArg::Plugin => {
            if a.masses.is_some() {
                bail!("--masses applies to the SMLE only");
            }
            let Loaded::CurrentStatus(obs, _) = &loaded else {
                bail!("the plug-in estimator needs current-status data (--cs-input)");
            };
            eval_plugin(&a, obs)
        }
    }
}

fn eval_smle(a: &EvalArgs, data: &Dataset64) -> Result<ExitCode> {
    if a.masses_out.is_some() {
        bail!("--masses-out applies to the plug-in estimator only");
    }
    let dist = match &a.masses {
        Some(p) => read_masses(p)?,
        None => {
            let corners = canonical_corners(data, &maximal_intersections(data));
            let (dist, report) = fit_distribution(data, &corners, &FitOptions::default())?;
            if !report.converged {
                warn!(
                    "NPMLE did not converge (max Fenchel {:.3e})",
                    report.max_fenchel
                );
            }
            dist
        }
    };
    let order = match a.kernel {
        KernelArg::Second => KernelOrder::Second,
        KernelArg::Fourth => KernelOrder::Fourth,
    };
    let h = a.h.resolve(data.n());
    let ((lx, ly), (hx, hy)) = region(data);
    let kernel = KernelSpec::new(order, h).context("invalid bandwidth")?;
    let est = SmleEstimate::new(dist, kernel).with_upper(hx, hy);
    let points = a.grid.unwrap_or(41) as usize;
    let (ts, us) = (axis(lx, hx, points), axis(ly, hy, points));
    info!("SMLE h = {h}, grid {points}x{points} over [{lx}, {hx}] x [{ly}, {hy}]");
    let values = est.grid(&ts, &us);
    let mut out = String::from("t,u,value\n");
    for (i, &t) in ts.iter().enumerate() {
        for (j, &u) in us.iter().enumerate() {
            out.push_str(&format!("{t},{u},{}\n", values[i * us.len() + j]));
        }
    }
    write_out(a.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn eval_plugin(a: &EvalArgs, obs: &[CurrentStatusObs64]) -> Result<ExitCode> {
    let n = obs.len() as u64;
    let h = a.h.resolve(n);
    let (xs, spacing) = match a.grid {
        Some(points) => {
            let xs = axis(0.0, 1.0, points as usize);
            let spacing = if points > 1 {
                1.0 / (points - 1) as f64
            } else {
                1.0
            };
            (xs, spacing)
        }
        None => (plugin_lattice::<f64>(n), (n as f64).cbrt().recip()),
    };
    let grid = build_plugin_grid_on(obs, xs.clone(), xs, spacing, h)
        .with_context(|| format!("plug-in estimate with h = {h}"))?;
    write_out(a.out.as_deref(), &grid.to_csv())?;
    if let Some(p) = &a.masses_out {
        fs::write(p, grid.to_distribution().to_csv())
            .with_context(|| format!("cannot write `{}`", p.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn check(a: CheckArgs) -> Result<ExitCode> {
    let loaded = load(&a.data)?;
    let data = loaded.dataset();
    let dist = read_masses(&a.masses)?;
    let ((lx, ly), (hx, hy)) = region(data);
    let pad = if hx > 1.0 || hy > 1.0 { 1.0 } else { 0.0 };
    let probe = a.probe as usize;
    let grid: Vec<(f64, f64)> = axis(lx - pad, hx, probe)
        .into_iter()
        .flat_map(|x| axis(ly - pad, hy, probe).into_iter().map(move |y| (x, y)))
        .collect();
    let support: Vec<(f64, f64)> = dist
        .points()
        .iter()
        .zip(dist.masses())
        .filter(|(_, &m)| m > 0.0)
        .map(|(&p, _)| p)
        .collect();
    let tested: Vec<(f64, f64)> = grid.iter().chain(&support).copied().collect();
    let lhs = match fenchel_check_ic2(data, &dist, &tested) {
        Ok(v) => v,
        Err(FitError::ZeroDenominator { row }) => {
            println!(
                "violation: observation {row} has zero probability; the log-likelihood is -inf"
            );
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    let lhs_support = &lhs[grid.len()..];

    let (worst_at, worst) = tested.iter().zip(&lhs).fold(
        ((f64::NAN, f64::NAN), f64::NEG_INFINITY),
        |acc, (&p, &v)| if v > acc.1 { (p, v) } else { acc },
    );
    let (low_at, low) = support.iter().zip(lhs_support).fold(
        ((f64::NAN, f64::NAN), f64::INFINITY),
        |acc, (&p, &v)| if v < acc.1 { (p, v) } else { acc },
    );
    let total = dist.total_mass();
    println!(
        "max_fenchel {worst:.12} at ({}, {})",
        worst_at.0, worst_at.1
    );
    if !support.is_empty() {
        println!("min_on_support {low:.12} at ({}, {})", low_at.0, low_at.1);
    }
    println!("total_mass {total:.12}");

    let mut failed = false;
    if worst > 1.0 + a.tol {
        println!(
            "violation: LHS {worst:.12} exceeds 1 + {} at ({}, {})",
            a.tol, worst_at.0, worst_at.1
        );
        failed = true;
    }
    if low < 1.0 - a.tol {
        println!(
            "violation: LHS {low:.12} below 1 - {} at support point ({}, {})",
            a.tol, low_at.0, low_at.1
        );
        failed = true;
    }
    if (total - 1.0).abs() > a.tol || dist.masses().iter().any(|&m| m < 0.0) {
        println!("violation: masses are not a probability vector");
        failed = true;
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let (n, reps) = (a.n as usize, a.reps as usize);
    if (n > DESK_MAX_N || reps > DESK_MAX_REPS) && !a.long_run {
        bail!("n = {n} with {reps} replications is a long run; pass --long-run to start it");
    }
    if reps < 10 {
        warn!("only {reps} replications: Monte Carlo standard errors are unreliable");
    }
    let truth = match a.truth {
        TruthArg::F0a => Truth::F0A,
        TruthArg::F0b => Truth::F0B,
    };
    let sc = Scenario::new(truth, n)
        .with_reps(reps)
        .with_seed(a.seed)
        .with_sieve(a.sieve.into())
        .with_bandwidths(a.h_smle.rule(), a.h_plugin.rule());
    if let Some(p) = &a.dump_sample {
        let sample = replication_sample(&sc, 0);
        fs::write(p, cs_to_csv(&sample))
            .with_context(|| format!("cannot write `{}`", p.display()))?;
    }
    let result = run_study(&sc)?;
    write_out(a.out.as_deref(), &result.to_csv())?;
    if let Some(p) = &a.json {
        let json = serde_json::to_string_pretty(&result)?;
        fs::write(p, json + "\n").with_context(|| format!("cannot write `{}`", p.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandwidth_values() {
        assert_eq!(parse_bandwidth("auto"), Ok(Bandwidth::Auto));
        assert_eq!(parse_bandwidth("0.25"), Ok(Bandwidth::Fixed(0.25)));
        assert!(parse_bandwidth("0").is_err());
        assert!(parse_bandwidth("nan").is_err());
        assert!((Bandwidth::Auto.resolve(64) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn axis_endpoints() {
        assert_eq!(axis(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(axis(2.0, 5.0, 1), vec![2.0]);
    }

    #[test]
    fn region_follows_the_data() {
        let bf = bf_dataset::<f64>();
        assert_eq!(region(&bf), ((0.0, 0.0), (22.0, 28.0)));
        let obs = vec![CurrentStatusObs::new(0.2, 0.7, true, false)];
        let d = cs_to_rectangles(&obs).unwrap();
        assert_eq!(region(&d), ((0.0, 0.0), (1.0, 1.0)));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
