//! Monte Carlo comparison of the sieved MLE, the SMLE and the plug-in estimator on
//! simulated current-status samples.
//!
//! Every replication draws its own random stream from the root seed and the
//! replication index, so results do not depend on scheduling or thread count.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::censdata::{cs_to_rectangles, CurrentStatusObs};
use crate::kernels::KernelSpec;
use crate::model::{BivariateModel, LinearDensity, UniformSquare};
use crate::npmle::{fit_distribution, random_sieve_with, FitOptions, SieveDesign};
use crate::plugin::{plugin_eval_boundary, PluginError};
use crate::smle::SmleEstimate;

/// Distribution of the hidden pair `(X, Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Truth {
    /// Density `x + y` on the unit square, `F(x, y) = x y (x + y) / 2`.
    F0A,
    /// Uniform on the unit square.
    F0B,
}

impl Truth {
    pub fn df(self, x: f64, y: f64) -> f64 {
        match self {
            Truth::F0A => LinearDensity.df(x, y),
            Truth::F0B => UniformSquare.df(x, y),
        }
    }

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> (f64, f64) {
        match self {
            Truth::F0B => (rng.gen(), rng.gen()),
            // equal mixture of densities 2x and 2y
            Truth::F0A => {
                let heavy = rng.gen::<f64>().sqrt();
                let flat = rng.gen::<f64>();
                if rng.gen_bool(0.5) {
                    (heavy, flat)
                } else {
                    (flat, heavy)
                }
            }
        }
    }
}

pub fn sample_truth(truth: Truth, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_truth_with(truth, n, &mut rng)
}

pub fn sample_truth_with<R: Rng + ?Sized>(truth: Truth, n: usize, rng: &mut R) -> Vec<(f64, f64)> {
    (0..n).map(|_| truth.draw(rng)).collect()
}

/// Current-status sample with observation times uniform on the unit square.
pub fn make_cs_sample(truth: Truth, n: usize, seed: u64) -> Vec<CurrentStatusObs<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    make_cs_sample_with(truth, n, &mut rng)
}

pub fn make_cs_sample_with<R: Rng + ?Sized>(
    truth: Truth,
    n: usize,
    rng: &mut R,
) -> Vec<CurrentStatusObs<f64>> {
    (0..n)
        .map(|_| {
            let (x, y) = truth.draw(rng);
            let (t, u): (f64, f64) = (rng.gen(), rng.gen());
            censor((x, y), (t, u))
        })
        .collect()
}

/// Indicators `1{x <= t}`, `1{y <= u}`.
pub fn censor((x, y): (f64, f64), (t, u): (f64, f64)) -> CurrentStatusObs<f64> {
    CurrentStatusObs::new(t, u, x <= t, y <= u)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BandwidthRule {
    /// `h = n^{-1/6}`.
    Rate,
    Fixed(f64),
}

impl BandwidthRule {
    pub fn bandwidth(self, n: usize) -> f64 {
        match self {
            BandwidthRule::Rate => (n as f64).powf(-1.0 / 6.0),
            BandwidthRule::Fixed(h) => h,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub truth: Truth,
    pub n: usize,
    pub reps: usize,
    pub smle_bandwidth: BandwidthRule,
    pub plugin_bandwidth: BandwidthRule,
    pub eval_points: Vec<(f64, f64)>,
    pub sieve: SieveDesign,
    pub seed: u64,
}

impl Scenario {
    /// 200 replications at `{0.2, 0.4, 0.6, 0.8} × {0.6}` with bandwidths `n^{-1/6}` and
    /// the permutation sieve.
    pub fn new(truth: Truth, n: usize) -> Self {
        Self {
            truth,
            n,
            reps: 200,
            smle_bandwidth: BandwidthRule::Rate,
            plugin_bandwidth: BandwidthRule::Rate,
            eval_points: default_eval_points(),
            sieve: SieveDesign::Permutation,
            seed: 1,
        }
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_sieve(mut self, sieve: SieveDesign) -> Self {
        self.sieve = sieve;
        self
    }

    pub fn with_bandwidths(mut self, smle: BandwidthRule, plugin: BandwidthRule) -> Self {
        self.smle_bandwidth = smle;
        self.plugin_bandwidth = plugin;
        self
    }
}

pub fn default_eval_points() -> Vec<(f64, f64)> {
    [0.2, 0.4, 0.6, 0.8].iter().map(|&t| (t, 0.6)).collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum StudyError {
    #[error("need at least 2 replications, got {0}")]
    TooFewReps(usize),
    #[error("sample size {0} is too small for the sieve (need n >= 8)")]
    SampleSize(usize),
    #[error("invalid bandwidth {0}")]
    Bandwidth(f64),
    #[error("no evaluation points")]
    NoEvalPoints,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Estimator {
    Mle,
    Smle,
    Plugin,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Mle, Estimator::Smle, Estimator::Plugin];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Smle => "smle",
            Estimator::Plugin => "plugin",
        }
    }
}

/// Scaled spread and bias of one estimator at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub estimator: Estimator,
    pub t: f64,
    pub u: f64,
    pub truth: f64,
    pub mean: f64,
    /// `n^{1/3}` times the sample standard deviation.
    pub scaled_sd: f64,
    pub scaled_sd_se: f64,
    /// `n^{1/3}` times the mean error.
    pub scaled_bias: f64,
    pub scaled_bias_se: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyResult {
    pub scenario: Scenario,
    pub summaries: Vec<Summary>,
    /// Replications excluded from every summary.
    pub failures: Vec<ReplicationFailure>,
    /// Plug-in evaluations whose square was empty and that were retried with a wider one.
    pub widened_plugin: usize,
}

impl StudyResult {
    pub fn summary(&self, estimator: Estimator, t: f64, u: f64) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|s| s.estimator == estimator && s.t == t && s.u == u)
    }

    /// One row per evaluation point with scaled sd and bias (and their Monte Carlo
    /// standard errors) for each estimator.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,u,n");
        for what in ["sd", "bias"] {
            for e in Estimator::ALL {
                let _ = write!(out, ",{0}_{what},{0}_{what}_se", e.name());
            }
        }
        out.push_str(",reps_used,failures\n");
        let used = self.scenario.reps - self.failures.len();
        for &(t, u) in &self.scenario.eval_points {
            let _ = write!(out, "{t},{u},{}", self.scenario.n);
            for sd in [true, false] {
                for e in Estimator::ALL {
                    let s = self.summary(e, t, u).expect("summary for every point");
                    let (v, se) = if sd {
                        (s.scaled_sd, s.scaled_sd_se)
                    } else {
                        (s.scaled_bias, s.scaled_bias_se)
                    };
                    let _ = write!(out, ",{v:.6},{se:.6}");
                }
            }
            let _ = writeln!(out, ",{used},{}", self.failures.len());
        }
        out
    }
}

struct Replication {
    /// `values[k][e]`: estimator `e` at evaluation point `k`.
    values: Vec<[f64; 3]>,
    widened: usize,
}

/// Per-replication random stream: ChaCha8 seeded with the root seed, stream = index.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Draws the sample of replication `rep` exactly as [`run_study`] does.
pub fn replication_sample(sc: &Scenario, rep: usize) -> Vec<CurrentStatusObs<f64>> {
    make_cs_sample_with(sc.truth, sc.n, &mut replication_rng(sc.seed, rep))
}

fn run_replication(sc: &Scenario, rep: usize) -> Result<Replication, String> {
    let mut rng = replication_rng(sc.seed, rep);
    let obs = make_cs_sample_with(sc.truth, sc.n, &mut rng);
    let sieve = random_sieve_with::<f64, _>(sc.n, sc.sieve, &mut rng);
    let data = cs_to_rectangles(&obs).map_err(|e| e.to_string())?;
    let (mle, report) =
        fit_distribution(&data, &sieve, &FitOptions::default()).map_err(|e| e.to_string())?;
    if !report.converged {
        return Err(format!(
            "sieved MLE did not converge after {} iterations (max Fenchel {})",
            report.iterations, report.max_fenchel
        ));
    }
    let h_smle = sc.smle_bandwidth.bandwidth(sc.n);
    let kernel = KernelSpec::triweight(h_smle).map_err(|e| e.to_string())?;
    let smle = SmleEstimate::new(mle.clone(), kernel);
    let h_plugin = sc.plugin_bandwidth.bandwidth(sc.n);

    let mut widened = 0;
    let mut values = Vec::with_capacity(sc.eval_points.len());
    for &(t, u) in &sc.eval_points {
        let mut h = h_plugin;
        let plugin = loop {
            match plugin_eval_boundary(&obs, t, u, h) {
                Ok(v) => break v,
                Err(PluginError::EmptyCell { .. }) if h < 1.0 => {
                    log::debug!("replication {rep}: empty plug-in square at ({t}, {u}), h = {h}");
                    widened += 1;
                    h *= 2.0;
                }
                Err(e) => return Err(e.to_string()),
            }
        };
        values.push([mle.df(t, u), smle.eval(t, u), plugin]);
    }
    Ok(Replication { values, widened })
}

fn summarize(
    estimator: Estimator,
    (t, u): (f64, f64),
    truth: f64,
    xs: &[f64],
    scale: f64,
) -> Summary {
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    let sd = var.sqrt();
    Summary {
        estimator,
        t,
        u,
        truth,
        mean,
        scaled_sd: scale * sd,
        scaled_sd_se: scale * sd / (2.0 * (r - 1.0)).sqrt(),
        scaled_bias: scale * (mean - truth),
        scaled_bias_se: scale * sd / r.sqrt(),
        count: xs.len(),
    }
}

/// Runs all replications in parallel on the current rayon pool and aggregates them in
/// replication order.
pub fn run_study(sc: &Scenario) -> Result<StudyResult, StudyError> {
    if sc.reps < 2 {
        return Err(StudyError::TooFewReps(sc.reps));
    }
    if sc.n < 8 {
        return Err(StudyError::SampleSize(sc.n));
    }
    if sc.eval_points.is_empty() {
        return Err(StudyError::NoEvalPoints);
    }
    for rule in [sc.smle_bandwidth, sc.plugin_bandwidth] {
        let h = rule.bandwidth(sc.n);
        if !(h > 0.0 && h.is_finite()) {
            return Err(StudyError::Bandwidth(h));
        }
    }

    let outcomes: Vec<Result<Replication, String>> = (0..sc.reps)
        .into_par_iter()
        .map(|rep| run_replication(sc, rep))
        .collect();

    let mut failures = Vec::new();
    let mut good = Vec::new();
    let mut widened_plugin = 0;
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => {
                widened_plugin += r.widened;
                good.push(r);
            }
            Err(reason) => {
                log::warn!("replication {rep} excluded: {reason}");
                failures.push(ReplicationFailure { rep, reason });
            }
        }
    }
    if widened_plugin > 0 {
        log::warn!("{widened_plugin} plug-in evaluations needed a wider square");
    }
    if good.len() < 2 {
        return Err(StudyError::TooFewReps(good.len()));
    }

    let scale = (sc.n as f64).cbrt();
    let mut summaries = Vec::new();
    for (k, &point) in sc.eval_points.iter().enumerate() {
        let truth = sc.truth.df(point.0, point.1);
        for (e, estimator) in Estimator::ALL.into_iter().enumerate() {
            let xs: Vec<f64> = good.iter().map(|r| r.values[k][e]).collect();
            summaries.push(summarize(estimator, point, truth, &xs, scale));
        }
    }
    Ok(StudyResult {
        scenario: sc.clone(),
        summaries,
        failures,
        widened_plugin,
    })
}
