//! Nonparametric maximum likelihood over a finite candidate set.
//!
//! Maximizes `Σ_i f_i log(H_i p)` over the probability simplex with the support
//! reduction algorithm: each outer iteration adds the candidate with the largest
//! directional derivative, then solves the quadratic model of the relaxed objective
//! `Σ_i (f_i/n) log(H_i p) - Σ_j p_j` on the current support, pruning points that would
//! receive negative mass, and safeguards the step with an Armijo line search.
//!
//! The directional derivative `c_j = Σ_i f_i H_ij / (n H_i p)` is also the left-hand
//! side of the Fenchel duality conditions, so the stopping rule and the optimality
//! certificate are the same quantity: `c_j <= 1` everywhere, `c_j = 1` on the support.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::censdata::{CurrentStatusObs, Dataset};
use crate::geometry::{incidence, IncidenceMatrix};
use crate::linalg::solve_spd;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("observation {row} contains no candidate point; the log-likelihood is -inf for every choice of masses")]
    Unfittable { row: usize },
    #[error("candidate set is empty")]
    NoCandidates,
    #[error("certificate failure: observation {row} has zero probability under the distribution")]
    ZeroDenominator { row: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

/// Point masses `p_j` at `(x_j, y_j)`. For an MLE the masses are nonnegative and sum
/// to one; the plug-in estimator may produce signed masses.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution<T> {
    points: Vec<(T, T)>,
    masses: Vec<T>,
}

impl<T: Scalar> DiscreteDistribution<T> {
    pub fn new(points: Vec<(T, T)>, masses: Vec<T>) -> Result<Self, FitError> {
        if points.len() != masses.len() {
            return Err(FitError::DimensionMismatch(format!(
                "{} points but {} masses",
                points.len(),
                masses.len()
            )));
        }
        if masses.iter().any(|m| !m.is_finite()) {
            return Err(FitError::InvalidDistribution("non-finite mass".into()));
        }
        if points.iter().any(|&(x, y)| x.is_nan() || y.is_nan()) {
            return Err(FitError::InvalidDistribution("NaN coordinate".into()));
        }
        Ok(Self { points, masses })
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().copied().sum()
    }

    /// Right-continuous df `F(x, y) = Σ p_j 1{x_j <= x, y_j <= y}`.
    pub fn df(&self, x: T, y: T) -> T {
        self.points
            .iter()
            .zip(&self.masses)
            .filter(|(&(px, py), _)| px <= x && py <= y)
            .map(|(_, &m)| m)
            .sum()
    }

    pub fn marginal1(&self, x: T) -> T {
        self.df(x, T::infinity())
    }

    pub fn marginal2(&self, y: T) -> T {
        self.df(T::infinity(), y)
    }

    /// Checks nonnegativity and unit total mass within `tol`.
    pub fn validate_probability(&self, tol: T) -> Result<(), FitError> {
        if let Some(m) = self.masses.iter().find(|&&m| m < -tol) {
            return Err(FitError::InvalidDistribution(format!("negative mass {m}")));
        }
        let total = self.total_mass();
        if (total - T::one()).abs() > tol {
            return Err(FitError::InvalidDistribution(format!(
                "masses sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// CSV with header `x,y,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,mass\n");
        for (&(x, y), &m) in self.points.iter().zip(&self.masses) {
            let _ = writeln!(out, "{x},{y},{m:e}");
        }
        out
    }

    /// Reads the `x,y,mass` CSV written by [`Self::to_csv`].
    pub fn parse_csv(text: &str) -> Result<Self, String> {
        let mut points = Vec::new();
        let mut masses = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if i == 0 && line.eq_ignore_ascii_case("x,y,mass") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(format!("line {}: expected x,y,mass", i + 1));
            }
            let num = |s: &str| {
                s.parse::<T>()
                    .map_err(|_| format!("line {}: cannot parse `{s}`", i + 1))
            };
            points.push((num(fields[0])?, num(fields[1])?));
            masses.push(num(fields[2])?);
        }
        Self::new(points, masses).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions<T> {
    /// Tolerance of the Fenchel certificate.
    pub fenchel_tol: T,
    /// Masses below this are removed from the reported solution.
    pub drop_tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            fenchel_tol: T::lit(1e-8).max(T::epsilon() * T::lit(100.0)),
            drop_tol: T::lit(1e-10).max(T::epsilon() * T::lit(10.0)),
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport<T> {
    pub loglik: T,
    pub iterations: usize,
    /// Largest Fenchel left-hand side over all candidates.
    pub max_fenchel: T,
    pub support_size: usize,
    pub converged: bool,
    /// Log-likelihood after each outer iteration.
    #[serde(skip)]
    pub trace: Vec<T>,
}

/// `Σ_i f_i log(H_i p)`; `-inf` when an observation with positive frequency gets zero
/// probability.
pub fn loglik<T: Scalar>(h: &IncidenceMatrix, freq: &[u64], p: &[T]) -> Result<T, FitError> {
    check_dims(h, freq)?;
    if p.len() != h.cols() {
        return Err(FitError::DimensionMismatch(format!(
            "{} masses for {} candidates",
            p.len(),
            h.cols()
        )));
    }
    let mut total = T::zero();
    for (i, &f) in freq.iter().enumerate() {
        if f == 0 {
            continue;
        }
        let q: T = h
            .row(i)
            .iter()
            .zip(p)
            .filter(|(&b, _)| b)
            .map(|(_, &m)| m)
            .sum();
        if q <= T::zero() {
            return Ok(T::neg_infinity());
        }
        total = total + T::from_u64(f).unwrap() * q.ln();
    }
    Ok(total)
}

fn check_dims(h: &IncidenceMatrix, freq: &[u64]) -> Result<(), FitError> {
    if freq.len() != h.rows() {
        return Err(FitError::DimensionMismatch(format!(
            "{} frequencies for {} observation rows",
            freq.len(),
            h.rows()
        )));
    }
    Ok(())
}

/// Sparse view of the problem: candidate columns per row, normalized weights.
struct Problem<T> {
    row_cols: Vec<Vec<usize>>,
    weights: Vec<T>,
    m: usize,
}

impl<T: Scalar> Problem<T> {
    fn new(h: &IncidenceMatrix, freq: &[u64]) -> Self {
        let n: u64 = freq.iter().sum();
        let n_t = T::from_u64(n).unwrap();
        let mut row_cols = Vec::new();
        let mut weights = Vec::new();
        for (i, &f) in freq.iter().enumerate() {
            if f == 0 {
                continue;
            }
            row_cols.push((0..h.cols()).filter(|&j| h.get(i, j)).collect());
            weights.push(T::from_u64(f).unwrap() / n_t);
        }
        Self {
            row_cols,
            weights,
            m: h.cols(),
        }
    }

    fn fitted(&self, p: &[T]) -> Vec<T> {
        self.row_cols
            .iter()
            .map(|cols| cols.iter().map(|&j| p[j]).sum())
            .collect()
    }

    /// Normalized log-likelihood `Σ w_i log q_i`.
    fn objective(&self, q: &[T]) -> T {
        let mut s = T::zero();
        for (&w, &qi) in self.weights.iter().zip(q) {
            if qi <= T::zero() {
                return T::neg_infinity();
            }
            s = s + w * qi.ln();
        }
        s
    }

    /// Directional derivatives `c_j = Σ_i w_i H_ij / q_i`.
    fn gradient(&self, q: &[T]) -> Vec<T> {
        let mut c = vec![T::zero(); self.m];
        for ((cols, &w), &qi) in self.row_cols.iter().zip(&self.weights).zip(q) {
            let r = w / qi;
            for &j in cols {
                c[j] = c[j] + r;
            }
        }
        c
    }

    /// Minimizer of the quadratic model of the relaxed objective at `q` over the span
    /// of `support`: solves `A x = 2c - 1` with `A_jl = Σ_i w_i H_ij H_il / q_i^2`.
    fn quadratic_step(&self, q: &[T], c: &[T], support: &[usize]) -> Option<Vec<T>> {
        let k = support.len();
        let mut local = vec![usize::MAX; self.m];
        for (a, &j) in support.iter().enumerate() {
            local[j] = a;
        }
        let mut a = vec![T::zero(); k * k];
        let mut idx = Vec::with_capacity(k);
        for ((cols, &w), &qi) in self.row_cols.iter().zip(&self.weights).zip(q) {
            idx.clear();
            idx.extend(cols.iter().map(|&j| local[j]).filter(|&l| l != usize::MAX));
            if idx.is_empty() {
                continue;
            }
            let r = w / (qi * qi);
            for (s, &u) in idx.iter().enumerate() {
                for &v in &idx[s..] {
                    a[u * k + v] = a[u * k + v] + r;
                }
            }
        }
        for u in 0..k {
            for v in 0..u {
                a[u * k + v] = a[v * k + u];
            }
        }
        let two = T::lit(2.0);
        let b: Vec<T> = support.iter().map(|&j| two * c[j] - T::one()).collect();
        solve_spd(&a, &b, k)
    }
}

/// Greedy hitting set of the rows; returns the chosen columns.
fn initial_support(problem: &Problem<impl Scalar>) -> Vec<usize> {
    let mut uncovered: Vec<bool> = vec![true; problem.row_cols.len()];
    let mut left = uncovered.len();
    let mut chosen = Vec::new();
    while left > 0 {
        let mut hits = vec![0usize; problem.m];
        for (cols, _) in problem.row_cols.iter().zip(&uncovered).filter(|(_, &u)| u) {
            for &j in cols {
                hits[j] += 1;
            }
        }
        let (best, &count) = hits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty candidate set");
        debug_assert!(count > 0);
        chosen.push(best);
        for (cols, u) in problem.row_cols.iter().zip(uncovered.iter_mut()) {
            if *u && cols.contains(&best) {
                *u = false;
                left -= 1;
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

const ARMIJO: f64 = 1e-4;

/// Backtracking search on the relaxed objective from `p0` toward `target`; returns the
/// accepted point, or `None` when no step increases it.
///
/// Besides the Armijo test a step is accepted when the directional derivative at its
/// end point is still nonnegative; by concavity that is an ascent step, and unlike the
/// function values the derivative stays accurate when the attainable gain is below
/// rounding.
fn armijo<T: Scalar>(
    problem: &Problem<T>,
    p0: &[T],
    c0: &[T],
    psi0: T,
    target: &[T],
) -> Option<Vec<T>> {
    let slope: T = p0
        .iter()
        .zip(target)
        .zip(c0)
        .map(|((&a, &b), &c)| (b - a) * (c - T::one()))
        .sum();
    if !(slope > T::zero()) {
        return None;
    }
    let mut s = T::one();
    let half = T::lit(0.5);
    let floor = T::epsilon();
    while s > floor {
        let p: Vec<T> = p0
            .iter()
            .zip(target)
            .map(|(&a, &b)| a + s * (b - a))
            .collect();
        let q = problem.fitted(&p);
        let psi = problem.objective(&q) - p.iter().copied().sum::<T>();
        if psi.is_finite() {
            if psi >= psi0 + T::lit(ARMIJO) * s * slope {
                return Some(p);
            }
            let c = problem.gradient(&q);
            let end_slope: T = p0
                .iter()
                .zip(target)
                .zip(&c)
                .map(|((&a, &b), &cj)| (b - a) * (cj - T::one()))
                .sum();
            if end_slope >= T::zero() {
                return Some(p);
            }
        }
        s = s * half;
    }
    None
}

/// Moves mass toward vertex `j` along `(1-a) p + a e_j`; the Fenchel violation
/// `c_j > 1` guarantees ascent for small `a`. The step length is a safeguarded Newton
/// root of the directional derivative `Σ_i w_i (H_ij - q_i) / q_i(a)`.
fn vertex_step<T: Scalar>(
    problem: &Problem<T>,
    p: &[T],
    q: &[T],
    c: &[T],
    j: usize,
) -> Option<Vec<T>> {
    if !(c[j] - T::one() > T::zero()) {
        return None;
    }
    let hj: Vec<T> = problem
        .row_cols
        .iter()
        .map(|cols| {
            if cols.contains(&j) {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    // derivative and its (negative) slope at step a
    let derivative = |a: T| {
        let (mut d, mut dd) = (T::zero(), T::zero());
        for ((&w, &qi), &h) in problem.weights.iter().zip(q).zip(&hj) {
            let diff = h - qi;
            let qa = qi + a * diff;
            if qa <= T::zero() {
                return None;
            }
            let r = diff / qa;
            d = d + w * r;
            dd = dd - w * r * r;
        }
        Some((d, dd))
    };
    let (mut lo, mut hi) = (T::zero(), T::one());
    if let Some((d1, _)) = derivative(T::one()) {
        if d1 >= T::zero() {
            lo = T::one();
        }
    }
    if lo < hi {
        let mut a = T::zero();
        for _ in 0..60 {
            let Some((d, dd)) = derivative(a) else { break };
            if d >= T::zero() {
                lo = a;
            } else {
                hi = a;
            }
            let newton = if dd < T::zero() { a - d / dd } else { hi };
            a = if newton > lo && newton < hi {
                newton
            } else {
                T::lit(0.5) * (lo + hi)
            };
            if hi - lo <= T::epsilon() * hi {
                break;
            }
        }
    }
    if !(lo > T::zero()) {
        return None;
    }
    let mut cand: Vec<T> = p.iter().map(|&v| v * (T::one() - lo)).collect();
    cand[j] = cand[j] + lo;
    Some(cand)
}

fn normalize<T: Scalar>(p: &mut [T]) {
    let total: T = p.iter().copied().sum();
    if total > T::zero() {
        for v in p.iter_mut() {
            *v = *v / total;
        }
    }
}

fn certificate<T: Scalar>(c: &[T], p: &[T], tol: T) -> (T, bool) {
    let max_c = c.iter().copied().fold(T::neg_infinity(), T::max);
    let equal_on_support = c
        .iter()
        .zip(p)
        .filter(|(_, &m)| m > T::zero())
        .all(|(&cj, _)| (cj - T::one()).abs() <= tol);
    (max_c, max_c <= T::one() + tol && equal_on_support)
}

/// Maximizes the log-likelihood over masses on the candidate columns of `h`.
///
/// Returns one mass per candidate (zero off the support). Failing to certify within
/// `max_iter` iterations is reported through `FitReport::converged`, not as an error.
pub fn fit<T: Scalar>(
    h: &IncidenceMatrix,
    freq: &[u64],
    opts: &FitOptions<T>,
) -> Result<(Vec<T>, FitReport<T>), FitError> {
    check_dims(h, freq)?;
    if h.cols() == 0 {
        return Err(FitError::NoCandidates);
    }
    if let Some(&row) = h.zero_rows().iter().find(|&&i| freq[i] > 0) {
        return Err(FitError::Unfittable { row });
    }
    let problem = Problem::<T>::new(h, freq);
    let m = problem.m;
    let n_t = T::from_u64(freq.iter().sum()).unwrap();

    let mut p = vec![T::zero(); m];
    let start = initial_support(&problem);
    let share = T::one() / T::from_usize_lossy(start.len());
    for &j in &start {
        p[j] = share;
    }

    let mut q = problem.fitted(&p);
    let mut trace = vec![problem.objective(&q) * n_t];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let c = problem.gradient(&q);
        let (max_c, ok) = certificate(&c, &p, opts.fenchel_tol);
        if ok {
            converged = true;
            break;
        }
        iterations += 1;

        let mut support: Vec<usize> = (0..m).filter(|&j| p[j] > T::zero()).collect();
        let mut added = None;
        if max_c > T::one() + opts.fenchel_tol {
            let best = (0..m)
                .max_by(|&a, &b| c[a].partial_cmp(&c[b]).unwrap().then(b.cmp(&a)))
                .unwrap();
            if p[best] <= T::zero() {
                support.push(best);
                support.sort_unstable();
                added = Some(best);
            }
        }

        // support reduction on the fixed quadratic model
        let mut current = p.clone();
        let mut target = vec![T::zero(); m];
        let mut dropped_new = false;
        while let Some(sol) = problem.quadratic_step(&q, &c, &support) {
            target.iter_mut().for_each(|v| *v = T::zero());
            for (&j, &v) in support.iter().zip(&sol) {
                target[j] = v;
            }
            // first coordinate to reach zero on the segment current -> target
            let mut hit: Option<(usize, T)> = None;
            for &j in &support {
                if target[j] <= T::zero() {
                    let denom = current[j] - target[j];
                    let l = if denom > T::zero() {
                        current[j] / denom
                    } else {
                        T::zero()
                    };
                    if hit.is_none_or(|(_, best)| l < best) {
                        hit = Some((j, l));
                    }
                }
            }
            let Some((j0, lambda)) = hit else { break };
            for &j in &support {
                current[j] = current[j] + lambda * (target[j] - current[j]);
            }
            current[j0] = T::zero();
            if Some(j0) == added {
                dropped_new = true;
            }
            support.retain(|&j| j != j0 && current[j] > T::zero());
            if support.is_empty() {
                break;
            }
        }

        let psi0 = problem.objective(&q) - p.iter().copied().sum::<T>();
        let mut next = if support.is_empty() || target.iter().all(|&v| v == T::zero()) {
            None
        } else {
            armijo(&problem, &p, &c, psi0, &target)
        };
        if dropped_new || next.is_none() {
            if let Some(j) = added {
                let base = next.as_deref().unwrap_or(&p).to_vec();
                let qb = problem.fitted(&base);
                let cb = problem.gradient(&qb);
                next = vertex_step(&problem, &base, &qb, &cb, j).or(next);
            }
        }
        let Some(mut next) = next else {
            log::debug!("support reduction stalled after {iterations} iterations");
            break;
        };
        for v in next.iter_mut() {
            if *v < T::zero() {
                *v = T::zero();
            }
        }
        normalize(&mut next);
        p = next;
        q = problem.fitted(&p);
        trace.push(problem.objective(&q) * n_t);
    }

    // drop negligible masses and re-certify
    for v in p.iter_mut() {
        if *v < opts.drop_tol {
            *v = T::zero();
        }
    }
    normalize(&mut p);
    q = problem.fitted(&p);
    let c = problem.gradient(&q);
    let (max_fenchel, ok) = certificate(&c, &p, opts.fenchel_tol);
    let report = FitReport {
        loglik: problem.objective(&q) * n_t,
        iterations,
        max_fenchel,
        support_size: p.iter().filter(|&&v| v > T::zero()).count(),
        converged: converged && ok,
        trace,
    };
    Ok((p, report))
}

/// Builds the incidence of `points` in `data` and fits; the returned distribution keeps
/// only points with positive mass.
pub fn fit_distribution<T: Scalar>(
    data: &Dataset<T>,
    points: &[(T, T)],
    opts: &FitOptions<T>,
) -> Result<(DiscreteDistribution<T>, FitReport<T>), FitError> {
    if points.is_empty() {
        return Err(FitError::NoCandidates);
    }
    let h = incidence(data, points);
    let (p, report) = fit(&h, &data.frequencies(), opts)?;
    let (pts, ms): (Vec<_>, Vec<_>) = points
        .iter()
        .zip(&p)
        .filter(|(_, &m)| m > T::zero())
        .map(|(&pt, &m)| (pt, m))
        .unzip();
    Ok((DiscreteDistribution::new(pts, ms)?, report))
}

/// Fenchel left-hand side for rectangle data: at each test point `z`,
/// `Σ_R f_R 1{z ∈ R} / (n P_F(R))`.
pub fn fenchel_check_ic2<T: Scalar>(
    data: &Dataset<T>,
    dist: &DiscreteDistribution<T>,
    test_points: &[(T, T)],
) -> Result<Vec<T>, FitError> {
    let n_t = T::from_u64(data.n()).unwrap();
    let probs: Vec<T> = data
        .rectangles()
        .iter()
        .map(|r| {
            dist.points()
                .iter()
                .zip(dist.masses())
                .filter(|(&(x, y), _)| r.contains(x, y))
                .map(|(_, &m)| m)
                .sum()
        })
        .collect();
    test_points
        .iter()
        .map(|&(x, y)| {
            let mut s = T::zero();
            for (row, (r, &pr)) in data.rectangles().iter().zip(&probs).enumerate() {
                if r.contains(x, y) {
                    if pr <= T::zero() {
                        return Err(FitError::ZeroDenominator { row });
                    }
                    s = s + T::from_u64(r.freq).unwrap() / (n_t * pr);
                }
            }
            Ok(s)
        })
        .collect()
}

/// Fenchel left-hand side for current-status data, written with the four regions and
/// their denominators `F`, `F_1 - F`, `F_2 - F` and `1 - F_1 - F_2 + F`.
pub fn fenchel_check_cs<T: Scalar>(
    obs: &[CurrentStatusObs<T>],
    dist: &DiscreteDistribution<T>,
    test_points: &[(T, T)],
) -> Result<Vec<T>, FitError> {
    if obs.is_empty() {
        return Err(FitError::DimensionMismatch("no observations".into()));
    }
    let n_t = T::from_usize_lossy(obs.len());
    let denoms: Vec<T> = obs
        .iter()
        .map(|o| {
            let f = dist.df(o.t, o.u);
            match (o.delta1, o.delta2) {
                (true, true) => f,
                (true, false) => dist.marginal1(o.t) - f,
                (false, true) => dist.marginal2(o.u) - f,
                (false, false) => T::one() - dist.marginal1(o.t) - dist.marginal2(o.u) + f,
            }
        })
        .collect();
    test_points
        .iter()
        .map(|&(t1, t2)| {
            let mut s = T::zero();
            for (row, (o, &d)) in obs.iter().zip(&denoms).enumerate() {
                let in_x = if o.delta1 { o.t >= t1 } else { o.t < t1 };
                let in_y = if o.delta2 { o.u >= t2 } else { o.u < t2 };
                if in_x && in_y {
                    if d <= T::zero() {
                        return Err(FitError::ZeroDenominator { row });
                    }
                    s = s + T::one() / (n_t * d);
                }
            }
            Ok(s)
        })
        .collect()
}

/// How the sieve coordinates are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum SieveDesign {
    /// Coordinates are positive multiples of `n^{-1/3}` in `(0, 1]`, cycled through in
    /// order for x and randomly permuted for y; points repeat on a coarse lattice.
    Lattice,
    /// Cell midpoints `(i - 1/2) / m` for `i = 1..=m`, x in order and y randomly permuted:
    /// no two sieve points share a coordinate, and no coordinate ties with a grid of
    /// evaluation points at multiples of `1/m`.
    #[default]
    Permutation,
}

/// Lattice sieve of `⌊n^{2/3}⌋` points followed by the four vertices of the unit square.
pub fn random_sieve<T: Scalar>(n: usize, seed: u64) -> Vec<(T, T)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_sieve_with(n, SieveDesign::Lattice, &mut rng)
}

/// Sieve of `m = ⌊n^{2/3}⌋` points in the chosen design, followed by the four vertices of
/// the unit square.
pub fn random_sieve_with<T: Scalar, R: rand::Rng + ?Sized>(
    n: usize,
    design: SieveDesign,
    rng: &mut R,
) -> Vec<(T, T)> {
    assert!(n >= 8, "sieve needs n >= 8");
    let m = ((n as f64).powf(2.0 / 3.0) + 1e-9).floor() as usize;
    let xs: Vec<T> = match design {
        SieveDesign::Lattice => {
            let root = (n as f64).cbrt();
            let steps = ((root + 1e-9).floor() as usize).max(1);
            (0..m)
                .map(|i| T::lit(((i % steps) + 1) as f64 / root))
                .collect()
        }
        SieveDesign::Permutation => (1..=m)
            .map(|i| T::lit((i as f64 - 0.5) / m as f64))
            .collect(),
    };
    let mut ys = xs.clone();
    ys.shuffle(rng);
    let mut points: Vec<(T, T)> = xs.into_iter().zip(ys).collect();
    let (o, l) = (T::zero(), T::one());
    points.extend([(o, o), (l, o), (o, l), (l, l)]);
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::censdata::parse_rectangle_csv;

    #[test]
    fn loglik_trivial_cases() {
        let h = IncidenceMatrix::from_rows(vec![vec![true]]);
        assert_eq!(loglik(&h, &[1], &[1.0_f64]).unwrap(), 0.0);

        let h = IncidenceMatrix::from_rows(vec![vec![true, false], vec![false, true]]);
        let ll = loglik(&h, &[1, 1], &[0.5_f64, 0.5]).unwrap();
        assert!((ll - 2.0 * 0.5_f64.ln()).abs() < 1e-15);
        assert_eq!(
            loglik(&h, &[1, 1], &[1.0_f64, 0.0]).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(matches!(
            loglik(&h, &[1], &[0.5_f64, 0.5]),
            Err(FitError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn symmetric_two_point_fit() {
        let h = IncidenceMatrix::from_rows(vec![vec![true, false], vec![false, true]]);
        let (p, rep) = fit::<f64>(&h, &[1, 1], &FitOptions::default()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert!(rep.converged);
    }

    #[test]
    fn single_interior_candidate_gets_all_mass() {
        let d = parse_rectangle_csv::<f64>("0,1,0,1,4").unwrap();
        let (dist, rep) = fit_distribution(
            &d,
            &[(5.0, 5.0), (0.5, 0.5), (-1.0, 0.2)],
            &FitOptions::default(),
        )
        .unwrap();
        assert_eq!(dist.points(), &[(0.5, 0.5)]);
        assert_eq!(dist.masses(), &[1.0]);
        assert!(rep.converged);
        assert_eq!(rep.support_size, 1);
    }

    #[test]
    fn unfittable_row_is_named() {
        let d = parse_rectangle_csv::<f64>("0,1,0,1,1\n5,6,5,6,2").unwrap();
        let h = incidence(&d, &[(0.5, 0.5)]);
        assert_eq!(
            fit::<f64>(&h, &d.frequencies(), &FitOptions::default()).unwrap_err(),
            FitError::Unfittable { row: 1 }
        );
    }

    #[test]
    fn non_convergence_is_reported() {
        let h = IncidenceMatrix::from_rows(vec![
            vec![true, false, true],
            vec![false, true, true],
            vec![true, true, false],
        ]);
        let opts = FitOptions {
            max_iter: 0,
            ..FitOptions::default()
        };
        let (_, rep) = fit::<f64>(&h, &[3, 1, 2], &opts).unwrap();
        assert!(!rep.converged);
    }

    #[test]
    fn one_point_fenchel_equality() {
        let d = parse_rectangle_csv::<f64>("0,1,0,1,1").unwrap();
        let dist = DiscreteDistribution::new(vec![(1.0, 1.0)], vec![1.0]).unwrap();
        let lhs = fenchel_check_ic2(&d, &dist, &[(1.0, 1.0), (9.0, 9.0)]).unwrap();
        assert_eq!(lhs, vec![1.0, 0.0]);

        let obs = [CurrentStatusObs::new(0.5, 0.5, true, true)];
        let dist = DiscreteDistribution::new(vec![(0.2, 0.2)], vec![1.0]).unwrap();
        let lhs = fenchel_check_cs(&obs, &dist, &[(0.2, 0.2)]).unwrap();
        assert_eq!(lhs, vec![1.0]);
    }

    #[test]
    fn zero_probability_observation_is_diagnosed() {
        let d = parse_rectangle_csv::<f64>("0,1,0,1,1\n2,3,2,3,1").unwrap();
        let dist = DiscreteDistribution::new(vec![(1.0, 1.0)], vec![1.0]).unwrap();
        assert_eq!(
            fenchel_check_ic2(&d, &dist, &[(2.5, 2.5)]).unwrap_err(),
            FitError::ZeroDenominator { row: 1 }
        );
    }

    #[test]
    fn sieve_layout() {
        let pts = random_sieve::<f64>(1000, 7);
        assert_eq!(pts.len(), 104);
        for &(x, y) in &pts {
            for v in [x, y] {
                assert!((v * 10.0 - (v * 10.0).round()).abs() < 1e-9, "{v}");
                assert!((0.0..=1.0).contains(&v));
            }
        }
        assert_eq!(
            &pts[100..],
            &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        );
        assert_eq!(pts, random_sieve::<f64>(1000, 7));
        assert_ne!(pts, random_sieve::<f64>(1000, 8));
        // y coordinates are a permutation of the x coordinates
        let mut xs: Vec<f64> = pts[..100].iter().map(|p| p.0).collect();
        let mut ys: Vec<f64> = pts[..100].iter().map(|p| p.1).collect();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        assert_eq!(xs, ys);
    }

    #[test]
    fn permutation_sieve_has_distinct_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_sieve_with::<f64, _>(1000, SieveDesign::Permutation, &mut rng);
        assert_eq!(pts.len(), 104);
        let mut ys: Vec<f64> = pts[..100].iter().map(|p| p.1).collect();
        ys.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (1..=100).map(|i| (i as f64 - 0.5) / 100.0).collect();
        assert_eq!(ys, expected);
        assert!(pts[..100]
            .iter()
            .enumerate()
            .all(|(i, p)| p.0 == expected[i]));
    }

    #[test]
    fn masses_csv_round_trip() {
        let dist =
            DiscreteDistribution::new(vec![(0.0, 21.0), (22.0, 28.0)], vec![0.25, 0.75]).unwrap();
        let back = DiscreteDistribution::<f64>::parse_csv(&dist.to_csv()).unwrap();
        assert_eq!(back, dist);
        assert!(DiscreteDistribution::<f64>::parse_csv("x,y,mass\n1,2\n").is_err());
    }

    #[test]
    fn df_and_marginals() {
        let dist = DiscreteDistribution::new(vec![(0.2, 0.8), (0.6, 0.1)], vec![0.4, 0.6]).unwrap();
        assert_eq!(dist.df(0.6, 0.8), 1.0);
        assert_eq!(dist.df(0.5, 0.9), 0.4);
        assert_eq!(dist.marginal1(0.3), 0.4);
        assert_eq!(dist.marginal2(0.5), 0.6);
    }
}
