//! Purely discrete plug-in estimator for bivariate current-status data on `[0, 1]^2`.
//!
//! At `(t, u)` the estimate is the fraction of observations in the square
//! `A = [t-h, t+h] × [u-h, u+h]` with both indicators equal to one. Evaluated on a
//! lattice it defines (possibly negative) point masses through the cumulative-sum
//! equations, which are triangular on a lattice and solved by inclusion-exclusion.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::censdata::CurrentStatusObs;
use crate::model::{AsymptoticError, BivariateModel, ObservationDensity};
use crate::npmle::DiscreteDistribution;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum PluginError {
    #[error("no observation in the square of half-width {h} around ({t}, {u})")]
    EmptyCell { t: f64, u: f64, h: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

fn in_square<T: Scalar>(o: &CurrentStatusObs<T>, t: T, u: T, h: T) -> bool {
    (o.t - t).abs() <= h && (o.u - u).abs() <= h
}

fn ratio<T: Scalar>(hits: usize, count: usize, t: T, u: T, h: T) -> Result<T, PluginError> {
    if count == 0 {
        return Err(PluginError::EmptyCell {
            t: t.to_f64_lossy(),
            u: u.to_f64_lossy(),
            h: h.to_f64_lossy(),
        });
    }
    Ok(T::from_usize_lossy(hits) / T::from_usize_lossy(count))
}

/// Local ratio without boundary treatment.
pub fn plugin_eval<T: Scalar>(
    data: &[CurrentStatusObs<T>],
    t: T,
    u: T,
    h: T,
) -> Result<T, PluginError> {
    let (mut hits, mut count) = (0usize, 0usize);
    for o in data.iter().filter(|o| in_square(o, t, u, h)) {
        count += 1;
        if o.delta1 && o.delta2 {
            hits += 1;
        }
    }
    ratio(hits, count, t, u, h)
}

/// Indicator after the boundary rule for one coordinate: above `1-h`, observations at
/// or beyond `2-t-h` count as `1`; below `h`, observations at or below `h-t` count as `0`.
#[inline]
fn flipped<T: Scalar>(delta: bool, obs: T, at: T, h: T) -> bool {
    let one = T::one();
    let mut d = delta;
    if at > one - h && obs >= one + one - at - h {
        d = true;
    }
    if at < h && obs <= h - at {
        d = false;
    }
    d
}

/// Local ratio with the boundary flipping rule applied before summation.
pub fn plugin_eval_boundary<T: Scalar>(
    data: &[CurrentStatusObs<T>],
    t: T,
    u: T,
    h: T,
) -> Result<T, PluginError> {
    let (mut hits, mut count) = (0usize, 0usize);
    for o in data.iter().filter(|o| in_square(o, t, u, h)) {
        count += 1;
        if flipped(o.delta1, o.t, t, h) && flipped(o.delta2, o.u, u, h) {
            hits += 1;
        }
    }
    ratio(hits, count, t, u, h)
}

/// Plug-in values on a rectangular lattice and the masses they define.
#[derive(Clone, Debug, PartialEq)]
pub struct PluginGrid<T> {
    pub spacing: T,
    pub h: T,
    pub xs: Vec<T>,
    pub ys: Vec<T>,
    /// Row-major: `values[i * ys.len() + j]` is the estimate at `(xs[i], ys[j])`.
    pub values: Vec<T>,
    pub masses: Vec<T>,
}

impl<T: Scalar> PluginGrid<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.ys.len() + j]
    }

    pub fn mass(&self, i: usize, j: usize) -> T {
        self.masses[i * self.ys.len() + j]
    }

    /// `Σ_{i' <= i, j' <= j} p_{i'j'}`.
    pub fn cumulative(&self, i: usize, j: usize) -> T {
        (0..=i)
            .flat_map(|a| (0..=j).map(move |b| (a, b)))
            .map(|(a, b)| self.mass(a, b))
            .sum()
    }

    /// The signed discrete measure carried by the lattice.
    pub fn to_distribution(&self) -> DiscreteDistribution<T> {
        let points = self
            .xs
            .iter()
            .flat_map(|&x| self.ys.iter().map(move |&y| (x, y)))
            .collect();
        DiscreteDistribution::new(points, self.masses.clone()).expect("finite lattice")
    }

    /// CSV with header `x,y,value,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value,mass\n");
        for (i, &x) in self.xs.iter().enumerate() {
            for (j, &y) in self.ys.iter().enumerate() {
                let _ = writeln!(out, "{x},{y},{},{}", self.value(i, j), self.mass(i, j));
            }
        }
        out
    }
}

/// Lattice `0, s, 2s, ...` clamped to `[0, 1]` with `s = n^{-1/3}`, so that both 0 and 1
/// are included.
pub fn plugin_lattice<T: Scalar>(n: u64) -> Vec<T> {
    let root = (n as f64).cbrt();
    let steps = (root - 1e-9).ceil() as usize;
    let mut xs: Vec<T> = (0..=steps)
        .map(|k| T::lit((k as f64 / root).min(1.0)))
        .collect();
    xs.dedup();
    xs
}

/// Plug-in grid at spacing `n^{-1/3}` with half-width `h = n^{-1/6}`.
pub fn build_plugin_grid<T: Scalar>(
    data: &[CurrentStatusObs<T>],
    n: u64,
) -> Result<PluginGrid<T>, PluginError> {
    if n < 64 {
        return Err(PluginError::Invalid(format!("grid needs n >= 64, got {n}")));
    }
    let xs = plugin_lattice::<T>(n);
    let h = T::lit((n as f64).powf(-1.0 / 6.0));
    let spacing = T::lit((n as f64).cbrt().recip());
    build_plugin_grid_on(data, xs.clone(), xs, spacing, h)
}

/// Plug-in grid on an arbitrary lattice.
pub fn build_plugin_grid_on<T: Scalar>(
    data: &[CurrentStatusObs<T>],
    xs: Vec<T>,
    ys: Vec<T>,
    spacing: T,
    h: T,
) -> Result<PluginGrid<T>, PluginError> {
    if !(h > T::zero()) {
        return Err(PluginError::Invalid("half-width must be positive".into()));
    }
    let cells: Vec<(T, T)> = xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(t, u)| plugin_eval_boundary(data, t, u, h))
        .collect::<Result<Vec<T>, _>>()?;
    let mut grid = PluginGrid {
        spacing,
        h,
        xs,
        ys,
        values,
        masses: Vec::new(),
    };
    grid.masses = solve_masses(&grid);
    Ok(grid)
}

/// Masses solving `Σ_{x_j <= x_i, y_j <= y_i} p_j = F̃(x_i, y_i)` on the lattice:
/// `p_ij = F̃_ij - F̃_{i-1,j} - F̃_{i,j-1} + F̃_{i-1,j-1}`, missing indices read as 0.
pub fn solve_masses<T: Scalar>(grid: &PluginGrid<T>) -> Vec<T> {
    let ny = grid.ys.len();
    let at = |i: isize, j: isize| {
        if i < 0 || j < 0 {
            T::zero()
        } else {
            grid.values[i as usize * ny + j as usize]
        }
    };
    let mut masses = Vec::with_capacity(grid.values.len());
    for i in 0..grid.xs.len() as isize {
        for j in 0..ny as isize {
            masses.push(at(i, j) - at(i - 1, j) - at(i, j - 1) + at(i - 1, j - 1));
        }
    }
    masses
}

/// Asymptotic `(β, σ)` of `n^{1/3}(F̃ - F0)` at an interior point, `c = lim h² n^{1/3}`.
pub fn plugin_asymptotics<T, M, G>(
    t: T,
    u: T,
    c: T,
    f0: &M,
    g: &G,
) -> Result<(T, T), AsymptoticError>
where
    T: Scalar,
    M: BivariateModel<T> + ?Sized,
    G: ObservationDensity<T> + ?Sized,
{
    if !(c > T::zero()) || !c.is_finite() {
        return Err(AsymptoticError::Domain(format!(
            "c must be positive, got {c}"
        )));
    }
    let gv = g.density(t, u);
    if !(gv > T::zero()) {
        return Err(AsymptoticError::Domain(format!(
            "g({t}, {u}) = {gv} is not positive"
        )));
    }
    let f = f0.df(t, u);
    if !(f > T::zero() && f < T::one()) {
        return Err(AsymptoticError::Domain(format!(
            "F0({t}, {u}) = {f} not in (0, 1)"
        )));
    }
    let (f1, f2) = f0.gradient(t, u);
    let (f11, f22) = f0.second_partials(t, u);
    let (g1, g2) = g.gradient(t, u);
    let beta = c * ((f11 + f22) / T::lit(6.0) + (f1 * g1 + f2 * g2) / (T::lit(3.0) * gv));
    let variance = f * (T::one() - f) / (T::lit(4.0) * c * gv);
    Ok((beta, variance.sqrt()))
}

/// Leading variance `4 h² g F0 (1 - F0)` of one centered numerator term
/// `{Δ₁Δ₂ - F0(T, U)} 1_A(T, U)`.
pub fn numerator_variance<T, M, G>(t: T, u: T, h: T, f0: &M, g: &G) -> T
where
    T: Scalar,
    M: BivariateModel<T> + ?Sized,
    G: ObservationDensity<T> + ?Sized,
{
    let f = f0.df(t, u);
    T::lit(4.0) * h * h * g.density(t, u) * f * (T::one() - f)
}
