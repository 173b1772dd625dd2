//! Oracles and reference values shared by the integration tests. Nothing here calls
//! into the code under test except to build inputs.
#![allow(dead_code)]

use bicens::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Rectangles carrying MLE mass for the BF data as `(L1, R1, L2, R2, mass)`, with
/// `inf` for unknown upper bounds.
pub const BF_SUPPORT: [(f64, f64, f64, f64, f64); 13] = [
    (0.0, 0.0, 0.0, 0.0, 0.013676984),
    (0.0, 0.0, 21.0, f64::INFINITY, 0.307533525),
    (3.0, 3.0, 21.0, f64::INFINITY, 0.087051863),
    (6.0, 6.0, 6.0, 6.0, 0.014940282),
    (6.0, 6.0, 18.0, f64::INFINITY, 0.062521573),
    (9.0, 9.0, 9.0, 9.0, 0.010009349),
    (9.0, 9.0, 27.0, f64::INFINITY, 0.071073995),
    (12.0, 12.0, 0.0, 0.0, 0.004836043),
    (12.0, 12.0, 24.0, f64::INFINITY, 0.053334241),
    (15.0, 15.0, 0.0, 0.0, 0.042456241),
    (15.0, 15.0, 21.0, f64::INFINITY, 0.021573343),
    (21.0, f64::INFINITY, 15.0, 15.0, 0.044427509),
    (21.0, f64::INFINITY, 18.0, f64::INFINITY, 0.266565054),
];

pub fn bounds(c: &CanonicalRectangle64) -> (f64, f64, f64, f64) {
    (
        c.l1().value(),
        c.r1().value(),
        c.l2().value(),
        c.r2().value(),
    )
}

/// Composite Simpson rule with `panels` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn random_bound(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0..=4) as f64
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval<f64> {
    let a = random_bound(rng);
    let b = random_bound(rng);
    let (lo, hi) = (a.min(b), a.max(b));
    match rng.gen_range(0..10) {
        0 => Interval::closed(ExtendedReal::neg_inf(), ExtendedReal::finite(hi)),
        1 => Interval {
            lo: ExtendedReal::finite(lo),
            hi: ExtendedReal::pos_inf(),
            lo_open: rng.gen_bool(0.5),
        },
        2 if lo < hi => Interval {
            lo: ExtendedReal::finite(lo),
            hi: ExtendedReal::finite(hi),
            lo_open: true,
        },
        _ => Interval::closed(ExtendedReal::finite(lo), ExtendedReal::finite(hi)),
    }
}

pub fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset<f64> {
    let k = rng.gen_range(1..=6);
    let rects = (0..k)
        .map(|_| {
            let x = random_interval(rng);
            let y = random_interval(rng);
            CensoringRectangle::new(x, y, rng.gen_range(1..=3)).unwrap()
        })
        .collect();
    Dataset::new(rects, DataKind::Case2).unwrap()
}

/// Intersection of two intervals; `None` when empty.
fn meet(a: &Interval<f64>, b: &Interval<f64>) -> Option<Interval<f64>> {
    let (lo, lo_open) = match a.lo.cmp(&b.lo) {
        std::cmp::Ordering::Less => (b.lo, b.lo_open),
        std::cmp::Ordering::Greater => (a.lo, a.lo_open),
        std::cmp::Ordering::Equal => (a.lo, a.lo_open || b.lo_open),
    };
    let hi = a.hi.min(b.hi);
    let nonempty = lo < hi || (lo == hi && !lo_open && lo.is_finite());
    nonempty.then_some(Interval { lo, hi, lo_open })
}

/// Every subset of rectangles with a nonempty intersection that no further rectangle
/// meets.
pub fn brute_force(data: &Dataset<f64>) -> Vec<(Interval<f64>, Interval<f64>)> {
    let rects = data.rectangles();
    let k = rects.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << k) {
        let mut acc: Option<(Interval<f64>, Interval<f64>)> = None;
        let mut empty = false;
        for (_, r) in rects
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
        {
            let next = match acc {
                None => Some((r.x, r.y)),
                Some((x, y)) => meet(&x, &r.x).zip(meet(&y, &r.y)),
            };
            if next.is_none() {
                empty = true;
                break;
            }
            acc = next;
        }
        if empty {
            continue;
        }
        let (x, y) = acc.unwrap();
        let extendable = rects
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) == 0)
            .any(|(_, r)| meet(&x, &r.x).is_some() && meet(&y, &r.y).is_some());
        if !extendable {
            out.push((x, y));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Compares `maximal_intersections` with the arrangement oracle on one random instance.
pub fn geometry_agrees(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = random_dataset(&mut rng);
    let mut got: Vec<_> = maximal_intersections(&data)
        .iter()
        .map(|c| (c.x, c.y))
        .collect();
    got.sort();
    if got == brute_force(&data) {
        Ok(())
    } else {
        Err(format!("seed {seed}: {}", data.to_csv()))
    }
}

fn loglik_dense(rows: &[Vec<bool>], freq: &[u64], p: &[f64]) -> f64 {
    rows.iter()
        .zip(freq)
        .map(|(row, &f)| {
            let q: f64 = row.iter().zip(p).filter(|(&b, _)| b).map(|(_, &m)| m).sum();
            f as f64 * q.ln()
        })
        .sum()
}

/// Maximum over the simplex: the first `m - 2` coordinates run over a grid of spacing
/// `1 / steps`, the remaining two-coordinate split is found by ternary search on the
/// concave restriction.
pub fn simplex_oracle(rows: &[Vec<bool>], freq: &[u64], m: usize, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut prefix = vec![0usize; m.saturating_sub(2)];
    loop {
        let used: usize = prefix.iter().sum();
        if used <= steps {
            let rest = 1.0 - used as f64 / steps as f64;
            let mut p: Vec<f64> = prefix.iter().map(|&k| k as f64 / steps as f64).collect();
            let value = if m == 1 {
                loglik_dense(rows, freq, &[1.0])
            } else {
                let eval = |s: f64, p: &mut Vec<f64>| {
                    p.truncate(m - 2);
                    p.push(s);
                    p.push(rest - s);
                    loglik_dense(rows, freq, p)
                };
                let (mut a, mut b) = (0.0, rest);
                for _ in 0..100 {
                    let c = a + (b - a) / 3.0;
                    let d = b - (b - a) / 3.0;
                    if eval(c, &mut p) < eval(d, &mut p) {
                        a = c;
                    } else {
                        b = d;
                    }
                }
                eval(0.5 * (a + b), &mut p)
                    .max(eval(0.0, &mut p))
                    .max(eval(rest, &mut p))
            };
            best = best.max(value);
        }
        // next grid prefix
        let mut i = 0;
        loop {
            if i == prefix.len() {
                return best;
            }
            prefix[i] += 1;
            if prefix.iter().sum::<usize>() <= steps {
                break;
            }
            prefix[i] = 0;
            i += 1;
        }
    }
}

/// Fits `instances` random small problems and compares each with the simplex oracle;
/// returns the smallest `fit - oracle` log-likelihood margin.
pub fn fit_vs_oracle(instances: usize) -> Result<f64, String> {
    let mut tested = 0;
    let mut seed = 0u64;
    let mut worst = f64::INFINITY;
    while tested < instances {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let data = random_dataset(&mut rng);
        let m = rng.gen_range(1..=4);
        let points: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                (
                    rng.gen_range(0..=8) as f64 / 2.0,
                    rng.gen_range(0..=8) as f64 / 2.0,
                )
            })
            .collect();
        let h = incidence(&data, &points);
        if !h.zero_rows().is_empty() {
            continue;
        }
        tested += 1;
        let freq = data.frequencies();
        let (p, report) = fit(&h, &freq, &FitOptions::default()).map_err(|e| e.to_string())?;
        if !report.converged {
            return Err(format!("seed {seed}: fit did not converge"));
        }
        if (p.iter().sum::<f64>() - 1.0).abs() > 1e-10 || p.iter().any(|&v| v < 0.0) {
            return Err(format!("seed {seed}: masses {p:?} off the simplex"));
        }
        let rows: Vec<Vec<bool>> = (0..h.rows()).map(|i| h.row(i).to_vec()).collect();
        let oracle = simplex_oracle(&rows, &freq, m, 200);
        let ll = loglik(&h, &freq, &p).map_err(|e| e.to_string())?;
        if ll < oracle - 1e-6 {
            return Err(format!("seed {seed}: fit {ll} < oracle {oracle}"));
        }
        // the oracle is itself within grid resolution of the optimum
        if ll > oracle + 1e-2 {
            return Err(format!("seed {seed}: fit {ll} far above oracle {oracle}"));
        }
        worst = worst.min(ll - oracle);
    }
    Ok(worst)
}
