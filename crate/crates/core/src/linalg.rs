//! Dense symmetric positive (semi)definite solves for the small normal systems of the
//! NPMLE inner step.

use crate::scalar::Scalar;

/// Solves `A x = b` for symmetric `A` (row-major, `k x k`) by Cholesky. When `A` is
/// singular or nearly so, a ridge proportional to its mean diagonal is added and the
/// factorization retried.
pub(crate) fn solve_spd<T: Scalar>(a: &[T], b: &[T], k: usize) -> Option<Vec<T>> {
    debug_assert_eq!(a.len(), k * k);
    debug_assert_eq!(b.len(), k);
    if k == 0 {
        return Some(Vec::new());
    }
    let mean_diag = (0..k).map(|i| a[i * k + i]).sum::<T>() / T::from_usize_lossy(k);
    if !(mean_diag > T::zero()) || !mean_diag.is_finite() {
        return None;
    }
    let mut ridge = T::zero();
    for _ in 0..8 {
        if let Some(l) = cholesky(a, k, ridge) {
            return Some(back_substitute(&l, b, k));
        }
        ridge = if ridge == T::zero() {
            mean_diag * T::epsilon() * T::lit(16.0)
        } else {
            ridge * T::lit(100.0)
        };
    }
    None
}

fn cholesky<T: Scalar>(a: &[T], k: usize, ridge: T) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); k * k];
    let tiny = T::epsilon() * T::lit(8.0);
    for j in 0..k {
        let mut d = a[j * k + j] + ridge;
        for p in 0..j {
            d = d - l[j * k + p] * l[j * k + p];
        }
        if !(d > tiny * (a[j * k + j].abs() + ridge)) {
            return None;
        }
        let d = d.sqrt();
        l[j * k + j] = d;
        for i in j + 1..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s = s - l[i * k + p] * l[j * k + p];
            }
            l[i * k + j] = s / d;
        }
    }
    Some(l)
}

fn back_substitute<T: Scalar>(l: &[T], b: &[T], k: usize) -> Vec<T> {
    let mut y = b.to_vec();
    for i in 0..k {
        let mut s = y[i];
        for p in 0..i {
            s = s - l[i * k + p] * y[p];
        }
        y[i] = s / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut s = y[i];
        for p in i + 1..k {
            s = s - l[p * k + i] * y[p];
        }
        y[i] = s / l[i * k + i];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i * 3 + j] * x_true[j]).sum())
            .collect();
        let x = solve_spd(&a, &b, 3).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_system_gets_ridge() {
        // two identical columns
        let a = [1.0, 1.0, 1.0, 1.0];
        let x = solve_spd(&a, &[2.0_f64, 2.0], 2).unwrap();
        assert!((x[0] + x[1] - 2.0).abs() < 1e-6);
        assert!(solve_spd(&[0.0], &[1.0], 1).is_none());
    }
}
