//! Triweight kernel, its fourth-order companion, and their integrated and
//! reflected (upper-tail) forms. Integrated kernels use the exact antiderivative
//! polynomials.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
}

#[inline]
fn horner<T: Scalar>(x: T, coeffs: &[f64]) -> T {
    coeffs
        .iter()
        .rev()
        .fold(T::zero(), |acc, &c| acc * x + T::lit(c))
}

/// `K(x) = 35/32 (1 - x^2)^3` on `[-1, 1]`.
pub fn triweight<T: Scalar>(x: T) -> T {
    if x.abs() >= T::one() {
        return T::zero();
    }
    let w = T::one() - x * x;
    T::lit(35.0 / 32.0) * w * w * w
}

/// `IK(x) = ∫_{-inf}^x K`.
pub fn triweight_integrated<T: Scalar>(x: T) -> T {
    if x <= -T::one() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        let x2 = x * x;
        // 1/2 + 35/32 x - 35/32 x^3 + 21/32 x^5 - 5/32 x^7
        T::lit(0.5) + x * horner(x2, &[35.0 / 32.0, -35.0 / 32.0, 21.0 / 32.0, -5.0 / 32.0])
    }
}

/// `IK^b(x) = ∫_x^inf K = 1 - IK(x)`.
pub fn triweight_upper<T: Scalar>(x: T) -> T {
    triweight_integrated(-x)
}

/// Fourth-order triweight: `315/512 (1 - u^2)^3 (3 - 11 u^2)`; integrates to one
/// with vanishing second moment.
pub fn triweight4<T: Scalar>(x: T) -> T {
    if x.abs() >= T::one() {
        return T::zero();
    }
    let x2 = x * x;
    let w = T::one() - x2;
    T::lit(315.0 / 512.0) * w * w * w * (T::lit(3.0) - T::lit(11.0) * x2)
}

pub fn triweight4_integrated<T: Scalar>(x: T) -> T {
    if x <= -T::one() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        let x2 = x * x;
        T::lit(0.5)
            + x * horner(
                x2,
                &[
                    945.0 / 512.0,
                    -525.0 / 128.0,
                    1323.0 / 256.0,
                    -405.0 / 128.0,
                    385.0 / 512.0,
                ],
            )
    }
}

pub fn triweight4_upper<T: Scalar>(x: T) -> T {
    triweight4_integrated(-x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelOrder {
    /// Nonnegative triweight.
    Second,
    /// Signed fourth-order triweight.
    Fourth,
}

impl KernelOrder {
    pub fn density<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Second => triweight(x),
            Self::Fourth => triweight4(x),
        }
    }

    pub fn integrated<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Second => triweight_integrated(x),
            Self::Fourth => triweight4_integrated(x),
        }
    }

    pub fn integrated_upper<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Second => triweight_upper(x),
            Self::Fourth => triweight4_upper(x),
        }
    }

    /// `∫ x^2 K(x) dx`.
    pub fn second_moment<T: Scalar>(self) -> T {
        match self {
            Self::Second => T::lit(1.0 / 9.0),
            Self::Fourth => T::zero(),
        }
    }

    /// `∫ K(x)^2 dx`.
    pub fn roughness<T: Scalar>(self) -> T {
        match self {
            Self::Second => T::lit(350.0 / 429.0),
            Self::Fourth => T::lit(3780.0 / 2431.0),
        }
    }
}

/// Kernel choice plus bandwidth. Scaled forms are `K_h(x) = K(x/h)/h`,
/// `IK_h(x) = IK(x/h)` and `IK^b_h(x) = IK^b(x/h)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub order: KernelOrder,
    pub h: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn new(order: KernelOrder, h: T) -> Result<Self, KernelError> {
        if !(h > T::zero() && h.is_finite()) {
            return Err(KernelError::Bandwidth(h.to_f64_lossy()));
        }
        Ok(Self { order, h })
    }

    pub fn triweight(h: T) -> Result<Self, KernelError> {
        Self::new(KernelOrder::Second, h)
    }

    /// `h = n^{-1/6}`.
    pub fn default_bandwidth(n: u64) -> T {
        T::lit((n as f64).powf(-1.0 / 6.0))
    }

    #[inline]
    pub fn k_h(&self, x: T) -> T {
        self.order.density(x / self.h) / self.h
    }

    #[inline]
    pub fn ik_h(&self, x: T) -> T {
        self.order.integrated(x / self.h)
    }

    #[inline]
    pub fn ikb_h(&self, x: T) -> T {
        self.order.integrated_upper(x / self.h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule on `[a, b]` with `m` (even) panels.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    const PANELS: usize = 20_000;

    #[test]
    fn triweight_values() {
        assert_eq!(triweight(0.0_f64), 1.09375);
        assert_eq!(triweight(1.0_f64), 0.0);
        assert_eq!(triweight(-1.0_f64), 0.0);
        assert_eq!(triweight(3.0_f64), 0.0);
    }

    #[test]
    fn triweight_moments_match_quadrature() {
        let mass = simpson(triweight::<f64>, -1.0, 1.0, PANELS);
        let m2 = simpson(|x| x * x * triweight(x), -1.0, 1.0, PANELS);
        let r = simpson(|x| triweight(x).powi(2), -1.0, 1.0, PANELS);
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
        assert!((m2 - KernelOrder::Second.second_moment::<f64>()).abs() < 1e-10);
        assert!((r - KernelOrder::Second.roughness::<f64>()).abs() < 1e-10);
        assert!((r - 0.815850815850).abs() < 1e-9);
    }

    #[test]
    fn integrated_kernel() {
        assert_eq!(triweight_integrated(-1.0_f64), 0.0);
        assert_eq!(triweight_integrated(1.0_f64), 1.0);
        assert!((triweight_integrated(0.0_f64) - 0.5).abs() < 1e-15);
        for &x in &[-0.9, -0.5, 0.0, 0.3, 0.5, 0.77] {
            let q = simpson(triweight::<f64>, -1.0, x, PANELS);
            assert!((triweight_integrated(x) - q).abs() < 1e-12, "x={x}");
        }
        assert!((triweight_integrated(0.5_f64) - 0.929443359375).abs() < 1e-12);
    }

    #[test]
    fn upper_integrated_kernel() {
        for i in -30..=30 {
            let x = i as f64 / 20.0;
            assert!((triweight_upper(x) + triweight_integrated(x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(triweight_upper(-1.0_f64), 1.0);
        assert!((triweight_upper(0.3_f64) + triweight_integrated(0.3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fourth_order_kernel() {
        let mass = simpson(triweight4::<f64>, -1.0, 1.0, PANELS);
        let m2 = simpson(|u| u * u * triweight4(u), -1.0, 1.0, PANELS);
        let r = simpson(|u| triweight4(u).powi(2), -1.0, 1.0, PANELS);
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
        assert!(m2.abs() < 1e-10, "{m2}");
        assert!((r - KernelOrder::Fourth.roughness::<f64>()).abs() < 1e-10);
        assert!((triweight4(0.0_f64) - 945.0 / 512.0).abs() < 1e-15);
        assert!(triweight4(0.9_f64) < 0.0);
        for &x in &[-0.8, -0.2, 0.1, 0.6] {
            let q = simpson(triweight4::<f64>, -1.0, x, PANELS);
            assert!((triweight4_integrated(x) - q).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn scaled_forms() {
        let k = KernelSpec::triweight(0.1_f64).unwrap();
        assert!((k.k_h(0.0) - 10.9375).abs() < 1e-12);
        assert_eq!(k.ik_h(0.3), 1.0);
        assert_eq!(k.ikb_h(0.3), 0.0);
        assert!(KernelSpec::triweight(0.0_f64).is_err());
        assert!(KernelSpec::triweight(f64::NAN).is_err());
        let k32 = KernelSpec::triweight(0.25_f32).unwrap();
        assert!((k32.ik_h(0.0) - 0.5).abs() < 1e-7);
    }
}
