//! Smoothed maximum likelihood estimator.
//!
//! The fitted masses are integrated against a product of integrated kernels. Near the
//! upper boundary `b` of each axis the integrated kernel is reflected:
//! `IK_h(t - v) + IK^b_h(2b - t - v)`, which reduces to `IK_h(t - v)` whenever
//! `t <= b - h` and the mass lies below `b`. The lower boundary is not corrected.

use crate::kernels::{KernelOrder, KernelSpec};
use crate::model::{AsymptoticError, BivariateModel};
use crate::npmle::DiscreteDistribution;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmleEstimate<T> {
    pub source: DiscreteDistribution<T>,
    pub kernel: KernelSpec<T>,
    /// Upper support boundary per axis, where the kernel is reflected.
    pub upper: (T, T),
}

impl<T: Scalar> SmleEstimate<T> {
    /// Estimate on the unit square.
    pub fn new(source: DiscreteDistribution<T>, kernel: KernelSpec<T>) -> Self {
        Self {
            source,
            kernel,
            upper: (T::one(), T::one()),
        }
    }

    pub fn with_upper(mut self, b1: T, b2: T) -> Self {
        self.upper = (b1, b2);
        self
    }

    #[inline]
    fn factor(&self, t: T, v: T, b: T) -> T {
        let two = T::lit(2.0);
        self.kernel.ik_h(t - v) + self.kernel.ikb_h(two * b - t - v)
    }

    /// Boundary-corrected value at `(t, u)`.
    pub fn eval(&self, t: T, u: T) -> T {
        let (b1, b2) = self.upper;
        self.source
            .points()
            .iter()
            .zip(self.source.masses())
            .map(|(&(v, w), &p)| p * self.factor(t, v, b1) * self.factor(u, w, b2))
            .sum()
    }

    /// Uncorrected value `Σ p_j IK_h(t - v_j) IK_h(u - w_j)`.
    pub fn eval_interior(&self, t: T, u: T) -> T {
        self.source
            .points()
            .iter()
            .zip(self.source.masses())
            .map(|(&(v, w), &p)| p * self.kernel.ik_h(t - v) * self.kernel.ik_h(u - w))
            .sum()
    }

    /// One-dimensional analogue on the chosen axis.
    pub fn marginal(&self, axis: Axis, t: T) -> T {
        let b = match axis {
            Axis::First => self.upper.0,
            Axis::Second => self.upper.1,
        };
        self.source
            .points()
            .iter()
            .zip(self.source.masses())
            .map(|(&(v, w), &p)| {
                let c = if axis == Axis::First { v } else { w };
                p * self.factor(t, c, b)
            })
            .sum()
    }

    /// Values on the product grid `ts × us`, row-major in `ts`.
    pub fn grid(&self, ts: &[T], us: &[T]) -> Vec<T> {
        ts.iter()
            .flat_map(|&t| us.iter().map(move |&u| self.eval(t, u)))
            .collect()
    }
}

/// Which power of `∫x²K` enters the asymptotic bias.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BiasConvention {
    /// `β = ½ c (∂₁²F + ∂₂²F) ∫x²K`.
    #[default]
    SingleMoment,
    /// The squared moment `(∫x²K)²`, as printed in the conjectured limit theorem.
    SquaredMoment,
}

/// Asymptotic `(β, σ)` of `n^{1/3}(SMLE - F0)` at an interior point, for
/// `c = lim n^{1/3} h²` and observation density value `g`.
pub fn smle_asymptotics<T: Scalar, M: BivariateModel<T> + ?Sized>(
    t: T,
    u: T,
    c: T,
    f0: &M,
    g: T,
    order: KernelOrder,
    convention: BiasConvention,
) -> Result<(T, T), AsymptoticError> {
    let finite = [t, u, c, g].iter().all(|v| v.is_finite());
    if !finite {
        return Err(AsymptoticError::Domain("non-finite input".into()));
    }
    if !(t > T::zero() && t < T::one() && u > T::zero() && u < T::one()) {
        return Err(AsymptoticError::Domain(format!(
            "({t}, {u}) is not interior"
        )));
    }
    if !(c > T::zero() && g > T::zero()) {
        return Err(AsymptoticError::Domain("c and g must be positive".into()));
    }
    let f = f0.df(t, u);
    let f1 = f0.marginal1(t);
    let f2 = f0.marginal2(u);
    let denoms = [f, f1 - f, f2 - f, T::one() - f1 - f2 + f];
    if let Some(d) = denoms.iter().find(|&&d| !(d > T::zero())) {
        return Err(AsymptoticError::Degenerate(format!(
            "cell probability {d} at ({t}, {u})"
        )));
    }
    let harmonic = denoms.iter().map(|&d| d.recip()).sum::<T>().recip();
    let roughness: T = order.roughness();
    let variance = harmonic / (c * g) * roughness * roughness;

    let (d11, d22) = f0.second_partials(t, u);
    let mu2: T = order.second_moment();
    let moment = match convention {
        BiasConvention::SingleMoment => mu2,
        BiasConvention::SquaredMoment => mu2 * mu2,
    };
    let beta = T::lit(0.5) * c * (d11 + d22) * moment;
    Ok((beta, variance.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearDensity, UniformSquare};

    fn point_mass(x: f64, y: f64, h: f64) -> SmleEstimate<f64> {
        let d = DiscreteDistribution::new(vec![(x, y)], vec![1.0]).unwrap();
        SmleEstimate::new(d, KernelSpec::triweight(h).unwrap())
    }

    #[test]
    fn point_mass_values() {
        let est = point_mass(0.5, 0.5, 0.1);
        assert!((est.eval(0.8, 0.8) - 1.0).abs() < 1e-15);
        assert!((est.eval(0.5, 0.5) - 0.25).abs() < 1e-15);
        assert!((est.marginal(Axis::First, 0.9) - 1.0).abs() < 1e-15);
        assert!(est.eval(0.3, 0.9).abs() < 1e-15);
    }

    #[test]
    fn marginal_is_eval_at_upper_boundary() {
        let d = DiscreteDistribution::new(
            vec![(0.1, 0.9), (0.5, 0.95), (0.97, 0.3), (1.0, 1.0)],
            vec![0.2, 0.3, 0.4, 0.1],
        )
        .unwrap();
        let est = SmleEstimate::new(d, KernelSpec::triweight(0.2).unwrap());
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            assert!((est.marginal(Axis::First, t) - est.eval(t, 1.0)).abs() < 1e-10);
            assert!((est.marginal(Axis::Second, t) - est.eval(1.0, t)).abs() < 1e-10);
        }
    }

    #[test]
    fn corrected_matches_uncorrected_in_interior() {
        let d = DiscreteDistribution::new(
            vec![(0.1, 0.2), (0.5, 0.95), (0.97, 0.3), (1.0, 1.0)],
            vec![0.2, 0.3, 0.4, 0.1],
        )
        .unwrap();
        let h = 0.25;
        let est = SmleEstimate::new(d, KernelSpec::triweight(h).unwrap());
        for i in 0..=30 {
            for j in 0..=30 {
                let (t, u) = (i as f64 / 40.0, j as f64 / 40.0);
                assert!(t.max(u) <= 1.0 - h);
                assert!((est.eval(t, u) - est.eval_interior(t, u)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asymptotics_match_reference_values() {
        let (_, sigma) = smle_asymptotics(
            0.6_f64,
            0.6,
            1.0,
            &LinearDensity,
            1.0,
            KernelOrder::Second,
            BiasConvention::SingleMoment,
        )
        .unwrap();
        assert!((sigma - 0.203).abs() < 5e-4, "{sigma}");
        for (t, beta_ref) in [(0.2_f64, 0.044), (0.4, 0.056), (0.6, 0.067), (0.8, 0.078)] {
            let (beta, _) = smle_asymptotics(
                t,
                0.6,
                1.0,
                &LinearDensity,
                1.0,
                KernelOrder::Second,
                BiasConvention::SingleMoment,
            )
            .unwrap();
            assert!((beta - beta_ref).abs() < 5e-4, "t={t}: {beta}");
        }
        let (beta_sq, _) = smle_asymptotics(
            0.2_f64,
            0.6,
            1.0,
            &LinearDensity,
            1.0,
            KernelOrder::Second,
            BiasConvention::SquaredMoment,
        )
        .unwrap();
        assert!((beta_sq - 0.8 / 2.0 / 81.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotics_domain_errors() {
        let uni = UniformSquare;
        let r = smle_asymptotics(
            0.0,
            0.5,
            1.0,
            &uni,
            1.0,
            KernelOrder::Second,
            BiasConvention::SingleMoment,
        );
        assert!(matches!(r, Err(AsymptoticError::Domain(_))));
        let r = smle_asymptotics(
            0.5,
            0.5,
            1.0,
            &uni,
            0.0,
            KernelOrder::Second,
            BiasConvention::SingleMoment,
        );
        assert!(matches!(r, Err(AsymptoticError::Domain(_))));
        // a model that puts all its mass at the origin makes every cell but one empty
        struct Origin;
        impl BivariateModel<f64> for Origin {
            fn df(&self, _x: f64, _y: f64) -> f64 {
                1.0
            }
            fn gradient(&self, _x: f64, _y: f64) -> (f64, f64) {
                (0.0, 0.0)
            }
            fn second_partials(&self, _x: f64, _y: f64) -> (f64, f64) {
                (0.0, 0.0)
            }
        }
        let r = smle_asymptotics(
            0.5,
            0.5,
            1.0,
            &Origin,
            1.0,
            KernelOrder::Second,
            BiasConvention::SingleMoment,
        );
        assert!(matches!(r, Err(AsymptoticError::Degenerate(_))));
    }

    #[test]
    fn works_in_single_precision() {
        let d = DiscreteDistribution::new(vec![(0.5_f32, 0.5_f32)], vec![1.0_f32]).unwrap();
        let est = SmleEstimate::new(d, KernelSpec::triweight(0.1_f32).unwrap());
        assert!((est.eval(0.5, 0.5) - 0.25).abs() < 1e-6);
    }
}
