//! Smooth reference distributions used by the asymptotic formulas and the simulation
//! study.

use crate::scalar::Scalar;

/// A bivariate df on `[0, 1]^2` with the derivatives the asymptotic bias and variance
/// formulas need.
pub trait BivariateModel<T: Scalar>: Sync {
    fn df(&self, x: T, y: T) -> T;
    /// `(∂_1 F, ∂_2 F)`.
    fn gradient(&self, x: T, y: T) -> (T, T);
    /// `(∂_1^2 F, ∂_2^2 F)`.
    fn second_partials(&self, x: T, y: T) -> (T, T);

    fn marginal1(&self, x: T) -> T {
        self.df(x, T::one())
    }

    fn marginal2(&self, y: T) -> T {
        self.df(T::one(), y)
    }
}

/// Density of the observation times `(T, U)`.
pub trait ObservationDensity<T: Scalar>: Sync {
    fn density(&self, t: T, u: T) -> T;
    /// `(∂_1 g, ∂_2 g)`.
    fn gradient(&self, t: T, u: T) -> (T, T);
}

/// `F(x, y) = x y (x + y) / 2`, density `x + y` on the unit square.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearDensity;

impl<T: Scalar> BivariateModel<T> for LinearDensity {
    fn df(&self, x: T, y: T) -> T {
        let (x, y) = (clamp01(x), clamp01(y));
        T::lit(0.5) * x * y * (x + y)
    }

    fn gradient(&self, x: T, y: T) -> (T, T) {
        let half = T::lit(0.5);
        (
            half * (T::lit(2.0) * x * y + y * y),
            half * (x * x + T::lit(2.0) * x * y),
        )
    }

    fn second_partials(&self, x: T, y: T) -> (T, T) {
        (y, x)
    }
}

/// Uniform distribution on the unit square, `F(x, y) = x y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformSquare;

impl<T: Scalar> BivariateModel<T> for UniformSquare {
    fn df(&self, x: T, y: T) -> T {
        clamp01(x) * clamp01(y)
    }

    fn gradient(&self, x: T, y: T) -> (T, T) {
        (y, x)
    }

    fn second_partials(&self, _x: T, _y: T) -> (T, T) {
        (T::zero(), T::zero())
    }
}

impl<T: Scalar> ObservationDensity<T> for UniformSquare {
    fn density(&self, t: T, u: T) -> T {
        let inside = |v: T| v >= T::zero() && v <= T::one();
        if inside(t) && inside(u) {
            T::one()
        } else {
            T::zero()
        }
    }

    fn gradient(&self, _t: T, _u: T) -> (T, T) {
        (T::zero(), T::zero())
    }
}

fn clamp01<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AsymptoticError {
    #[error("degenerate point: {0}")]
    Degenerate(String),
    #[error("outside the domain of the formula: {0}")]
    Domain(String),
}
