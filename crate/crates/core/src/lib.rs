//! Nonparametric estimation of a bivariate distribution function from current-status
//! and case-2 interval-censored data.
//!
//! Three estimators are provided: the NPMLE over a candidate set (canonical rectangle
//! corners or a random sieve) with a Fenchel optimality certificate, the
//! boundary-corrected smoothed MLE, and the local-ratio plug-in estimator. The
//! [`simstudy`] module runs the Monte Carlo comparison of the three.
//!
//! The numerical core is generic over the scalar type ([`Scalar`], implemented for
//! `f32` and `f64`); the `*64` aliases below fix it to `f64`.

// `!(x > 0)` is used on purpose so that NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod censdata;
pub mod geometry;
pub mod kernels;
pub(crate) mod linalg;
pub mod model;
pub mod npmle;
pub mod plugin;
pub mod scalar;
pub mod simstudy;
pub mod smle;

pub use censdata::{
    bf_dataset, cs_to_csv, cs_to_rectangles, parse_cs_csv, parse_rectangle_csv, read_cs_csv,
    read_rectangle_csv, CensoringRectangle, CurrentStatusObs, DataError, DataKind, Dataset,
    ExtendedReal, Interval,
};
pub use geometry::{
    canonical_corners, incidence, maximal_intersections, CanonicalRectangle, IncidenceMatrix,
    Sentinel,
};
pub use kernels::{KernelOrder, KernelSpec};
pub use model::{BivariateModel, ObservationDensity};
pub use npmle::{
    fenchel_check_cs, fenchel_check_ic2, fit, fit_distribution, loglik, random_sieve,
    DiscreteDistribution, FitError, FitOptions, FitReport, SieveDesign,
};
pub use plugin::{
    build_plugin_grid, plugin_asymptotics, plugin_eval, plugin_eval_boundary, solve_masses,
    PluginGrid,
};
pub use scalar::Scalar;
pub use simstudy::{run_study, BandwidthRule, Estimator, Scenario, StudyResult, Truth};
pub use smle::{smle_asymptotics, Axis, BiasConvention, SmleEstimate};

pub type ExtendedReal64 = ExtendedReal<f64>;
pub type CensoringRectangle64 = CensoringRectangle<f64>;
pub type CurrentStatusObs64 = CurrentStatusObs<f64>;
pub type Dataset64 = Dataset<f64>;
pub type CanonicalRectangle64 = CanonicalRectangle<f64>;
pub type DiscreteDistribution64 = DiscreteDistribution<f64>;
pub type FitOptions64 = FitOptions<f64>;
pub type FitReport64 = FitReport<f64>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type SmleEstimate64 = SmleEstimate<f64>;
pub type PluginGrid64 = PluginGrid<f64>;

pub type Dataset32 = Dataset<f32>;
pub type DiscreteDistribution32 = DiscreteDistribution<f32>;
pub type KernelSpec32 = KernelSpec<f32>;
pub type SmleEstimate32 = SmleEstimate<f32>;
