//! Measure-based upper bounds for polynomial minimization over compact sets.
//!
//! For a polynomial `f` on a compact set `K` with reference measure `mu`, the
//! order-`r` bound `f^(r)` minimizes `∫ f q dmu` over sum-of-squares densities
//! `q` of degree `2r` with unit mass. It is the smallest generalized eigenvalue
//! of a pair of moment matrices, computed here from closed-form moments in
//! extended precision. Explicit needle densities give a second, feasible
//! (hence weaker) family of bounds with provable rates.
//!
//! ```
//! use lasserre_core::{assemble, solve, DomainSpec, MeasureSpec, MomentOracle, Polynomial};
//!
//! let o = MomentOracle::new(DomainSpec::unit_box(1), MeasureSpec::Lebesgue, 256).unwrap();
//! let x = Polynomial::var(1, 0);
//! let bound = solve(&assemble(&x, &o, 1).unwrap()).unwrap();
//! assert!((bound.value + 1.0 / 3f64.sqrt()).abs() < 1e-12);
//! ```

pub mod bounds;
pub mod domains;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod moments;
pub mod needles;
pub mod poly;
pub mod quadrature;
pub mod xprec;

pub use bounds::{
    assemble, needle_bound, needle_density, rate_fit, rate_fit_points, series_with_oracle, solve, upper_bound_series, BoundResult,
    BoundSeries, MomentMatrixPair, NeedleBound, NeedleRegime, RateFit, SchedulePolicy,
};
pub use domains::{ConeConstants, DomainSpec, MeasureSpec};
pub use error::{Error, Result};
pub use estimators::{EstimatorKind, EstimatorReport, Recentred};
pub use moments::{normalization_constant, reduce_ball_to_interval, MomentOracle, NormalizationConstant};
pub use needles::{MultiNeedleSpec, NeedleDensity, NeedleSpec, NeedleVariant, Schedule, ScheduleKind};
pub use poly::{basis_size, smoothness_constants, MonomialBasis, Polynomial, SmoothnessConstants};
pub use xprec::DEFAULT_PRECISION;
