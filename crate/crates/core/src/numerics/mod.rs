//! Problem-agnostic numerical kernel: adaptive ODE integration, adaptive
//! quadrature, derivative-free minimization and bracketed root finding.
//!
//! Every routine here is a pure function of its inputs. Objective functions
//! and vector fields are borrowed as `Fn` closures, so callers can share the
//! same closure across threads as long as it carries no interior mutability.

mod minimize;
mod ode;
mod quadrature;
mod roots;

pub use minimize::{minimize, MinimizeOptions, OptimizationResult};
pub use ode::{integrate_adaptive, OdeOptions, OdeTrajectory};
pub use quadrature::{gauss_legendre, quadrature, quadrature_with_breaks, QUADRATURE_ABS_FLOOR};
pub use roots::find_root;

use thiserror::Error;

/// Default relative tolerance for ODE integration.
pub const DEFAULT_ODE_REL_TOL: f64 = 1e-10;
/// Default relative tolerance for quadrature.
pub const DEFAULT_QUAD_REL_TOL: f64 = 1e-10;
/// Default parameter tolerance for the minimizer.
pub const DEFAULT_PARAM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("invalid integration span ({t0}, {t1}): end must exceed start")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("tolerances must be positive (rel {rel}, abs {abs})")]
    InvalidTolerance { rel: f64, abs: f64 },
    #[error("initial state is empty or not finite")]
    InvalidInitialState,
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("vector field returned a non-finite value at t = {t}")]
    NonFiniteRhs { t: f64 },
    #[error("integrand is not finite at x = {x}")]
    NonFiniteSample { x: f64 },
    #[error("quadrature did not reach tolerance on [{a}, {b}] (estimate {estimate}, error {error:e})")]
    QuadratureNotConverged { a: f64, b: f64, estimate: f64, error: f64 },
    #[error("objective was not finite at any of {} sampled points", .samples.len())]
    ObjectiveNowhereFinite { samples: Vec<Vec<f64>> },
    #[error("scale vector must be positive and match the parameter dimension")]
    InvalidScale,
    #[error("no sign change on bracket [{lo}, {hi}] (g(lo) = {glo}, g(hi) = {ghi})")]
    NoSignChange { lo: f64, hi: f64, glo: f64, ghi: f64 },
    #[error("root function is not finite at x = {x}")]
    NonFiniteRootSample { x: f64 },
}

pub type Result<T> = std::result::Result<T, NumericsError>;
