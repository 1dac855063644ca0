//! Numerical laboratory for momentum-accelerated gradient methods.
//!
//! The crate bundles:
//!
//! * [`objective`] / [`stepper`] / [`scheme`] — smooth objectives, the
//!   gradient-descent / two-point momentum / stabilized three-point steppers,
//!   and the four-term recurrence coefficient algebra behind the stabilized
//!   scheme;
//! * [`ode`] — a high-accuracy reference integrator for the continuous-time
//!   limit `x'' + (3/t) x' + grad F(x) = 0`, with truncation-error and
//!   convergence-order diagnostics for both discrete schemes;
//! * [`transition`] — the 2x2 error-propagation matrix products and bounds
//!   used by the convergence analysis, plus a discrete Gronwall checker;
//! * [`stability`] — characteristic polynomials, closed-form root solving,
//!   absolute-stability regions, and empirical divergence probes;
//! * [`matcomp`] / [`svd`] — nuclear-norm matrix completion: a from-scratch
//!   one-sided Jacobi SVD, singular-value soft thresholding, and the
//!   fista / apg / sfista proximal solvers with backtracking variants;
//! * [`bench`] — seeded synthetic data, experiment drivers, and CSV output.

pub mod bench;
pub mod error;
pub mod linalg;
pub mod matcomp;
pub mod objective;
pub mod ode;
pub mod rational;
pub mod rng;
pub mod scheme;
pub mod stability;
pub mod stepper;
pub mod svd;
pub mod transition;

pub use error::{Error, Result};
pub use linalg::{Mat, Mat2};
pub use objective::{CountingObjective, Logistic, Objective, Quadratic, ShiftedQuadratic};
pub use scheme::{normalized_recurrence, scheme_coefficients, SchemeCoefficients};
pub use stepper::{
    gd_step, nag_step, run_optimizer, sag_step, Method, NagState, SagState, Scheme, Termination,
    Trajectory,
};
