//! Discrete optimizer steppers: plain gradient descent, the two-point
//! momentum scheme (NAG), and the stabilized three-point scheme (SAG).
//!
//! Steppers are pure functions of (state, objective) and evaluate the
//! gradient exactly once per step. Momentum coefficients are applied exactly
//! as written, including the negative values they take for small indices.

use crate::error::{Error, Result};
use crate::linalg::{self, first_non_finite, lincomb2, lincomb3, norm2, norm_inf, step_back};
use crate::objective::Objective;

/// Iterates are declared divergent once their max-norm exceeds this.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Which discrete scheme a run or report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Nag,
    Sag,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Nag => "nag",
            Scheme::Sag => "sag",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Gd,
    Nag,
    Sag,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Nag => "nag",
            Method::Sag => "sag",
        }
    }
}

// ─── States ─────────────────────────────────────────────────────────────────

/// Rolling two-point history of the NAG iteration.
#[derive(Clone, Debug)]
pub struct NagState {
    pub x_curr: Vec<f64>,
    pub x_prev: Vec<f64>,
    /// Iteration index n >= 1; the momentum coefficient is (n-3)/n.
    pub n: u64,
    /// Step size s = h^2.
    pub s: f64,
}

impl NagState {
    /// Canonical start: x_1 = x_0.
    pub fn start(x0: &[f64], s: f64) -> NagState {
        assert!(s > 0.0);
        NagState { x_curr: x0.to_vec(), x_prev: x0.to_vec(), n: 1, s }
    }
}

/// Rolling three-point history of the stabilized iteration.
#[derive(Clone, Debug)]
pub struct SagState {
    pub x_curr: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub x_prev2: Vec<f64>,
    /// Iteration index k >= 2.
    pub k: u64,
    pub s: f64,
}

impl SagState {
    /// Canonical start: X_2 = X_1 = X_0.
    pub fn start(x0: &[f64], s: f64) -> SagState {
        assert!(s > 0.0);
        SagState { x_curr: x0.to_vec(), x_prev: x0.to_vec(), x_prev2: x0.to_vec(), k: 2, s }
    }
}

/// History weights of one stabilized step at index k: three weights for the
/// extrapolation point Y, two for the gradient point Z, and the gradient
/// step factor k/(2k+4). Each weight group sums to one.
pub fn sag_weights(k: u64) -> ([f64; 3], [f64; 2], f64) {
    let kf = k as f64;
    let y = [
        (10.0 * kf * kf + 9.0 * kf + 6.0) / (4.0 * kf * kf + 8.0 * kf),
        -(4.0 * kf * kf + 3.0) / (2.0 * kf * kf + 4.0 * kf),
        (2.0 * kf - 1.0) / (4.0 * kf + 8.0),
    ];
    let z = [(2.0 * kf - 3.0) / kf, -(kf - 3.0) / kf];
    let grad_factor = kf / (2.0 * kf + 4.0);
    (y, z, grad_factor)
}

// ─── Steps ──────────────────────────────────────────────────────────────────

fn check_finite(v: &[f64], context: &'static str) -> Result<()> {
    match first_non_finite(v) {
        Some(index) => Err(Error::NonFinite { context, index }),
        None => Ok(()),
    }
}

/// One NAG step:
/// `y = x_n + ((n-3)/n)(x_n - x_{n-1})`, `x_{n+1} = y - s grad F(y)`.
pub fn nag_step(state: NagState, f: &dyn Objective) -> Result<NagState> {
    let NagState { x_curr, x_prev, n, s } = state;
    let momentum = (n as f64 - 3.0) / n as f64;
    let y = lincomb2(1.0 + momentum, &x_curr, -momentum, &x_prev);
    let g = f.gradient(&y);
    check_finite(&g, "nag gradient")?;
    let x_next = step_back(&y, s, &g);
    check_finite(&x_next, "nag iterate")?;
    Ok(NagState { x_curr: x_next, x_prev: x_curr, n: n + 1, s })
}

/// One stabilized step:
/// `Y_k` and `Z_k` from the history weights, `X_{k+1} = Y_k - (ks/(2k+4)) grad F(Z_k)`.
pub fn sag_step(state: SagState, f: &dyn Objective) -> Result<SagState> {
    let SagState { x_curr, x_prev, x_prev2, k, s } = state;
    assert!(k >= 2, "stabilized scheme starts at k = 2");
    let (wy, wz, grad_factor) = sag_weights(k);
    let y = lincomb3(wy[0], &x_curr, wy[1], &x_prev, wy[2], &x_prev2);
    check_finite(&y, "sag extrapolation")?;
    let z = lincomb2(wz[0], &x_curr, wz[1], &x_prev);
    check_finite(&z, "sag gradient point")?;
    let g = f.gradient(&z);
    check_finite(&g, "sag gradient")?;
    let x_next = step_back(&y, grad_factor * s, &g);
    check_finite(&x_next, "sag iterate")?;
    Ok(SagState { x_curr: x_next, x_prev: x_curr, x_prev2: x_prev, k: k + 1, s })
}

/// One gradient-descent step `x - s grad F(x)`.
pub fn gd_step(x: &[f64], f: &dyn Objective, s: f64) -> Result<Vec<f64>> {
    assert!(s > 0.0);
    let g = f.gradient(x);
    check_finite(&g, "gd gradient")?;
    Ok(step_back(x, s, &g))
}

// ─── Driver ─────────────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MaxIter,
    Tol,
    Diverged,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::MaxIter => "max-iter",
            Termination::Tol => "tol",
            Termination::Diverged => "diverged",
        }
    }
}

/// Recorded run of one stepper.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub iterates: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub step: f64,
    pub method: Method,
    pub reason: Termination,
}

impl Trajectory {
    pub fn final_x(&self) -> &[f64] {
        self.iterates.last().expect("trajectory never empty")
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }
}

enum RunnerState {
    Gd(Vec<f64>, f64),
    Nag(NagState),
    Sag(SagState),
}

/// Run a stepper from `x0`, recording every iterate and objective value.
///
/// Stops when the gradient norm at the current iterate drops to `tol`, when
/// `max_iter` steps have been taken, or when the run diverges (non-finite
/// values or max-norm beyond [`DIVERGENCE_THRESHOLD`]).
pub fn run_optimizer(
    method: Method,
    f: &dyn Objective,
    x0: &[f64],
    s: f64,
    max_iter: usize,
    tol: f64,
) -> Trajectory {
    assert!(max_iter >= 1);
    assert!(tol >= 0.0);
    let mut iterates = vec![x0.to_vec()];
    let mut values = vec![f.value(x0)];

    let grad0 = f.gradient(x0);
    if !linalg::all_finite(&grad0) {
        return Trajectory { iterates, values, step: s, method, reason: Termination::Diverged };
    }
    if norm2(&grad0) <= tol {
        return Trajectory { iterates, values, step: s, method, reason: Termination::Tol };
    }

    let mut state = match method {
        Method::Gd => RunnerState::Gd(x0.to_vec(), s),
        Method::Nag => RunnerState::Nag(NagState::start(x0, s)),
        Method::Sag => RunnerState::Sag(SagState::start(x0, s)),
    };

    let mut reason = Termination::MaxIter;
    for _ in 0..max_iter {
        let stepped: Result<Vec<f64>> = match &mut state {
            RunnerState::Gd(x, s) => match gd_step(x, f, *s) {
                Ok(next) => {
                    *x = next.clone();
                    Ok(next)
                }
                Err(e) => Err(e),
            },
            RunnerState::Nag(st) => match nag_step(st.clone(), f) {
                Ok(next) => {
                    let x = next.x_curr.clone();
                    *st = next;
                    Ok(x)
                }
                Err(e) => Err(e),
            },
            RunnerState::Sag(st) => match sag_step(st.clone(), f) {
                Ok(next) => {
                    let x = next.x_curr.clone();
                    *st = next;
                    Ok(x)
                }
                Err(e) => Err(e),
            },
        };
        let x = match stepped {
            Ok(x) => x,
            Err(_) => {
                reason = Termination::Diverged;
                break;
            }
        };
        values.push(f.value(&x));
        let diverged = !linalg::all_finite(&x) || norm_inf(&x) > DIVERGENCE_THRESHOLD;
        iterates.push(x);
        if diverged {
            reason = Termination::Diverged;
            break;
        }
        let g = f.gradient(iterates.last().unwrap());
        if !linalg::all_finite(&g) {
            reason = Termination::Diverged;
            break;
        }
        if norm2(&g) <= tol {
            reason = Termination::Tol;
            break;
        }
    }
    Trajectory { iterates, values, step: s, method, reason }
}
