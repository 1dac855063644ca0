//! Nuclear-norm matrix completion and its accelerated proximal solvers.
//!
//! The composite objective is
//!
//! ```text
//! F(X) = 1/2 ||X_obs - M_obs||^2 + lambda ||X||_*
//! ```
//!
//! with the smooth part supported on the observed entries and the proximal
//! step of the nuclear term solved exactly by singular-value soft
//! thresholding. Three accelerations are provided — the t-sequence variant
//! (fista), the (k-3)/k momentum variant (apg), and the stabilized
//! three-point variant (sfista) — each in a fixed-step and a backtracking
//! flavor.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::stepper::{sag_weights, Termination};
use crate::svd::svt_with_values;

/// Fixed-step runs are truncated once the objective exceeds this multiple of
/// its starting value (or leaves the finite range).
pub const OBJECTIVE_BLOWUP: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProxMethod {
    Fista,
    Apg,
    Sfista,
}

impl ProxMethod {
    pub fn name(self) -> &'static str {
        match self {
            ProxMethod::Fista => "fista",
            ProxMethod::Apg => "apg",
            ProxMethod::Sfista => "sfista",
        }
    }
}

// ─── Problem instance ───────────────────────────────────────────────────────

/// Observed entries, regularization weight, and optional ground truth.
#[derive(Clone, Debug)]
pub struct CompletionProblem {
    pub rows: usize,
    pub cols: usize,
    /// Observed index pairs, deduplicated and in row-major order.
    pub mask: Vec<(u32, u32)>,
    /// Observed values, aligned with `mask`.
    pub m_obs: Vec<f64>,
    pub lambda: f64,
    /// Full matrix the observations were sampled from, when synthetic.
    pub m_true: Option<Mat>,
}

impl CompletionProblem {
    pub fn new(
        rows: usize,
        cols: usize,
        mask: Vec<(u32, u32)>,
        m_obs: Vec<f64>,
        lambda: f64,
        m_true: Option<Mat>,
    ) -> CompletionProblem {
        assert_eq!(mask.len(), m_obs.len());
        assert!(lambda >= 0.0, "regularization weight must be nonnegative");
        assert!(m_obs.iter().all(|v| v.is_finite()), "observed values must be finite");
        for &(i, j) in &mask {
            assert!((i as usize) < rows && (j as usize) < cols, "mask entry out of bounds");
        }
        CompletionProblem { rows, cols, mask, m_obs, lambda, m_true }
    }

    /// The observed matrix: observed values on the mask, zero elsewhere.
    pub fn observed_matrix(&self) -> Mat {
        let mut m = Mat::zeros(self.rows, self.cols);
        for (&(i, j), &v) in self.mask.iter().zip(&self.m_obs) {
            m.set(i as usize, j as usize, v);
        }
        m
    }

    /// Smooth part `1/2 sum_omega (X_ij - M_ij)^2`.
    pub fn smooth_value(&self, x: &Mat) -> f64 {
        let mut total = 0.0;
        for (&(i, j), &v) in self.mask.iter().zip(&self.m_obs) {
            let d = x.get(i as usize, j as usize) - v;
            total += d * d;
        }
        0.5 * total
    }

    /// Full composite objective (pays one SVD for the nuclear term).
    pub fn objective_value(&self, x: &Mat) -> Result<f64> {
        Ok(self.smooth_value(x) + self.lambda * crate::svd::nuclear_norm(x)?)
    }
}

/// Gradient of the smooth part: `(X - M)` on the mask, zero off it.
pub fn smooth_grad(x: &Mat, p: &CompletionProblem) -> Mat {
    debug_assert_eq!((x.rows, x.cols), (p.rows, p.cols));
    let mut g = Mat::zeros(p.rows, p.cols);
    for (&(i, j), &v) in p.mask.iter().zip(&p.m_obs) {
        g.set(i as usize, j as usize, x.get(i as usize, j as usize) - v);
    }
    g
}

// ─── FISTA momentum sequence ────────────────────────────────────────────────

/// The t-sequence state `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`.
#[derive(Clone, Copy, Debug)]
pub struct FistaState {
    pub t_k: f64,
    pub k: u64,
}

impl FistaState {
    pub fn start() -> FistaState {
        FistaState { t_k: 1.0, k: 1 }
    }

    pub fn next_t(&self) -> f64 {
        (1.0 + (1.0 + 4.0 * self.t_k * self.t_k).sqrt()) / 2.0
    }

    /// Momentum weight `(t_k - 1) / t_{k+1}` and the advanced state.
    pub fn advance(self) -> (f64, FistaState) {
        let t_next = self.next_t();
        ((self.t_k - 1.0) / t_next, FistaState { t_k: t_next, k: self.k + 1 })
    }
}

// ─── Run records ────────────────────────────────────────────────────────────

/// Recorded solver run. Objective values are always kept; full iterates only
/// when requested (they are large).
#[derive(Clone, Debug)]
pub struct SolveTrace {
    pub method: ProxMethod,
    pub values: Vec<f64>,
    pub iterates: Option<Vec<Mat>>,
    pub final_x: Mat,
    pub reason: Termination,
    /// Step sizes per iteration (constant for fixed-step runs).
    pub steps: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Start from this matrix instead of the observed one.
    pub start: Option<Mat>,
    pub record_iterates: bool,
}

struct Recorder {
    values: Vec<f64>,
    iterates: Option<Vec<Mat>>,
    steps: Vec<f64>,
    blowup_at: f64,
}

impl Recorder {
    fn new(x0: &Mat, f0: f64, record_iterates: bool) -> Recorder {
        Recorder {
            values: vec![f0],
            iterates: record_iterates.then(|| vec![x0.clone()]),
            steps: Vec::new(),
            blowup_at: OBJECTIVE_BLOWUP * f0.abs().max(1.0),
        }
    }

    /// Record an iterate; returns false when the run must stop as diverged.
    fn push(&mut self, x: &Mat, f: f64, step: f64) -> bool {
        self.values.push(f);
        self.steps.push(step);
        if let Some(list) = &mut self.iterates {
            list.push(x.clone());
        }
        f.is_finite() && x.is_finite() && f <= self.blowup_at
    }
}

fn finish(method: ProxMethod, rec: Recorder, final_x: Mat, reason: Termination) -> SolveTrace {
    SolveTrace {
        method,
        values: rec.values,
        iterates: rec.iterates,
        final_x,
        reason,
        steps: rec.steps,
    }
}

// ─── Fixed-step solvers ─────────────────────────────────────────────────────

/// t-sequence accelerated proximal run: prox at `Y_k - s g(Y_k)` with
/// threshold `lambda s`, then `Y_{k+1} = X_k + ((t_k-1)/t_{k+1})(X_k - X_{k-1})`.
pub fn fista_run(p: &CompletionProblem, s: f64, iters: usize) -> Result<SolveTrace> {
    fista_run_with(p, s, iters, &RunOptions::default())
}

pub fn fista_run_with(
    p: &CompletionProblem,
    s: f64,
    iters: usize,
    opts: &RunOptions,
) -> Result<SolveTrace> {
    assert!(s > 0.0);
    let x0 = opts.start.clone().unwrap_or_else(|| p.observed_matrix());
    let f0 = p.objective_value(&x0)?;
    let mut rec = Recorder::new(&x0, f0, opts.record_iterates);

    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut y = x0;
    let mut t = FistaState::start();
    for _ in 0..iters {
        let g = smooth_grad(&y, p);
        let (x_next, shrunk) = svt_with_values(&y.step_back(s, &g), p.lambda * s)?;
        let f = p.smooth_value(&x_next) + p.lambda * shrunk.iter().sum::<f64>();
        x_prev = std::mem::replace(&mut x, x_next);
        let ok = rec.push(&x, f, s);
        if !ok {
            return Ok(finish(ProxMethod::Fista, rec, x, Termination::Diverged));
        }
        let (momentum, t_next) = t.advance();
        t = t_next;
        y = Mat::lincomb2(1.0 + momentum, &x, -momentum, &x_prev);
    }
    Ok(finish(ProxMethod::Fista, rec, x, Termination::MaxIter))
}

/// (k-3)/k momentum proximal run.
pub fn apg_run(p: &CompletionProblem, s: f64, iters: usize) -> Result<SolveTrace> {
    apg_run_with(p, s, iters, &RunOptions::default())
}

pub fn apg_run_with(
    p: &CompletionProblem,
    s: f64,
    iters: usize,
    opts: &RunOptions,
) -> Result<SolveTrace> {
    assert!(s > 0.0);
    let x0 = opts.start.clone().unwrap_or_else(|| p.observed_matrix());
    let f0 = p.objective_value(&x0)?;
    let mut rec = Recorder::new(&x0, f0, opts.record_iterates);

    let mut x_prev = x0.clone();
    let mut x = x0;
    for k in 1..=iters as u64 {
        let momentum = (k as f64 - 3.0) / k as f64;
        let y = Mat::lincomb2(1.0 + momentum, &x, -momentum, &x_prev);
        let g = smooth_grad(&y, p);
        let (x_next, shrunk) = svt_with_values(&y.step_back(s, &g), p.lambda * s)?;
        let f = p.smooth_value(&x_next) + p.lambda * shrunk.iter().sum::<f64>();
        x_prev = std::mem::replace(&mut x, x_next);
        let ok = rec.push(&x, f, s);
        if !ok {
            return Ok(finish(ProxMethod::Apg, rec, x, Termination::Diverged));
        }
    }
    Ok(finish(ProxMethod::Apg, rec, x, Termination::MaxIter))
}

/// Stabilized three-point proximal run: `Y_k`, `Z_k` from the stabilized
/// weights, prox of `Y_k - (ks/(2k+4)) g(Z_k)` with threshold
/// `lambda k s / (2k+4)`.
pub fn sfista_run(p: &CompletionProblem, s: f64, iters: usize) -> Result<SolveTrace> {
    sfista_run_with(p, s, iters, &RunOptions::default())
}

pub fn sfista_run_with(
    p: &CompletionProblem,
    s: f64,
    iters: usize,
    opts: &RunOptions,
) -> Result<SolveTrace> {
    assert!(s > 0.0);
    let x0 = opts.start.clone().unwrap_or_else(|| p.observed_matrix());
    let f0 = p.objective_value(&x0)?;
    let mut rec = Recorder::new(&x0, f0, opts.record_iterates);

    let mut x_prev2 = x0.clone();
    let mut x_prev = x0.clone();
    let mut x = x0;
    for k in 2..(2 + iters as u64) {
        let (wy, wz, factor) = sag_weights(k);
        let y = Mat::lincomb3(wy[0], &x, wy[1], &x_prev, wy[2], &x_prev2);
        let z = Mat::lincomb2(wz[0], &x, wz[1], &x_prev);
        let g = smooth_grad(&z, p);
        let step = factor * s;
        let (x_next, shrunk) = svt_with_values(&y.step_back(step, &g), p.lambda * step)?;
        let f = p.smooth_value(&x_next) + p.lambda * shrunk.iter().sum::<f64>();
        x_prev2 = std::mem::replace(&mut x_prev, std::mem::replace(&mut x, x_next));
        let ok = rec.push(&x, f, step);
        if !ok {
            return Ok(finish(ProxMethod::Sfista, rec, x, Termination::Diverged));
        }
    }
    Ok(finish(ProxMethod::Sfista, rec, x, Termination::MaxIter))
}

pub fn run_fixed_step(
    method: ProxMethod,
    p: &CompletionProblem,
    s: f64,
    iters: usize,
) -> Result<SolveTrace> {
    match method {
        ProxMethod::Fista => fista_run(p, s, iters),
        ProxMethod::Apg => apg_run(p, s, iters),
        ProxMethod::Sfista => sfista_run(p, s, iters),
    }
}

// ─── Backtracking ───────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug)]
pub struct BacktrackConfig {
    /// Per-trial step shrink factor in (0, 1).
    pub beta: f64,
    pub s_init: f64,
    /// Reduction budget within a single iteration.
    pub max_halvings: u32,
}

impl BacktrackConfig {
    pub fn new(beta: f64, s_init: f64, max_halvings: u32) -> BacktrackConfig {
        assert!(beta > 0.0 && beta < 1.0, "shrink factor must lie in (0, 1)");
        assert!(s_init > 0.0);
        BacktrackConfig { beta, s_init, max_halvings }
    }
}

/// Audit record of one accepted backtracking step.
#[derive(Clone, Copy, Debug)]
pub struct BacktrackStep {
    pub iteration: usize,
    pub reductions: u32,
    pub step: f64,
    /// Objective at the accepted candidate.
    pub lhs: f64,
    /// Model value the candidate had to beat.
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct BacktrackTrace {
    pub run: SolveTrace,
    pub reduction_count: u64,
    pub steps: Vec<BacktrackStep>,
}

/// Find the smallest i >= 0 such that with `s = beta^i s_prev` the prox
/// candidate satisfies the sufficient-decrease inequality
/// `F(X~) < F(Y) + <X~ - Y, g> + quad(s) ||X~ - Y||^2`, where the gradient
/// and the quadratic weight depend on the method (the stabilized variant
/// scales both by k/(2k+4)).
struct Accepted {
    x: Mat,
    f: f64,
    s: f64,
    reductions: u32,
    lhs: f64,
    rhs: f64,
}

#[allow(clippy::too_many_arguments)]
fn backtrack_step(
    p: &CompletionProblem,
    y: &Mat,
    f_y: f64,
    g: &Mat,
    s_prev: f64,
    scale: f64, // gradient-step and threshold scale: 1 for fista/apg, k/(2k+4) for sfista
    cfg: &BacktrackConfig,
    iteration: usize,
) -> Result<Accepted> {
    let mut s = s_prev;
    for i in 0..=cfg.max_halvings {
        let step = scale * s;
        let (cand, shrunk) = svt_with_values(&y.step_back(step, g), p.lambda * step)?;
        let lhs = p.smooth_value(&cand) + p.lambda * shrunk.iter().sum::<f64>();
        let diff = cand.sub(y);
        let rhs = f_y + diff.frob_dot(g) + diff.frob_dot(&diff) / (2.0 * step);
        if lhs < rhs {
            return Ok(Accepted { x: cand, f: lhs, s, reductions: i, lhs, rhs });
        }
        s *= cfg.beta;
    }
    Err(Error::BacktrackStall { iteration, max_halvings: cfg.max_halvings })
}

/// Backtracking variants of all three solvers. Returns the run trace, the
/// total number of step reductions, and per-iteration audit rows.
pub fn backtracking_run(
    method: ProxMethod,
    p: &CompletionProblem,
    cfg: &BacktrackConfig,
    iters: usize,
) -> Result<BacktrackTrace> {
    let x0 = p.observed_matrix();
    let f0 = p.objective_value(&x0)?;
    let mut rec = Recorder::new(&x0, f0, false);
    let mut audit = Vec::with_capacity(iters);
    let mut reduction_count = 0u64;

    let mut x_prev2 = x0.clone();
    let mut x_prev = x0.clone();
    let mut x = x0.clone();
    let mut y_fista = x0;
    let mut t = FistaState::start();
    let mut s = cfg.s_init;

    for it in 0..iters {
        let (y, g, scale) = match method {
            ProxMethod::Fista => {
                let y = y_fista.clone();
                let g = smooth_grad(&y, p);
                (y, g, 1.0)
            }
            ProxMethod::Apg => {
                let k = it as u64 + 1;
                let momentum = (k as f64 - 3.0) / k as f64;
                let y = Mat::lincomb2(1.0 + momentum, &x, -momentum, &x_prev);
                let g = smooth_grad(&y, p);
                (y, g, 1.0)
            }
            ProxMethod::Sfista => {
                let k = it as u64 + 2;
                let (wy, wz, factor) = sag_weights(k);
                let y = Mat::lincomb3(wy[0], &x, wy[1], &x_prev, wy[2], &x_prev2);
                let z = Mat::lincomb2(wz[0], &x, wz[1], &x_prev);
                let g = smooth_grad(&z, p);
                (y, g, factor)
            }
        };
        let f_y = p.objective_value(&y)?;
        let acc = backtrack_step(p, &y, f_y, &g, s, scale, cfg, it)?;
        reduction_count += acc.reductions as u64;
        s = acc.s;
        audit.push(BacktrackStep {
            iteration: it,
            reductions: acc.reductions,
            step: acc.s,
            lhs: acc.lhs,
            rhs: acc.rhs,
        });

        x_prev2 = std::mem::replace(&mut x_prev, std::mem::replace(&mut x, acc.x));
        let ok = rec.push(&x, acc.f, acc.s);
        if !ok {
            return Ok(BacktrackTrace {
                run: finish(method, rec, x, Termination::Diverged),
                reduction_count,
                steps: audit,
            });
        }
        if method == ProxMethod::Fista {
            let (momentum, t_next) = t.advance();
            t = t_next;
            y_fista = Mat::lincomb2(1.0 + momentum, &x, -momentum, &x_prev);
        }
    }
    Ok(BacktrackTrace {
        run: finish(method, rec, x, Termination::MaxIter),
        reduction_count,
        steps: audit,
    })
}
