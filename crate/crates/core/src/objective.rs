//! Smooth convex objective functions.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::linalg::Mat;
use crate::rng::SplitMix64;

/// A smooth convex objective F with gradient oracle.
///
/// Implementations must be safe for concurrent read-only use; independent
/// trajectories run in parallel against a shared objective.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// F(x).
    fn value(&self, x: &[f64]) -> f64;

    /// Gradient of F at x; output length equals `dim()`.
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Lipschitz constant of the gradient, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Action of the Hessian at `x` on `v`, when available. Stability probes
    /// on quadratics are the only consumer.
    fn curvature_at(&self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        let _ = (x, v);
        None
    }
}

// ─── Quadratic ──────────────────────────────────────────────────────────────

/// F(x) = 1/2 x^T A x with A symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct Quadratic {
    a: Mat,
    lip: f64,
}

impl Quadratic {
    /// General symmetric PSD matrix. Symmetry is required; the Lipschitz
    /// constant is the largest eigenvalue, computed once up front.
    pub fn new(a: Mat) -> Quadratic {
        assert_eq!(a.rows, a.cols, "quadratic matrix must be square");
        for i in 0..a.rows {
            for j in 0..i {
                assert!(
                    (a.get(i, j) - a.get(j, i)).abs() <= 1e-12 * a.max_abs().max(1.0),
                    "matrix must be symmetric"
                );
            }
        }
        let lip = crate::svd::spectral_norm(&a).expect("finite matrix");
        Quadratic { a, lip }
    }

    /// One-dimensional F(x) = mu/2 x^2.
    pub fn scalar(mu: f64) -> Quadratic {
        Quadratic::new(Mat::from_rows(&[vec![mu]]))
    }

    pub fn diagonal(d: &[f64]) -> Quadratic {
        let n = d.len();
        Quadratic::new(Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }))
    }

    pub fn matrix(&self) -> &Mat {
        &self.a
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.a.rows
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * crate::linalg::dot(x, &self.a.matvec(x))
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.a.matvec(x)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lip)
    }

    fn curvature_at(&self, _x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        Some(self.a.matvec(v))
    }
}

// ─── Separable quadratic with a shifted minimizer ───────────────────────────

/// F(x) = 1/2 ||x - target||^2. The smooth part of matrix completion with a
/// full mask flattens to exactly this, which the cross-module reduction tests
/// exploit.
#[derive(Clone, Debug)]
pub struct ShiftedQuadratic {
    target: Vec<f64>,
}

impl ShiftedQuadratic {
    pub fn new(target: Vec<f64>) -> Self {
        Self { target }
    }
}

impl Objective for ShiftedQuadratic {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        crate::linalg::sub(x, &self.target)
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }

    fn curvature_at(&self, _x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        Some(v.to_vec())
    }
}

// ─── Logistic loss ──────────────────────────────────────────────────────────

/// Mean logistic loss over a synthetic binary dataset:
/// F(x) = (1/m) sum_i ln(1 + exp(-y_i <a_i, x>)).
///
/// Infinitely differentiable, so it qualifies for the higher-order
/// truncation ladders alongside the quadratic.
#[derive(Clone, Debug)]
pub struct Logistic {
    features: Mat,
    labels: Vec<f64>,
    lip: f64,
}

impl Logistic {
    /// Deterministic synthetic instance: Gaussian features, labels from a
    /// Gaussian ground-truth separator with a little label noise.
    pub fn synthetic(dim: usize, samples: usize, seed: u64) -> Logistic {
        let mut rng = SplitMix64::new(seed);
        let features = Mat::from_fn(samples, dim, |_, _| rng.next_gaussian());
        let truth: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        let labels: Vec<f64> = (0..samples)
            .map(|i| {
                let margin = crate::linalg::dot(features.row(i), &truth) + 0.1 * rng.next_gaussian();
                if margin >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        // Hessian is (1/m) A^T D A with D diagonal, entries <= 1/4.
        let smax = crate::svd::spectral_norm(&features).expect("finite features");
        let lip = smax * smax / (4.0 * samples as f64);
        Logistic { features, labels, lip }
    }
}

impl Objective for Logistic {
    fn dim(&self) -> usize {
        self.features.cols
    }

    fn value(&self, x: &[f64]) -> f64 {
        let m = self.labels.len() as f64;
        let mut total = 0.0;
        for i in 0..self.labels.len() {
            let margin = self.labels[i] * crate::linalg::dot(self.features.row(i), x);
            // ln(1 + exp(-margin)), evaluated without overflow.
            total += if margin > 0.0 {
                (-margin).exp().ln_1p()
            } else {
                -margin + margin.exp().ln_1p()
            };
        }
        total / m
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let m = self.labels.len() as f64;
        let mut g = vec![0.0; self.dim()];
        for i in 0..self.labels.len() {
            let row = self.features.row(i);
            let margin = self.labels[i] * crate::linalg::dot(row, x);
            let sigma = 1.0 / (1.0 + margin.exp());
            let w = -self.labels[i] * sigma / m;
            for (gj, &aj) in g.iter_mut().zip(row) {
                *gj += w * aj;
            }
        }
        g
    }

    fn lipschitz(&self) -> Option<f64> {
        Some(self.lip)
    }
}

// ─── Instrumentation ────────────────────────────────────────────────────────

/// Wrapper counting oracle calls; used by the one-gradient-per-step tests.
pub struct CountingObjective<'a> {
    inner: &'a dyn Objective,
    value_calls: AtomicUsize,
    gradient_calls: AtomicUsize,
}

impl<'a> CountingObjective<'a> {
    pub fn new(inner: &'a dyn Objective) -> Self {
        Self { inner, value_calls: AtomicUsize::new(0), gradient_calls: AtomicUsize::new(0) }
    }

    pub fn value_calls(&self) -> usize {
        self.value_calls.load(Ordering::Relaxed)
    }

    pub fn gradient_calls(&self) -> usize {
        self.gradient_calls.load(Ordering::Relaxed)
    }
}

impl Objective for CountingObjective<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_calls.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }

    fn curvature_at(&self, x: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        self.inner.curvature_at(x, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite difference of F along coordinate `e`.
    fn central_diff(f: &dyn Objective, x: &[f64], e: usize, eps: f64) -> f64 {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[e] += eps;
        xm[e] -= eps;
        (f.value(&xp) - f.value(&xm)) / (2.0 * eps)
    }

    #[test]
    fn quadratic_gradient_is_ax_exactly() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let q = Quadratic::new(a.clone());
        let x = [0.7, -1.3];
        let g = q.gradient(&x);
        let ax = a.matvec(&x);
        assert_eq!(g, ax);
        assert_eq!(g.len(), q.dim());
    }

    #[test]
    fn quadratic_lipschitz_is_largest_eigenvalue() {
        let q = Quadratic::diagonal(&[1.0, 4.0, 2.5]);
        assert!((q.lipschitz().unwrap() - 4.0).abs() < 1e-10);
        // [[2,1],[1,2]] has eigenvalues {1, 3}.
        let q2 = Quadratic::new(Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]));
        assert!((q2.lipschitz().unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn finite_difference_consistency() {
        // |central difference - gradient entry| <= c * eps^2 for the built-ins.
        let quad = Quadratic::new(Mat::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]));
        let logi = Logistic::synthetic(2, 25, 42);
        let x = [0.4, -0.8];
        for f in [&quad as &dyn Objective, &logi as &dyn Objective] {
            let g = f.gradient(&x);
            for e in 0..2 {
                for eps in [1e-3, 1e-4] {
                    let fd = central_diff(f, &x, e, eps);
                    // c = 10 covers the third-derivative constant of the
                    // logistic instance with plenty of slack; the quadratic
                    // is exact up to roundoff.
                    assert!(
                        (fd - g[e]).abs() <= 10.0 * eps * eps + 1e-10,
                        "fd {fd} vs grad {} at eps {eps}",
                        g[e]
                    );
                }
            }
        }
    }

    #[test]
    fn logistic_is_convex_along_a_line() {
        let f = Logistic::synthetic(3, 30, 7);
        let a = [0.2, -0.1, 0.5];
        let b = [-0.4, 0.3, 0.1];
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        assert!(f.value(&mid) <= 0.5 * f.value(&a) + 0.5 * f.value(&b) + 1e-12);
    }

    #[test]
    fn counting_wrapper_counts() {
        let q = Quadratic::scalar(1.0);
        let c = CountingObjective::new(&q);
        let _ = c.value(&[1.0]);
        let _ = c.gradient(&[1.0]);
        let _ = c.gradient(&[2.0]);
        assert_eq!(c.value_calls(), 1);
        assert_eq!(c.gradient_calls(), 2);
    }
}
