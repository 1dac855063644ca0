//! Absolute-stability analysis of the discrete schemes on quadratics.
//!
//! Freezing the Hessian turns each scheme's large-n error propagation into a
//! constant-coefficient linear recurrence; its characteristic polynomial in
//! the nondimensional step `z = s * grad^2 F` decides whether perturbations
//! are amplified. The two-point scheme yields a quadratic, the stabilized
//! scheme a cubic that factors as `(lambda - 1/2)(lambda^2 - (2-z)lambda + 1)`.

use crate::error::Result;
use crate::objective::Quadratic;
use crate::scheme::{asymptotic_weights, scheme_coefficients};
use crate::stepper::{nag_step, sag_step, NagState, SagState, Scheme};

// ─── Complex arithmetic (just enough for root work) ─────────────────────────

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Complex {
        Complex { re, im }
    }

    pub fn real(re: f64) -> Complex {
        Complex { re, im: 0.0 }
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn add(&self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(&self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }

    pub fn mul(&self, o: Complex) -> Complex {
        Complex::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    pub fn scale(&self, s: f64) -> Complex {
        Complex::new(s * self.re, s * self.im)
    }

    pub fn div(&self, o: Complex) -> Complex {
        let d = o.re * o.re + o.im * o.im;
        Complex::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }
}

// ─── Characteristic polynomials ─────────────────────────────────────────────

/// Monic characteristic polynomial of a scheme at nondimensional step `z`.
#[derive(Clone, Debug)]
pub struct CharPoly {
    /// Monic coefficients, highest degree first; `coeffs[0] == 1`.
    pub coeffs: Vec<f64>,
    /// The nondimensional product `s * grad^2 F` the polynomial was built from.
    pub z: f64,
    /// Known factorization `(lambda - root) * (lambda^2 + p lambda + q)`,
    /// available for the stabilized cubic.
    pub factorization: Option<(f64, [f64; 2])>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluate at a complex point.
    pub fn eval(&self, lambda: Complex) -> Complex {
        let mut acc = Complex::real(0.0);
        for &c in &self.coeffs {
            acc = acc.mul(lambda).add(Complex::real(c));
        }
        acc
    }
}

/// Two-point scheme: `lambda^2 - (2 - 2z) lambda + (1 - z)`.
pub fn nag_char(z: f64) -> CharPoly {
    CharPoly { coeffs: vec![1.0, -(2.0 - 2.0 * z), 1.0 - z], z, factorization: None }
}

/// Stabilized scheme: `lambda^3 - (5/2 - z) lambda^2 + (2 - z/2) lambda - 1/2`,
/// which factors as `(lambda - 1/2)(lambda^2 - (2 - z) lambda + 1)`.
pub fn sag_char(z: f64) -> CharPoly {
    CharPoly {
        coeffs: vec![1.0, -(2.5 - z), 2.0 - 0.5 * z, -0.5],
        z,
        factorization: Some((0.5, [-(2.0 - z), 1.0])),
    }
}

/// Characteristic cubic of the general four-term family in its large-n limit.
/// The limit weights depend only on the alpha triple, so every parameter
/// choice produces the same polynomial — which is the point of the
/// invariance check below.
pub fn general_scheme_char(k: f64, m1: f64, m2: f64, z: f64) -> Result<CharPoly> {
    let coeffs = scheme_coefficients(k, m1, m2);
    let w = asymptotic_weights(&coeffs)?;
    // Jacobian of the update (x_{n+1} depends on x_n both directly and
    // through the gradient point, whose weights tend to 2 and -1):
    let a = w[0] + 2.0 * w[3] * z;
    let b = w[1] - w[3] * z;
    let c = w[2];
    Ok(CharPoly { coeffs: vec![1.0, -a, -b, -c], z, factorization: None })
}

// ─── Root solving ───────────────────────────────────────────────────────────

fn quadratic_roots(b: f64, c: f64) -> [Complex; 2] {
    // Roots of lambda^2 + b lambda + c.
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // Avoid cancellation: compute the larger-magnitude root first.
        let q = -0.5 * (b + b.signum() * sq);
        let r1 = if b == 0.0 { Complex::real(sq / 2.0) } else { Complex::real(q) };
        let r2 = if q != 0.0 { Complex::real(c / q) } else { Complex::real(-b - r1.re) };
        [r1, r2]
    } else {
        let sq = (-disc).sqrt();
        [Complex::new(-b / 2.0, sq / 2.0), Complex::new(-b / 2.0, -sq / 2.0)]
    }
}

fn cubic_roots(b: f64, c: f64, d: f64) -> [Complex; 3] {
    // Roots of lambda^3 + b lambda^2 + c lambda + d (Cardano, trig form for
    // the three-real-root case), each polished with one Newton step.
    let shift = -b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    let mut roots = if disc > 0.0 {
        // One real root, complex pair.
        let sq = disc.sqrt();
        let u = cbrt(-q / 2.0 + sq);
        let v = cbrt(-q / 2.0 - sq);
        let real = u + v;
        let re_pair = -real / 2.0;
        let im_pair = (u - v) * 3f64.sqrt() / 2.0;
        [
            Complex::real(real + shift),
            Complex::new(re_pair + shift, im_pair),
            Complex::new(re_pair + shift, -im_pair),
        ]
    } else {
        // Three real roots.
        let r = (-p / 3.0).max(0.0).sqrt();
        let arg = if r == 0.0 { 0.0 } else { (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0) };
        let phi = arg.acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        [
            Complex::real(2.0 * r * phi.cos() + shift),
            Complex::real(2.0 * r * (phi - two_pi_3).cos() + shift),
            Complex::real(2.0 * r * (phi + two_pi_3).cos() + shift),
        ]
    };
    // Newton polish against the monic cubic.
    let poly = [1.0, b, c, d];
    for root in roots.iter_mut() {
        for _ in 0..2 {
            let mut val = Complex::real(0.0);
            let mut der = Complex::real(0.0);
            for &cf in &poly {
                der = der.mul(*root).add(val);
                val = val.mul(*root).add(Complex::real(cf));
            }
            if der.modulus() > 1e-30 {
                *root = root.sub(val.div(der));
            }
        }
    }
    roots
}

fn cbrt(x: f64) -> f64 {
    x.cbrt()
}

/// All roots of a degree-2 or degree-3 characteristic polynomial, sorted by
/// modulus descending. The stabilized cubic goes through the exact
/// factorization; other cubics use the closed form with a bisection fallback
/// when the residual check fails.
pub fn poly_roots(p: &CharPoly) -> Vec<Complex> {
    let mut roots = match p.degree() {
        2 => quadratic_roots(p.coeffs[1], p.coeffs[2]).to_vec(),
        3 => {
            if let Some((real_root, quad)) = p.factorization {
                let mut v = vec![Complex::real(real_root)];
                v.extend(quadratic_roots(quad[0], quad[1]));
                v
            } else {
                let candidate = cubic_roots(p.coeffs[1], p.coeffs[2], p.coeffs[3]).to_vec();
                if max_residual(p, &candidate) <= residual_bound(p, &candidate) {
                    candidate
                } else {
                    cubic_roots_bisection(p)
                }
            }
        }
        d => panic!("unsupported degree {d}"),
    };
    roots.sort_by(|a, b| b.modulus().partial_cmp(&a.modulus()).unwrap());
    roots
}

fn max_residual(p: &CharPoly, roots: &[Complex]) -> f64 {
    roots.iter().map(|&r| p.eval(r).modulus()).fold(0.0, f64::max)
}

fn residual_bound(p: &CharPoly, roots: &[Complex]) -> f64 {
    let deg = p.degree() as i32;
    roots
        .iter()
        .map(|r| 1e-10 * (1.0 + r.modulus().powi(deg)))
        .fold(f64::INFINITY, f64::min)
}

/// Fallback for ill-conditioned cubics: bracket one real root (a real cubic
/// always has one), deflate, and solve the remaining quadratic.
fn cubic_roots_bisection(p: &CharPoly) -> Vec<Complex> {
    let eval = |x: f64| ((x + p.coeffs[1]) * x + p.coeffs[2]) * x + p.coeffs[3];
    let bound = 1.0 + p.coeffs[1].abs().max(p.coeffs[2].abs()).max(p.coeffs[3].abs());
    let (mut lo, mut hi) = (-bound, bound);
    debug_assert!(eval(lo) <= 0.0 && eval(hi) >= 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    // Synthetic division by (lambda - r).
    let b = p.coeffs[1] + r;
    let c = p.coeffs[2] + r * b;
    let mut v = vec![Complex::real(r)];
    v.extend(quadratic_roots(b, c));
    v
}

// ─── Stability classification ───────────────────────────────────────────────

/// Multiplicity tolerance for unit-circle roots.
const ROOT_COINCIDENCE: f64 = 1e-8;

/// All roots inside the closed unit disk, with unit-modulus roots required to
/// be simple. `z = 0` is accepted by convention: the published regions are
/// closed at zero even though the origin carries a double root at 1.
pub fn is_absolutely_stable(p: &CharPoly, tol: f64) -> bool {
    assert!(tol > 0.0 && tol <= 1e-6);
    if p.z == 0.0 {
        return true;
    }
    let roots = poly_roots(p);
    for (i, r) in roots.iter().enumerate() {
        let m = r.modulus();
        if m > 1.0 + tol {
            return false;
        }
        if m >= 1.0 - tol {
            // Unit-modulus root: reject if another root coincides with it.
            for (j, other) in roots.iter().enumerate() {
                if i != j && r.sub(*other).modulus() <= ROOT_COINCIDENCE {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Analytic,
    Scanned,
}

/// Closed interval of nondimensional steps with stable error propagation.
#[derive(Clone, Debug)]
pub struct StabilityRegion {
    pub scheme: Scheme,
    pub z_lo: f64,
    pub z_hi: f64,
    pub grid_step: f64,
    pub boundary: BoundaryKind,
}

/// Exact region endpoints: `[0, 4/3]` for the two-point scheme, `[0, 4]` for
/// the stabilized one.
pub fn analytic_region(scheme: Scheme) -> StabilityRegion {
    let z_hi = match scheme {
        Scheme::Nag => 4.0 / 3.0,
        Scheme::Sag => 4.0,
    };
    StabilityRegion { scheme, z_lo: 0.0, z_hi, grid_step: 0.0, boundary: BoundaryKind::Analytic }
}

fn char_for(scheme: Scheme, z: f64) -> CharPoly {
    match scheme {
        Scheme::Nag => nag_char(z),
        Scheme::Sag => sag_char(z),
    }
}

/// Scan `z` over `[0, z_max]` and return the maximal stable prefix interval.
/// No stable point beyond the first unstable one is reported as the boundary.
pub fn stable_region(scheme: Scheme, z_max: f64, grid: f64) -> StabilityRegion {
    assert!(grid <= 1e-3 * z_max, "grid too coarse for the requested range");
    let scan = scan_region(z_max, grid, |z| is_absolutely_stable(&char_for(scheme, z), 1e-9));
    StabilityRegion { scheme, z_lo: 0.0, z_hi: scan, grid_step: grid, boundary: BoundaryKind::Scanned }
}

fn scan_region(z_max: f64, grid: f64, stable_at: impl Fn(f64) -> bool) -> f64 {
    let steps = (z_max / grid).round() as usize;
    let mut last_stable = 0.0;
    for i in 0..=steps {
        let z = i as f64 * grid;
        if stable_at(z) {
            last_stable = z;
        } else {
            break;
        }
    }
    last_stable
}

/// Per-z scan row for CSV output.
#[derive(Clone, Debug)]
pub struct ScanRow {
    pub z: f64,
    pub max_root_modulus: f64,
    pub stable: bool,
}

pub fn region_scan_rows(scheme: Scheme, z_max: f64, grid: f64) -> Vec<ScanRow> {
    let steps = (z_max / grid).round() as usize;
    (0..=steps)
        .map(|i| {
            let z = i as f64 * grid;
            let p = char_for(scheme, z);
            let max_root_modulus = poly_roots(&p)[0].modulus();
            ScanRow { z, max_root_modulus, stable: is_absolutely_stable(&p, 1e-9) }
        })
        .collect()
}

/// Rebuild the large-n cubic for each parameter triple and confirm its
/// scanned stable region matches `[0, 4]` to within one grid step.
pub fn region_invariance_check(param_grid: &[(f64, f64, f64)]) -> Result<bool> {
    let grid = 1e-3;
    let z_max = 6.0;
    for &(k, m1, m2) in param_grid {
        let hi = scan_region(z_max, grid, |z| {
            general_scheme_char(k, m1, m2, z)
                .map(|p| is_absolutely_stable(&p, 1e-9))
                .unwrap_or(false)
        });
        general_scheme_char(k, m1, m2, 0.0)?; // propagate degenerate-scheme errors
        if (hi - 4.0).abs() > grid + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

// ─── Empirical probe ────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeOutcome {
    Bounded,
    Diverged,
}

impl ProbeOutcome {
    pub fn name(self) -> &'static str {
        match self {
            ProbeOutcome::Bounded => "bounded",
            ProbeOutcome::Diverged => "diverged",
        }
    }
}

/// Growth factor past burn-in that classifies a probe run as divergent.
const PROBE_GROWTH: f64 = 1e6;

/// Run the actual stepper on `F(x) = mu/2 x^2` from `x0 = 1` and classify
/// post-burn-in boundedness. The characteristic equations are large-n
/// approximations, so the transient iterations are skipped before judging.
pub fn empirical_probe(
    scheme: Scheme,
    mu: f64,
    s: f64,
    n_iters: usize,
    burn_in: usize,
) -> ProbeOutcome {
    assert!(burn_in >= 100);
    assert!(n_iters >= 10 * burn_in);
    let f = Quadratic::scalar(mu);
    let mut reference = f64::NAN;
    let mut worst: f64 = 0.0;

    let mut record = |iter: usize, x: f64| -> Option<ProbeOutcome> {
        if !x.is_finite() {
            return Some(ProbeOutcome::Diverged);
        }
        if iter == burn_in {
            reference = x.abs();
        } else if iter > burn_in {
            worst = worst.max(x.abs());
            if worst > PROBE_GROWTH * reference {
                return Some(ProbeOutcome::Diverged);
            }
        }
        None
    };

    match scheme {
        Scheme::Nag => {
            let mut state = NagState::start(&[1.0], s);
            for iter in 1..=n_iters {
                state = match nag_step(state, &f) {
                    Ok(st) => st,
                    Err(_) => return ProbeOutcome::Diverged,
                };
                if let Some(out) = record(iter, state.x_curr[0]) {
                    return out;
                }
            }
        }
        Scheme::Sag => {
            let mut state = SagState::start(&[1.0], s);
            for iter in 1..=n_iters {
                state = match sag_step(state, &f) {
                    Ok(st) => st,
                    Err(_) => return ProbeOutcome::Diverged,
                };
                if let Some(out) = record(iter, state.x_curr[0]) {
                    return out;
                }
            }
        }
    }
    ProbeOutcome::Bounded
}
