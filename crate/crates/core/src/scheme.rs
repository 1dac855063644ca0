//! The general four-term recurrence family and its coefficient algebra.
//!
//! The family is
//!
//! ```text
//! sum_{i=1..4} (alpha_i + beta_i/n + gamma_i/n^2) x_{n+2-i}
//!     = -h^2 grad F(x_n + ((n-3)/n)(x_n - x_{n-1}))
//! ```
//!
//! with the three coefficient triples closed-form in the free parameters
//! `(k, m1, m2)`. Every admissible choice is consistent (each triple sums to
//! zero), and dividing through by the leading coefficient yields the explicit
//! update weights used by the stabilized stepper.

use crate::error::{Error, Result};
use crate::rational::Ratio;

/// Coefficient arrays of the four-term recurrence for one `(k, m1, m2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeCoefficients {
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
    pub gamma: [f64; 4],
    pub k_param: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Evaluate the closed-form coefficient families.
pub fn scheme_coefficients(k: f64, m1: f64, m2: f64) -> SchemeCoefficients {
    SchemeCoefficients {
        alpha: [2.0, -5.0, 4.0, -1.0],
        beta: [4.5 - k, -6.0 + 3.0 * k, 1.5 - 3.0 * k, k],
        gamma: [m1, -(3.0 * m1 + m2 + 3.0) / 2.0, m2, (m1 - m2 + 3.0) / 2.0],
        k_param: k,
        m1,
        m2,
    }
}

impl SchemeCoefficients {
    /// `alpha_i + beta_i/n + gamma_i/n^2` for i = 0..4.
    fn raw_weights(&self, n: f64) -> [f64; 4] {
        let mut w = [0.0; 4];
        for i in 0..4 {
            w[i] = self.alpha[i] + self.beta[i] / n + self.gamma[i] / (n * n);
        }
        w
    }
}

/// Explicit update weights at index `n`: dividing the recurrence through by
/// the `x_{n+1}` coefficient gives
///
/// ```text
/// x_{n+1} = w[0] x_n + w[1] x_{n-1} + w[2] x_{n-2} + w[3] h^2 grad F(...)
/// ```
///
/// Returned as `[w0, w1, w2, w3]` (the gradient weight is negative for the
/// canonical parameter choice).
pub fn normalized_recurrence(coeffs: &SchemeCoefficients, n: u64) -> Result<[f64; 4]> {
    assert!(n >= 2, "recurrence index starts at n = 2");
    let raw = coeffs.raw_weights(n as f64);
    if raw[0] == 0.0 {
        return Err(Error::DegenerateScheme { n });
    }
    Ok([-raw[1] / raw[0], -raw[2] / raw[0], -raw[3] / raw[0], -1.0 / raw[0]])
}

/// Limits of the explicit update weights as n grows without bound. Only the
/// alpha triple survives, so the limit weights are shared by the entire
/// parameter family — this is what makes the stability region parameter-free.
pub fn asymptotic_weights(coeffs: &SchemeCoefficients) -> Result<[f64; 4]> {
    let a = coeffs.alpha;
    if a[0] == 0.0 {
        return Err(Error::DegenerateScheme { n: 0 });
    }
    Ok([-a[1] / a[0], -a[2] / a[0], -a[3] / a[0], -1.0 / a[0]])
}

// ─── Exact-rational twin ────────────────────────────────────────────────────

/// Coefficient triples in exact rational arithmetic.
pub fn scheme_coefficients_exact(k: Ratio, m1: Ratio, m2: Ratio) -> [[Ratio; 4]; 3] {
    let r = |n: i128, d: i128| Ratio::new(n, d);
    let alpha = [r(2, 1), r(-5, 1), r(4, 1), r(-1, 1)];
    let beta = [
        r(9, 2).sub(&k),
        r(-6, 1).add(&r(3, 1).mul(&k)),
        r(3, 2).sub(&r(3, 1).mul(&k)),
        k,
    ];
    let gamma = [
        m1,
        r(3, 1).mul(&m1).add(&m2).add(&r(3, 1)).div(&r(-2, 1)),
        m2,
        m1.sub(&m2).add(&r(3, 1)).div(&r(2, 1)),
    ];
    [alpha, beta, gamma]
}

/// Exact-rational explicit update weights at index `n`.
pub fn normalized_recurrence_exact(k: Ratio, m1: Ratio, m2: Ratio, n: i64) -> Result<[Ratio; 4]> {
    assert!(n >= 2);
    let [alpha, beta, gamma] = scheme_coefficients_exact(k, m1, m2);
    let nn = Ratio::from_int(n as i128);
    let nn2 = nn.mul(&nn);
    let raw: Vec<Ratio> = (0..4)
        .map(|i| alpha[i].add(&beta[i].div(&nn)).add(&gamma[i].div(&nn2)))
        .collect();
    if raw[0].is_zero() {
        return Err(Error::DegenerateScheme { n: n as u64 });
    }
    Ok([
        raw[1].div(&raw[0]).neg(),
        raw[2].div(&raw[0]).neg(),
        raw[3].div(&raw[0]).neg(),
        Ratio::ONE.div(&raw[0]).neg(),
    ])
}

/// The published closed-form weights of the canonical `(1/2, 0, 3)` scheme:
/// `((10n^2+9n+6)/(4n^2+8n), -(4n^2+3)/(2n^2+4n), (2n-1)/(4n+8), -n/(2n+4))`.
pub fn canonical_weights_exact(n: i64) -> [Ratio; 4] {
    let n = n as i128;
    [
        Ratio::new(10 * n * n + 9 * n + 6, 4 * n * n + 8 * n),
        Ratio::new(4 * n * n + 3, 2 * n * n + 4 * n).neg(),
        Ratio::new(2 * n - 1, 4 * n + 8),
        Ratio::new(n, 2 * n + 4).neg(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_parameter_choice() {
        let c = scheme_coefficients(0.5, 0.0, 3.0);
        assert_eq!(c.alpha, [2.0, -5.0, 4.0, -1.0]);
        assert_eq!(c.beta, [4.0, -4.5, 0.0, 0.5]);
        assert_eq!(c.gamma, [0.0, -3.0, 3.0, 0.0]);
    }

    #[test]
    fn zero_parameters() {
        let c = scheme_coefficients(0.0, 0.0, 0.0);
        assert_eq!(c.beta, [4.5, -6.0, 1.5, 0.0]);
        assert_eq!(c.gamma, [0.0, -1.5, 0.0, 1.5]);
    }

    #[test]
    fn normalized_weights_at_n2() {
        // (2, -19/16, 3/16, -1/4) at n = 2 for the canonical choice.
        let c = scheme_coefficients(0.5, 0.0, 3.0);
        let w = normalized_recurrence(&c, 2).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-14);
        assert!((w[1] + 19.0 / 16.0).abs() < 1e-14);
        assert!((w[2] - 3.0 / 16.0).abs() < 1e-14);
        assert!((w[3] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn exact_weights_at_n10() {
        let k = Ratio::new(1, 2);
        let w = normalized_recurrence_exact(k, Ratio::ZERO, Ratio::new(3, 1), 10).unwrap();
        // 1096/480 reduces to 137/60.
        assert_eq!(w[0], Ratio::new(137, 60));
        assert_eq!(w[1], Ratio::new(-403, 240));
        assert_eq!(w[2], Ratio::new(19, 48));
        assert_eq!(w[3], Ratio::new(-10, 24));
    }

    #[test]
    fn exact_weights_match_published_closed_form_up_to_100() {
        let k = Ratio::new(1, 2);
        for n in 2..=100 {
            let w = normalized_recurrence_exact(k, Ratio::ZERO, Ratio::new(3, 1), n).unwrap();
            let published = canonical_weights_exact(n);
            assert_eq!(w, published, "mismatch at n = {n}");
        }
    }

    #[test]
    fn float_path_matches_exact_path() {
        let k = Ratio::new(1, 2);
        let c = scheme_coefficients(0.5, 0.0, 3.0);
        for n in 2..=100u64 {
            let wf = normalized_recurrence(&c, n).unwrap();
            let we = normalized_recurrence_exact(k, Ratio::ZERO, Ratio::new(3, 1), n as i64).unwrap();
            for i in 0..4 {
                let exact = we[i].to_f64();
                assert!(
                    (wf[i] - exact).abs() <= 1e-12 * exact.abs().max(1.0),
                    "n={n} i={i}: {} vs {}",
                    wf[i],
                    exact
                );
            }
        }
    }

    #[test]
    fn asymptotic_weights_depend_only_on_alpha() {
        let a = asymptotic_weights(&scheme_coefficients(0.5, 0.0, 3.0)).unwrap();
        let b = asymptotic_weights(&scheme_coefficients(-2.0, 7.0, 0.25)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, [2.5, -2.0, 0.5, -0.5]);
    }

    proptest! {
        /// Each coefficient triple sums to zero for any parameter choice.
        #[test]
        fn triples_sum_to_zero(k in -10.0f64..10.0, m1 in -10.0f64..10.0, m2 in -10.0f64..10.0) {
            let c = scheme_coefficients(k, m1, m2);
            let tol = 1e-12 * (1.0 + k.abs() + m1.abs() + m2.abs());
            prop_assert!(c.alpha.iter().sum::<f64>().abs() <= tol);
            prop_assert!(c.beta.iter().sum::<f64>().abs() <= tol);
            prop_assert!(c.gamma.iter().sum::<f64>().abs() <= tol);
        }

        /// The three x-weights of the normalized recurrence sum to one.
        #[test]
        fn x_weights_sum_to_one(n in 2u64..200) {
            let c = scheme_coefficients(0.5, 0.0, 3.0);
            let w = normalized_recurrence(&c, n).unwrap();
            prop_assert!((w[0] + w[1] + w[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_x_weights_sum_to_one_rationally() {
        let k = Ratio::new(1, 2);
        for n in 2..=100 {
            let w = normalized_recurrence_exact(k, Ratio::ZERO, Ratio::new(3, 1), n).unwrap();
            let sum = w[0].add(&w[1]).add(&w[2]);
            assert_eq!(sum, Ratio::ONE, "n = {n}");
        }
    }

    #[test]
    fn degenerate_leading_coefficient_is_reported() {
        // Force alpha_1 + beta_1/n + gamma_1/n^2 = 0 at n = 2:
        // 2 + (4.5 - k)/2 + m1/4 = 0 with m1 = 0 -> k = 8.5.
        let c = scheme_coefficients(8.5, 0.0, 0.0);
        assert!(matches!(normalized_recurrence(&c, 2), Err(Error::DegenerateScheme { n: 2 })));
        assert!(normalized_recurrence(&c, 3).is_ok());
    }
}
