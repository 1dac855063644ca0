//! Thin singular value decomposition via one-sided (Hestenes) Jacobi.
//!
//! Columns of the working copy are orthogonalized pairwise with plane
//! rotations; on convergence the column norms are the singular values and the
//! accumulated rotations form the right factor. Single-threaded and fully
//! deterministic, which the proximal solvers rely on for reproducible runs.

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Convergence tolerance on normalized column correlations.
const JACOBI_TOL: f64 = 1e-12;
/// Sweep cap; exceeding it is reported as a numerical failure.
const MAX_SWEEPS: usize = 60;

/// Thin SVD `X = U diag(sigma) V^T` with `sigma` sorted non-increasing.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    /// rows x r, orthonormal columns.
    pub u: Mat,
    /// r singular values, non-increasing.
    pub sigma: Vec<f64>,
    /// cols x r, orthonormal columns.
    pub v: Mat,
}

impl SvdFactors {
    /// Reconstruct `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Mat {
        let r = self.sigma.len();
        let mut us = self.u.clone();
        for j in 0..r {
            for i in 0..us.rows {
                us.data[i * r + j] *= self.sigma[j];
            }
        }
        us.matmul_nt(&self.v)
    }
}

/// Column-major working storage: column j occupies `data[j*rows .. (j+1)*rows]`.
struct Cols {
    rows: usize,
    data: Vec<f64>,
}

impl Cols {
    fn from_row_major(m: &Mat) -> Cols {
        let mut data = vec![0.0; m.rows * m.cols];
        for i in 0..m.rows {
            for j in 0..m.cols {
                data[j * m.rows + i] = m.data[i * m.cols + j];
            }
        }
        Cols { rows: m.rows, data }
    }

    fn identity(n: usize) -> Cols {
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            data[j * n + j] = 1.0;
        }
        Cols { rows: n, data }
    }

    #[inline]
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Simultaneous mutable access to columns p < q.
    #[inline]
    fn col_pair_mut(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let (head, tail) = self.data.split_at_mut(q * self.rows);
        (&mut head[p * self.rows..(p + 1) * self.rows], &mut tail[..self.rows])
    }
}

#[inline]
fn rotate(cp: &mut [f64], cq: &mut [f64], c: f64, s: f64) {
    for i in 0..cp.len() {
        let x = cp[i];
        let y = cq[i];
        cp[i] = c * x - s * y;
        cq[i] = s * x + c * y;
    }
}

/// One-sided Jacobi on a matrix with `rows >= cols`.
fn jacobi_tall(x: &Mat) -> Result<SvdFactors> {
    let m = x.rows;
    let n = x.cols;
    let mut a = Cols::from_row_major(x);
    let mut v = Cols::identity(n);

    let mut norms_sq: Vec<f64> = (0..n).map(|j| crate::linalg::dot(a.col(j), a.col(j))).collect();

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        // Refresh cached norms once per sweep to keep incremental drift in check.
        for j in 0..n {
            norms_sq[j] = crate::linalg::dot(a.col(j), a.col(j));
        }
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let app = norms_sq[p];
                let aqq = norms_sq[q];
                if app == 0.0 && aqq == 0.0 {
                    continue;
                }
                let apq = crate::linalg::dot(a.col(p), a.col(q));
                if apq.abs() <= JACOBI_TOL * (app * aqq).sqrt() {
                    continue;
                }
                // Rotation angle that zeroes the (p,q) correlation.
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                {
                    let (cp, cq) = a.col_pair_mut(p, q);
                    rotate(cp, cq, c, s);
                }
                {
                    let (vp, vq) = v.col_pair_mut(p, q);
                    rotate(vp, vq, c, s);
                }
                norms_sq[p] = app - t * apq;
                norms_sq[q] = aqq + t * apq;
                rotated = true;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNoConvergence { sweeps: MAX_SWEEPS });
    }

    // Extract singular values and sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = (0..n).map(|j| crate::linalg::dot(a.col(j), a.col(j)).sqrt()).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).unwrap());

    let mut u = Mat::zeros(m, n);
    let mut vr = Mat::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut zero_cols = Vec::new();
    for (out_j, &src_j) in order.iter().enumerate() {
        let s = sig[src_j];
        sigma.push(s);
        let col = a.col(src_j);
        if s > 0.0 {
            for i in 0..m {
                u.data[i * n + out_j] = col[i] / s;
            }
        } else {
            zero_cols.push(out_j);
        }
        let vcol = v.col(src_j);
        for i in 0..n {
            vr.data[i * n + out_j] = vcol[i];
        }
    }
    if !zero_cols.is_empty() {
        fill_orthonormal(&mut u, &zero_cols);
    }

    Ok(SvdFactors { u, sigma, v: vr })
}

/// Complete zero columns of `u` to an orthonormal set (deterministic
/// Gram-Schmidt against the standard basis).
fn fill_orthonormal(u: &mut Mat, zero_cols: &[usize]) {
    let m = u.rows;
    let n = u.cols;
    for &j in zero_cols {
        let mut best: Option<Vec<f64>> = None;
        for e in 0..m {
            let mut cand = vec![0.0; m];
            cand[e] = 1.0;
            for k in 0..n {
                if zero_cols.contains(&k) && k >= j {
                    continue; // not yet filled
                }
                let proj: f64 = (0..m).map(|i| u.data[i * n + k] * cand[i]).sum();
                for i in 0..m {
                    cand[i] -= proj * u.data[i * n + k];
                }
            }
            let nrm = crate::linalg::norm2(&cand);
            if nrm > 0.5 {
                for x in cand.iter_mut() {
                    *x /= nrm;
                }
                best = Some(cand);
                break;
            }
        }
        let col = best.expect("orthonormal completion exists");
        for i in 0..m {
            u.data[i * n + j] = col[i];
        }
    }
}

/// Thin SVD of an arbitrary dense matrix.
pub fn svd(x: &Mat) -> Result<SvdFactors> {
    if !x.is_finite() {
        let idx = crate::linalg::first_non_finite(&x.data).unwrap_or(0);
        return Err(Error::NonFinite { context: "svd input", index: idx });
    }
    if x.rows >= x.cols {
        jacobi_tall(x)
    } else {
        let f = jacobi_tall(&x.transpose())?;
        Ok(SvdFactors { u: f.v, sigma: f.sigma, v: f.u })
    }
}

/// Singular-value soft thresholding: `U max(Sigma - tau, 0) V^T`.
pub fn svt(y: &Mat, tau: f64) -> Result<Mat> {
    Ok(svt_with_values(y, tau)?.0)
}

/// Soft thresholding that also returns the surviving (shrunk) singular
/// values; the proximal solvers read the output's nuclear norm off them
/// instead of paying for a second decomposition.
pub fn svt_with_values(y: &Mat, tau: f64) -> Result<(Mat, Vec<f64>)> {
    assert!(tau >= 0.0, "threshold must be nonnegative");
    let f = svd(y)?;
    let kept: Vec<usize> = (0..f.sigma.len()).filter(|&j| f.sigma[j] > tau).collect();
    let r = kept.len();
    if r == 0 {
        return Ok((Mat::zeros(y.rows, y.cols), Vec::new()));
    }
    // Scale the retained U columns by the shrunk values, then multiply by V^T.
    let mut us = Mat::zeros(y.rows, r);
    let mut vs = Mat::zeros(y.cols, r);
    let full = f.sigma.len();
    let mut shrunk = Vec::with_capacity(r);
    for (out_j, &j) in kept.iter().enumerate() {
        let s = f.sigma[j] - tau;
        shrunk.push(s);
        for i in 0..y.rows {
            us.data[i * r + out_j] = f.u.data[i * full + j] * s;
        }
        for i in 0..y.cols {
            vs.data[i * r + out_j] = f.v.data[i * full + j];
        }
    }
    Ok((us.matmul_nt(&vs), shrunk))
}

/// Nuclear norm (sum of singular values).
pub fn nuclear_norm(x: &Mat) -> Result<f64> {
    Ok(svd(x)?.sigma.iter().sum())
}

/// Largest singular value.
pub fn spectral_norm(x: &Mat) -> Result<f64> {
    Ok(svd(x)?.sigma.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = SplitMix64::new(seed);
        Mat::from_fn(rows, cols, |_, _| rng.next_gaussian())
    }

    fn check_factors(x: &Mat, f: &SvdFactors) {
        let recon = f.reconstruct();
        let err = recon.sub(x).frob_norm();
        assert!(err <= 1e-9 * x.frob_norm().max(1.0), "reconstruction error {err}");
        // Orthonormality of U and V.
        for (q, label) in [(&f.u, "U"), (&f.v, "V")] {
            let g = q.transpose().matmul(q);
            for i in 0..g.rows {
                for j in 0..g.cols {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (g.get(i, j) - want).abs() < 1e-10,
                        "{label}^T {label} deviates at ({i},{j}): {}",
                        g.get(i, j)
                    );
                }
            }
        }
        for w in f.sigma.windows(2) {
            assert!(w[0] >= w[1], "sigma not sorted: {:?}", f.sigma);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let x = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]);
        let f = svd(&x).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-12);
        assert!((f.sigma[1] - 1.0).abs() < 1e-12);
        check_factors(&x, &f);
    }

    #[test]
    fn rank_one_outer_product() {
        // u with norm 2, v with norm 5 -> single singular value 10.
        let u = [2.0, 0.0, 0.0];
        let v = [3.0, 4.0];
        let x = Mat::from_fn(3, 2, |i, j| u[i] * v[j]);
        let f = svd(&x).unwrap();
        assert!((f.sigma[0] - 10.0).abs() < 1e-9, "sigma {:?}", f.sigma);
        assert!(f.sigma[1].abs() < 1e-9);
        check_factors(&x, &f);
    }

    #[test]
    fn random_square_and_rectangular() {
        for (r, c, seed) in [(20, 20, 1u64), (17, 9, 2), (9, 17, 3)] {
            let x = random_mat(r, c, seed);
            let f = svd(&x).unwrap();
            assert_eq!(f.sigma.len(), r.min(c));
            check_factors(&x, &f);
        }
    }

    #[test]
    fn zero_matrix_has_orthonormal_factors() {
        let x = Mat::zeros(4, 3);
        let f = svd(&x).unwrap();
        assert!(f.sigma.iter().all(|&s| s == 0.0));
        check_factors(&x, &f);
    }

    #[test]
    fn svt_full_shrinkage_gives_zero() {
        let x = random_mat(8, 6, 4);
        let smax = svd(&x).unwrap().sigma[0];
        let z = svt(&x, smax + 1.0).unwrap();
        assert_eq!(z.data, vec![0.0; 48]);
    }

    #[test]
    fn svt_diagonal() {
        let x = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]);
        let z = svt(&x, 2.0).unwrap();
        assert!((z.get(0, 0) - 1.0).abs() < 1e-10);
        for (i, j) in [(0, 1), (1, 0), (1, 1)] {
            assert!(z.get(i, j).abs() < 1e-10);
        }
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let x = random_mat(10, 7, 5);
        let z = svt(&x, 0.0).unwrap();
        assert!(z.sub(&x).frob_norm() <= 1e-9 * x.frob_norm());
    }

    #[test]
    fn svt_output_singular_values_are_shrunk() {
        let x = random_mat(12, 12, 6);
        let tau = 1.5;
        let before = svd(&x).unwrap().sigma;
        let after = svd(&svt(&x, tau).unwrap()).unwrap().sigma;
        for (b, a) in before.iter().zip(&after) {
            assert!((a - (b - tau).max(0.0)).abs() < 1e-8, "sigma {b} -> {a}");
        }
    }

    #[test]
    fn nuclear_norm_diagonal() {
        let x = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]);
        assert!((nuclear_norm(&x).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn nuclear_norm_rank_one() {
        let u = [1.0, 2.0, 2.0]; // norm 3
        let v = [2.0, 1.0, 2.0, 4.0]; // norm 5
        let x = Mat::from_fn(3, 4, |i, j| u[i] * v[j]);
        assert!((nuclear_norm(&x).unwrap() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut x = Mat::zeros(2, 2);
        x.set(1, 1, f64::NAN);
        assert!(matches!(svd(&x), Err(Error::NonFinite { .. })));
    }
}
