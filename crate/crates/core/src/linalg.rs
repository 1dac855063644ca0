//! Dense vectors and matrices.
//!
//! Everything here is plain `f64` storage: vectors are slices, matrices are
//! row-major `Vec<f64>`. Desk-scale problems (a few hundred rows/columns) do
//! not warrant an external linear-algebra dependency.

// ─── Vector helpers ─────────────────────────────────────────────────────────

/// Dot product with four-way accumulation (vectorizes well, stable enough here).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..a.len() {
        tail += a[j] * b[j];
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, &x| m.max(x.abs()))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Index of the first non-finite entry, if any.
pub fn first_non_finite(a: &[f64]) -> Option<usize> {
    a.iter().position(|x| !x.is_finite())
}

/// `w1*a + w2*b`, elementwise.
pub fn lincomb2(w1: f64, a: &[f64], w2: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| w1 * x + w2 * y).collect()
}

/// `w1*a + w2*b + w3*c`, elementwise.
pub fn lincomb3(w1: f64, a: &[f64], w2: f64, b: &[f64], w3: f64, c: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((&x, &y), &z)| w1 * x + w2 * y + w3 * z)
        .collect()
}

/// `a - s*g`, elementwise.
pub fn step_back(a: &[f64], s: f64, g: &[f64]) -> Vec<f64> {
    a.iter().zip(g).map(|(&x, &gx)| x - s * gx).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

// ─── Dense row-major matrix ─────────────────────────────────────────────────

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// Frobenius inner product `<self, other>`.
    pub fn frob_dot(&self, other: &Mat) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        dot(&self.data, &other.data)
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| s * x).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// `w1*A + w2*B`, elementwise.
    pub fn lincomb2(w1: f64, a: &Mat, w2: f64, b: &Mat) -> Mat {
        debug_assert_eq!((a.rows, a.cols), (b.rows, b.cols));
        Mat { rows: a.rows, cols: a.cols, data: lincomb2(w1, &a.data, w2, &b.data) }
    }

    /// `w1*A + w2*B + w3*C`, elementwise.
    pub fn lincomb3(w1: f64, a: &Mat, w2: f64, b: &Mat, w3: f64, c: &Mat) -> Mat {
        Mat { rows: a.rows, cols: a.cols, data: lincomb3(w1, &a.data, w2, &b.data, w3, &c.data) }
    }

    /// `A - s*G`, elementwise.
    pub fn step_back(&self, s: f64, g: &Mat) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: step_back(&self.data, s, &g.data) }
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                for j in 0..other.cols {
                    orow[j] += a * brow[j];
                }
            }
        }
        out
    }

    /// `self * other^T`.
    pub fn matmul_nt(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let arow = self.row(i);
            for j in 0..other.rows {
                out.set(i, j, dot(arow, other.row(j)));
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }
}

// ─── 2x2 matrices (transition-matrix bounds) ────────────────────────────────

/// A 2x2 real matrix, stored as `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    /// Spectral norm from the closed-form eigenvalues of the 2x2 Gram matrix.
    pub fn spectral_norm(&self) -> f64 {
        let a = &self.0;
        // G = A^T A, symmetric.
        let g00 = a[0][0] * a[0][0] + a[1][0] * a[1][0];
        let g01 = a[0][0] * a[0][1] + a[1][0] * a[1][1];
        let g11 = a[0][1] * a[0][1] + a[1][1] * a[1][1];
        let tr = g00 + g11;
        let det = g00 * g11 - g01 * g01;
        let disc = (tr * tr - 4.0 * det).max(0.0);
        let lam_max = 0.5 * (tr + disc.sqrt());
        lam_max.max(0.0).sqrt()
    }

    pub fn sub(&self, other: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &other.0;
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}
