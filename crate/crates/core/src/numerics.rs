//! Dense matrix primitives, minimum-norm least squares and log-binomials.

use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};

/// Default relative singular-value cutoff for rank decisions.
pub const DEFAULT_SV_TOL: f64 = 1e-10;

/// Dense real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(r, c, rows.concat())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_binary(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn column_is_zero(&self, j: usize) -> bool {
        (0..self.rows).all(|i| self.get(i, j) == 0.0)
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::invalid(format!(
                "vector length {} does not match {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .filter(|(_, &xj)| xj != 0.0)
                    .map(|(a, xj)| a * xj)
                    .sum()
            })
            .collect())
    }

    /// `selfᵀ · x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::invalid(format!(
                "vector length {} does not match {} rows",
                x.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`.
    pub fn tr_mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::invalid(format!(
                "row counts differ: {} vs {}",
                self.rows, other.rows
            )));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for l in 0..self.rows {
            let a = self.row(l);
            let b = other.row(l);
            for (i, &ai) in a.iter().enumerate() {
                if ai == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &bj) in dst.iter_mut().zip(b) {
                    *d += ai * bj;
                }
            }
        }
        Ok(out)
    }

    /// Rows and columns reordered: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Matrix {
        assert_eq!(self.rows, self.cols);
        assert_eq!(perm.len(), self.rows);
        Self::from_fn(self.rows, self.cols, |i, j| self.get(perm[i], perm[j]))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

/// Minimum-norm minimizer of `‖a·x − b‖₂`.
///
/// Identically-zero columns of `a` are dropped before factorizing, so their
/// coordinates in the result are exactly zero. The remaining system is solved
/// through a thin SVD, treating singular values below `sv_tol · σ_max` as zero.
pub fn solve_min_norm_least_squares(a: &Matrix, b: &[f64], sv_tol: f64) -> Result<Vec<f64>> {
    if a.rows() != b.len() {
        return Err(Error::invalid(format!(
            "right-hand side has length {} but matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    if !(sv_tol > 0.0 && sv_tol.is_finite()) {
        return Err(Error::invalid(format!("sv_tol must be positive, got {sv_tol}")));
    }
    if !a.is_finite() || b.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite entries in least-squares input"));
    }

    let live: Vec<usize> = (0..a.cols()).filter(|&j| !a.column_is_zero(j)).collect();
    let mut x = vec![0.0; a.cols()];
    if live.is_empty() {
        return Ok(x);
    }

    let sub = Mat::<f64>::from_fn(a.rows(), live.len(), |i, c| a.get(i, live[c]));
    let svd = sub
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    let sigma = svd.S().column_vector();
    let (u, v) = (svd.U(), svd.V());
    let rank = sigma.nrows();
    let sigma_max = (0..rank).map(|c| sigma[c]).fold(0.0, f64::max);
    let cutoff = sv_tol * sigma_max;

    // x = V Σ⁺ Uᵀ b, restricted to singular values above the cutoff
    let coeffs: Vec<f64> = (0..rank)
        .map(|c| {
            if sigma[c] > cutoff {
                (0..a.rows()).map(|i| u[(i, c)] * b[i]).sum::<f64>() / sigma[c]
            } else {
                0.0
            }
        })
        .collect();
    let sol: Vec<f64> = (0..live.len())
        .map(|j| (0..rank).map(|c| v[(j, c)] * coeffs[c]).sum())
        .collect();
    for (&j, &val) in live.iter().zip(sol.iter()) {
        x[j] = val;
    }
    Ok(x)
}

/// Copy of `g` with every column outside `keep` zeroed.
pub fn mask_columns(g: &Matrix, keep: &[usize]) -> Result<Matrix> {
    let mut kept = vec![false; g.cols()];
    for &j in keep {
        if j >= g.cols() {
            return Err(Error::invalid(format!(
                "column index {j} out of range for {} columns",
                g.cols()
            )));
        }
        kept[j] = true;
    }
    Ok(Matrix::from_fn(g.rows(), g.cols(), |i, j| {
        if kept[j] {
            g.get(i, j)
        } else {
            0.0
        }
    }))
}

/// `ln C(n, r)`, accumulated as `Σ ln((n − m + i) / i)` over `i ≤ m = min(r, n − r)`.
pub fn log_binomial(n: u64, r: u64) -> Result<f64> {
    if r > n {
        return Err(Error::invalid(format!("log_binomial: r = {r} exceeds n = {n}")));
    }
    let m = r.min(n - r);
    let base = (n - m) as f64;
    Ok((1..=m).map(|i| ((base + i as f64) / i as f64).ln()).sum())
}
