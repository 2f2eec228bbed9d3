//! Small dense vector and matrix helpers.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Row-major dense matrix. Serialized as nested row arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds from nested rows; fails with a description if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, String> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(format!("row {i} has length {}, expected {c}", row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T y`
    pub fn tmul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    /// Largest singular value by power iteration on `A^T A`, started from the
    /// all-ones vector. Stops when the estimate changes by less than `rtol`
    /// relatively, or after `max_iter` products.
    pub fn spectral_norm(&self, max_iter: usize, rtol: f64) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let ones = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        if let Some(v) = self.power_iteration(ones, max_iter, rtol) {
            return v;
        }
        // the all-ones start lies in the null space; restart from the heaviest column
        let heaviest = (0..self.cols)
            .map(|j| (j, (0..self.rows).map(|i| self.get(i, j).powi(2)).sum::<f64>()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if heaviest.1 == 0.0 {
            return 0.0;
        }
        let mut e = vec![0.0; self.cols];
        e[heaviest.0] = 1.0;
        self.power_iteration(e, max_iter, rtol).unwrap_or(0.0)
    }

    fn power_iteration(&self, mut v: Vec<f64>, max_iter: usize, rtol: f64) -> Option<f64> {
        let mut est = 0.0;
        for _ in 0..max_iter {
            let w = self.tmul_vec(&self.mul_vec(&v));
            let nw = norm2(&w);
            if nw == 0.0 {
                return None;
            }
            let new_est = nw.sqrt();
            v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / nw);
            let done = (new_est - est).abs() <= rtol * new_est;
            est = new_est;
            if done {
                break;
            }
        }
        Some(est)
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Solves `M z = b` for a symmetric positive definite `M` (row-major, `n x n`)
/// by Cholesky factorization. Returns `None` if `M` is not numerically positive
/// definite.
pub fn cholesky_solve(m: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 1e-14 * m[i * n + i].abs().max(1e-300) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    Some(z)
}
