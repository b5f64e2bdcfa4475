//! Small dense symmetric linear algebra.
//!
//! [`SymMatrix`] stores the lower triangle row by row: entry `(i, j)` with
//! `i >= j` lives at `i * (i + 1) / 2 + j`. The solvers never work on packed
//! entries directly; they use the isometric coordinates of [`SymMatrix::to_svec`],
//! where off-diagonal entries are scaled by `sqrt(2)` so that the Euclidean
//! inner product of two coordinate vectors equals the Frobenius inner product
//! of the matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::vecops;

const JACOBI_THRESHOLD: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

/// Dense symmetric matrix in packed lower-triangular storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds a matrix from packed lower-triangular entries.
    pub fn from_packed(n: usize, data: Vec<f64>) -> Result<Self, Error> {
        if data.len() != n * (n + 1) / 2 {
            return Err(Error::domain("packed length does not match dimension"));
        }
        if !vecops::all_finite(&data) {
            return Err(Error::domain("matrix entries must be finite"));
        }
        Ok(SymMatrix { n, data })
    }

    /// Builds a matrix from the lower triangle of `f(i, j)`, `i >= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.data[packed_index(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from dense rows; only the lower triangle is read.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        Self::from_fn(rows.len(), |i, j| rows[i][j])
    }

    /// `v v^T`
    pub fn outer(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[packed_index(i, j)] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let w = if i == j { 1.0 } else { 2.0 };
                acc += w * self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: vecops::scaled(alpha, &self.data),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: vecops::sub(&self.data, &other.data),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    /// Isometric coordinates: packed order, off-diagonals scaled by `sqrt(2)`.
    pub fn to_svec(&self) -> Vec<f64> {
        let mut out = self.data.clone();
        for i in 0..self.n {
            for j in 0..i {
                out[packed_index(i, j)] *= SQRT_2;
            }
        }
        out
    }

    /// Inverse of [`SymMatrix::to_svec`].
    pub fn from_svec(n: usize, v: &[f64]) -> SymMatrix {
        debug_assert_eq!(v.len(), n * (n + 1) / 2);
        let mut data = v.to_vec();
        for i in 0..n {
            for j in 0..i {
                data[packed_index(i, j)] /= SQRT_2;
            }
        }
        SymMatrix { n, data }
    }

    pub fn min_eigen(&self) -> (f64, Vec<f64>) {
        let eig = sym_eig(self);
        let k = self.n - 1;
        (eig.values[k], eig.vectors[k].clone())
    }
}

/// Eigendecomposition `M = V diag(values) V^T`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; `vectors[k]` pairs with `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub converged: bool,
}

impl SymEigen {
    /// `sum_k w(values[k]) v_k v_k^T`
    pub fn compose(&self, mut w: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mut out = SymMatrix::zeros(n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            let c = w(*lambda);
            if c == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..=i {
                    out.data[packed_index(i, j)] += c * v[i] * v[j];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.compose(|l| l)
    }
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius norm drops below `1e-14 * ||M||_F`
/// or 100 sweeps have run (`converged` is false in the latter case).
pub fn sym_eig(m: &SymMatrix) -> SymEigen {
    let n = m.dim();
    let mut a = m.to_dense();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.frobenius_norm();
    let mut sweeps = 0;
    let mut converged = scale == 0.0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= JACOBI_THRESHOLD * scale {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    SymEigen {
        values,
        vectors,
        sweeps,
        converged,
    }
}

/// Frobenius-nearest positive semidefinite matrix.
pub fn proj_psd(m: &SymMatrix) -> SymMatrix {
    sym_eig(m).compose(|l| l.max(0.0))
}

/// Euclidean projection onto `{z : ||z||_1 <= tau}` by sorting magnitudes.
pub fn proj_l1_ball(x: &[f64], tau: f64) -> Result<Vec<f64>, Error> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::domain("l1-ball radius must be finite and nonnegative"));
    }
    if vecops::norm1(x) <= tau {
        return Ok(x.to_vec());
    }
    if tau == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let theta = l1_threshold(x, tau);
    Ok(x
        .iter()
        .map(|&xi| xi.signum() * (xi.abs() - theta).max(0.0))
        .collect())
}

/// Soft-threshold level that puts `x` on the boundary of the radius-`tau` ball.
fn l1_threshold(x: &[f64], tau: f64) -> f64 {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - tau) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    theta
}

/// Projection onto `{z >= 0, sum z <= tau}`.
pub(crate) fn proj_capped_simplex(x: &[f64], tau: f64) -> Vec<f64> {
    let pos: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    // nonnegative input, so the l1 projection keeps signs
    proj_l1_ball(&pos, tau.max(0.0)).unwrap_or(pos)
}

/// Projection onto `{X psd, trace X <= tau}`.
pub(crate) fn proj_trace_psd(m: &SymMatrix, tau: f64) -> SymMatrix {
    let mut eig = sym_eig(m);
    eig.values = proj_capped_simplex(&eig.values, tau);
    eig.reconstruct()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(values: &[f64]) -> SymMatrix {
        SymMatrix::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = sym_eig(&SymMatrix::identity(3));
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn swap_matrix_eigenvalues() {
        let m = SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let eig = sym_eig(&m);
        assert_abs_diff_eq!(eig.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn example2_solution_spectrum() {
        let eig = sym_eig(&diag(&[0.0, 1.0, 0.0]));
        assert_eq!(eig.values, vec![1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(eig.vectors[0][1].abs(), 1.0);
    }

    #[test]
    fn psd_projection_cases() {
        let z = diag(&[2.0, 0.5]);
        assert_eq!(proj_psd(&z), z);

        let m = SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p = proj_psd(&m);
        for (got, want) in p.packed().iter().zip([0.5, 0.5, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }

        let neg = SymMatrix::identity(2).scaled(-1.0);
        assert_eq!(proj_psd(&neg), SymMatrix::zeros(2));
    }

    #[test]
    fn l1_projection_cases() {
        assert_eq!(proj_l1_ball(&[0.2, -0.3], 1.0).unwrap(), vec![0.2, -0.3]);
        assert_eq!(proj_l1_ball(&[3.0, 0.0], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(proj_l1_ball(&[1.0, 1.0], 1.0).unwrap(), vec![0.5, 0.5]);
        assert_eq!(proj_l1_ball(&[-4.0, 2.0], 0.0).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(proj_l1_ball(&[1.0], -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn svec_is_isometric() {
        let a = SymMatrix::from_rows(&[&[1.0, 2.0, 0.0], &[2.0, -1.0, 3.0], &[0.0, 3.0, 4.0]]);
        let b = SymMatrix::from_rows(&[&[0.5, -1.0, 2.0], &[-1.0, 0.0, 1.0], &[2.0, 1.0, -2.0]]);
        assert_abs_diff_eq!(
            vecops::dot(&a.to_svec(), &b.to_svec()),
            a.inner(&b),
            epsilon = 1e-12
        );
        assert_eq!(SymMatrix::from_svec(3, &a.to_svec()), a);
    }

    #[test]
    fn trace_psd_projection() {
        let m = diag(&[3.0, 1.0, -2.0]);
        let p = proj_trace_psd(&m, 2.0);
        // eigenvalues (3, 1) shifted by 1 to sum to 2
        assert_abs_diff_eq!(p.get(0, 0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(1, 1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.get(2, 2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn packed_layout_is_row_major_lower() {
        let m = SymMatrix::from_fn(3, |i, j| (10 * i + j) as f64);
        assert_eq!(m.packed(), &[0.0, 10.0, 11.0, 20.0, 21.0, 22.0]);
        assert_eq!(m.get(0, 2), 20.0);
    }
}
