//! Dense real symmetric matrices: Jacobi eigenvalues, log-determinant,
//! inverse and Cholesky factor.
//!
//! Sized for the few-hundred-vertex graphs used throughout the toolkit; every
//! routine is `O(n^3)` and allocation-light.

use crate::error::{Error, Result};

/// Relative off-diagonal tolerance used by [`SymmetricMatrix::eigenvalues`]
/// when callers have no better choice.
pub const DEFAULT_EIG_TOL: f64 = 1e-12;

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Pivots smaller than this fraction of the largest entry count as zero.
pub const PIVOT_TOL: f64 = 1e-13;

/// A dense `n x n` real matrix with `a[i][j] == a[j][i]` bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// `max_i |M v_i - lambda_i v_i|_inf` over the computed eigenpairs.
    pub basis_residual: f64,
}

/// Sign and log-magnitude of a determinant. `sign == 0` flags a singular matrix,
/// in which case `log_abs` is `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub sign: i8,
    pub log_abs: f64,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from the upper triangle `f(i, j)` with `i <= j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from full row-major data, rejecting any asymmetry.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch(data.len(), n * n));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::DomainError(format!(
                        "entry ({i}, {j}) differs from its transpose"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Symmetrizes an arbitrary square matrix as `(A + A^T) / 2`.
    fn symmetrized(n: usize, data: &[f64]) -> Self {
        Self::from_upper_fn(n, |i, j| 0.5 * (data[i * n + j] + data[j * n + i]))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Dense row-major product `self * other`; generally not symmetric.
    pub fn matmul(&self, other: &Self) -> Result<Vec<f64>> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// All eigenvalues by cyclic Jacobi rotations.
    ///
    /// Iterates until the off-diagonal Frobenius norm falls below
    /// `tol * ||M||_F`, or fails after [`MAX_SWEEPS`] sweeps.
    pub fn eigenvalues(&self, tol: f64) -> Result<Spectrum> {
        if !(tol > 0.0) {
            return Err(Error::DomainError(format!("tolerance must be positive, got {tol}")));
        }
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        let target = tol * self.frobenius_norm();
        let off_norm = |a: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    s += 2.0 * a[i * n + j] * a[i * n + j];
                }
            }
            s.sqrt()
        };

        let mut converged = off_norm(&a) <= target;
        let mut sweeps = 0;
        while !converged {
            if sweeps == MAX_SWEEPS {
                return Err(Error::NoConvergence(MAX_SWEEPS));
            }
            sweeps += 1;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
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
            converged = off_norm(&a) <= target;
        }

        let mut residual: f64 = 0.0;
        for i in 0..n {
            let lambda = a[i * n + i];
            let col: Vec<f64> = (0..n).map(|k| v[k * n + i]).collect();
            let mv = self.mul_vec(&col);
            for k in 0..n {
                residual = residual.max((mv[k] - lambda * col[k]).abs());
            }
        }
        let mut values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
        values.sort_by(|x, y| y.total_cmp(x));
        Ok(Spectrum {
            values,
            basis_residual: residual,
        })
    }

    /// Log-scale determinant by Gaussian elimination with partial pivoting.
    ///
    /// Returns sign 0 when a pivot drops below [`PIVOT_TOL`] times the largest
    /// entry of the matrix.
    pub fn determinant(&self) -> LogDet {
        let n = self.n;
        if n == 0 {
            return LogDet {
                sign: 1,
                log_abs: 0.0,
            };
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return LogDet {
                sign: 0,
                log_abs: f64::NEG_INFINITY,
            };
        }
        let mut a = self.data.clone();
        let mut sign = 1i8;
        let mut log_abs = 0.0;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .unwrap();
            let pivot = a[pivot_row * n + col];
            if pivot.abs() <= PIVOT_TOL * scale {
                return LogDet {
                    sign: 0,
                    log_abs: f64::NEG_INFINITY,
                };
            }
            if pivot_row != col {
                for k in 0..n {
                    a.swap(pivot_row * n + k, col * n + k);
                }
                sign = -sign;
            }
            if pivot < 0.0 {
                sign = -sign;
            }
            log_abs += pivot.abs().ln();
            for r in (col + 1)..n {
                let f = a[r * n + col] / pivot;
                if f == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
            }
        }
        LogDet { sign, log_abs }
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting; the result is
    /// symmetrized to restore exact symmetry.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let scale = self.max_abs();
        if scale == 0.0 && n > 0 {
            return Err(Error::Singular);
        }
        let mut a = self.data.clone();
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            inv[i * n + i] = 1.0;
        }
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .unwrap();
            let pivot = a[pivot_row * n + col];
            if pivot.abs() <= PIVOT_TOL * scale {
                return Err(Error::Singular);
            }
            if pivot_row != col {
                for k in 0..n {
                    a.swap(pivot_row * n + k, col * n + k);
                    inv.swap(pivot_row * n + k, col * n + k);
                }
            }
            let p = 1.0 / pivot;
            for k in 0..n {
                a[col * n + k] *= p;
                inv[col * n + k] *= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..n {
                    a[r * n + k] -= f * a[col * n + k];
                    inv[r * n + k] -= f * inv[col * n + k];
                }
            }
        }
        Ok(Self::symmetrized(n, &inv))
    }

    /// Lower-triangular Cholesky factor `L` (row-major) with `L L^T = M`.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[f64]]) -> SymmetricMatrix {
        let n = rows.len();
        SymmetricMatrix::from_row_major(n, rows.iter().flat_map(|r| r.iter().copied()).collect())
            .unwrap()
    }

    fn k4_adjacency() -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(4, |i, j| if i == j { 0.0 } else { 1.0 })
    }

    fn c4_adjacency() -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(4, |i, j| if (j - i) % 2 == 1 { 1.0 } else { 0.0 })
    }

    fn signless(a: &SymmetricMatrix, d: f64) -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(a.n(), |i, j| if i == j { d } else { a.get(i, j) })
    }

    #[test]
    fn complete_graph_spectrum() {
        let s = k4_adjacency().scaled(1.0 / 3.0).eigenvalues(DEFAULT_EIG_TOL).unwrap();
        let expected = [1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        for (v, e) in s.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
        assert!(s.basis_residual < 1e-10);
    }

    #[test]
    fn four_cycle_spectrum() {
        let s = c4_adjacency().scaled(0.5).eigenvalues(DEFAULT_EIG_TOL).unwrap();
        let expected = [1.0, 0.0, 0.0, -1.0];
        for (v, e) in s.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
    }

    #[test]
    fn identity_spectrum_and_det() {
        let s = SymmetricMatrix::identity(5).eigenvalues(DEFAULT_EIG_TOL).unwrap();
        assert!(s.values.iter().all(|&v| v == 1.0));
        let d = SymmetricMatrix::identity(5).determinant();
        assert_eq!(d.sign, 1);
        assert_eq!(d.log_abs, 0.0);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(SymmetricMatrix::identity(2).eigenvalues(0.0).is_err());
    }

    #[test]
    fn signless_laplacian_determinants() {
        let q = signless(&k4_adjacency(), 3.0);
        let d = q.determinant();
        assert_eq!(d.sign, 1);
        assert!((d.log_abs - 48f64.ln()).abs() < 1e-12);

        let q = signless(&c4_adjacency(), 2.0);
        assert_eq!(q.determinant().sign, 0);
        assert_eq!(q.inverse(), Err(Error::Singular));
    }

    #[test]
    fn inverse_of_k4_signless_laplacian() {
        // Independent oracle: solve Q x = e_0 by hand. With x = (a, b, b, b),
        // 3a + 3b = 1 and a + 5b = 0, so b = -1/12 and a = 5/12. The Gaussian
        // covariance Q^{-1}/2 therefore has entries 5/24 and -1/24.
        let q = signless(&k4_adjacency(), 3.0);
        let inv = q.inverse().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 5.0 / 12.0 } else { -1.0 / 12.0 };
                assert!((inv.get(i, j) - e).abs() < 1e-12);
            }
        }
        let prod = q.matmul(&inv).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i * 4 + j] - e).abs() < 1e-9 * 4.0);
            }
        }
    }

    #[test]
    fn inverse_of_scaled_identity() {
        let m = SymmetricMatrix::identity(3).scaled(2.0);
        assert_eq!(m.inverse().unwrap(), SymmetricMatrix::identity(3).scaled(0.5));
    }

    #[test]
    fn indefinite_matrix_determinant_sign() {
        let m = from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let d = m.determinant();
        assert_eq!(d.sign, -1);
        assert!(d.log_abs.abs() < 1e-15);
    }

    #[test]
    fn from_row_major_rejects_asymmetry() {
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = from_rows(&[&[4.0, 2.0, 0.0], &[2.0, 5.0, 1.0], &[0.0, 1.0, 3.0]]);
        let l = m.cholesky().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - m.get(i, j)).abs() < 1e-12);
            }
        }
        assert_eq!(
            from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).cholesky(),
            Err(Error::NotPositiveDefinite)
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn well_conditioned(n: usize) -> impl Strategy<Value = SymmetricMatrix> {
            proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |raw| {
                SymmetricMatrix::from_upper_fn(n, |i, j| {
                    let x = raw[i * n + j];
                    if i == j {
                        x + 2.0 * n as f64
                    } else {
                        x
                    }
                })
            })
        }

        fn any_symmetric(n: usize) -> impl Strategy<Value = SymmetricMatrix> {
            proptest::collection::vec(-3.0f64..3.0, n * n)
                .prop_map(move |raw| SymmetricMatrix::from_upper_fn(n, |i, j| raw[i * n + j]))
        }

        proptest! {
            #[test]
            fn trace_matches_eigenvalue_sum(m in (2usize..9).prop_flat_map(any_symmetric)) {
                let s = m.eigenvalues(DEFAULT_EIG_TOL).unwrap();
                let sum: f64 = s.values.iter().sum();
                prop_assert!((sum - m.trace()).abs() <= m.n() as f64 * 1e-10 * (1.0 + m.frobenius_norm()));
                prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
                prop_assert!(s.basis_residual < 1e-9 * (1.0 + m.frobenius_norm()));
            }

            #[test]
            fn determinant_matches_eigen_product(m in (1usize..9).prop_flat_map(any_symmetric)) {
                let det = m.determinant();
                prop_assume!(det.sign != 0);
                let s = m.eigenvalues(DEFAULT_EIG_TOL).unwrap();
                prop_assume!(s.values.iter().all(|v| v.abs() > 1e-6));
                let sign = s.values.iter().filter(|v| **v < 0.0).count() % 2;
                let log_abs: f64 = s.values.iter().map(|v| v.abs().ln()).sum();
                prop_assert_eq!(det.sign, if sign == 0 { 1 } else { -1 });
                prop_assert!((det.log_abs - log_abs).abs() <= 1e-8 * (1.0 + log_abs.abs()));
            }

            #[test]
            fn double_inverse_round_trips(m in (1usize..12).prop_flat_map(well_conditioned)) {
                let back = m.inverse().unwrap().inverse().unwrap();
                prop_assert!(back.max_abs_diff(&m).unwrap() <= 1e-7 * m.n() as f64);
            }
        }
    }
}
