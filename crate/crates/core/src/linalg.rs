//! Dense Cholesky factorization and triangular solves on row-major storage.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors the symmetric matrix `a` (row-major, `n × n`). Returns `None`
    /// when a pivot is not strictly positive.
    pub fn factor(a: &[T], n: usize) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { n, l })
    }

    /// Factors `a + jitter·I`, escalating jitter by 10× from
    /// `1e-10·scale` up to `1e-4·scale`. Returns the factor and the jitter
    /// that was finally applied (zero if none was needed).
    pub fn factor_with_jitter(a: &[T], n: usize, scale: T) -> Result<(Self, T)> {
        if let Some(c) = Self::factor(a, n) {
            return Ok((c, T::zero()));
        }
        let mut jitter = T::of(1e-10) * scale;
        let max = T::of(1e-4) * scale * T::of(1.000_001);
        let mut work = a.to_vec();
        while jitter <= max {
            for i in 0..n {
                work[i * n + i] = a[i * n + i] + jitter;
            }
            if let Some(c) = Self::factor(&work, n) {
                return Ok((c, jitter));
            }
            jitter = jitter * T::of(10.0);
        }
        Err(Error::Factorization {
            jitter: (jitter / T::of(10.0)).as_f64(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.l[i * self.n + j]
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut s = b[i];
            for (lik, bk) in row.iter().zip(&b[..i]) {
                s = s - *lik * *bk;
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s = s - self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `ln det A = 2 Σ ln Lᵢᵢ`.
    pub fn log_det(&self) -> T {
        (0..self.n)
            .map(|i| self.l[i * self.n + i].ln())
            .sum::<T>()
            * T::of(2.0)
    }

    /// Computes `L z` for a vector `z`.
    pub fn mul_lower(&self, z: &[T]) -> Vec<T> {
        let n = self.n;
        (0..n)
            .map(|i| (0..=i).map(|k| self.l[i * n + k] * z[k]).sum())
            .collect()
    }
}
