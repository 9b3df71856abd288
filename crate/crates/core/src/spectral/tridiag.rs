use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pre-factored real tridiagonal matrix (Thomas algorithm), applied to
/// complex right-hand sides.
#[derive(Clone, Debug)]
pub struct TridiagonalFactor<T: Scalar> {
    lower: Vec<T>,
    upper_mod: Vec<T>,
    pivot_inv: Vec<T>,
}

impl<T: Scalar> TridiagonalFactor<T> {
    /// `lower[j]` multiplies `x[j-1]`, `upper[j]` multiplies `x[j+1]`;
    /// `lower[0]` and `upper[n-1]` are ignored.
    pub fn new(lower: &[T], diag: &[T], upper: &[T]) -> Result<Self> {
        let n = diag.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: lower.len().min(upper.len()),
            });
        }
        let mut upper_mod = vec![T::zero(); n];
        let mut pivot_inv = vec![T::zero(); n];
        let mut prev_upper = T::zero();
        for j in 0..n {
            let sub = if j == 0 { T::zero() } else { lower[j] };
            let pivot = diag[j] - sub * prev_upper;
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "singular tridiagonal pivot at row {j}"
                )));
            }
            pivot_inv[j] = T::one() / pivot;
            upper_mod[j] = if j + 1 < n {
                upper[j] * pivot_inv[j]
            } else {
                T::zero()
            };
            prev_upper = upper_mod[j];
        }
        let mut lower = lower.to_vec();
        lower[0] = T::zero();
        Ok(TridiagonalFactor {
            lower,
            upper_mod,
            pivot_inv,
        })
    }

    /// `alpha I - beta D2` on interior rows (3-point stencil, spacing `h`),
    /// identity rows at both walls.
    pub fn dirichlet_helmholtz(n: usize, h: T, alpha: T, beta: T) -> Result<Self> {
        let off = -beta / (h * h);
        let mut lower = vec![off; n];
        let mut diag = vec![alpha + T::lit(2.0) * beta / (h * h); n];
        let mut upper = vec![off; n];
        diag[0] = T::one();
        upper[0] = T::zero();
        diag[n - 1] = T::one();
        lower[n - 1] = T::zero();
        Self::new(&lower, &diag, &upper)
    }

    pub fn len(&self) -> usize {
        self.pivot_inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivot_inv.is_empty()
    }

    pub fn solve_in_place(&self, rhs: &mut [Complex<T>]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] = rhs[0] * self.pivot_inv[0];
        for j in 1..n {
            rhs[j] = (rhs[j] - rhs[j - 1] * self.lower[j]) * self.pivot_inv[j];
        }
        for j in (0..n - 1).rev() {
            rhs[j] = rhs[j] - rhs[j + 1] * self.upper_mod[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_random_diagonally_dominant_system() {
        let n = 9;
        let lower: Vec<f64> = (0..n).map(|j| 0.3 + 0.01 * j as f64).collect();
        let upper: Vec<f64> = (0..n).map(|j| -0.2 + 0.02 * j as f64).collect();
        let diag: Vec<f64> = (0..n).map(|j| 2.0 + 0.1 * j as f64).collect();
        let x: Vec<Complex<f64>> = (0..n)
            .map(|j| Complex::new(j as f64, 1.0 - j as f64))
            .collect();
        let mut b = vec![Complex::new(0.0, 0.0); n];
        for j in 0..n {
            b[j] = x[j] * diag[j];
            if j > 0 {
                b[j] += x[j - 1] * lower[j];
            }
            if j + 1 < n {
                b[j] += x[j + 1] * upper[j];
            }
        }
        let f = TridiagonalFactor::new(&lower, &diag, &upper).unwrap();
        f.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).norm() < 1e-12);
        }
    }

    #[test]
    fn helmholtz_recovers_polynomial() {
        // alpha u - beta u'' with u = y(1-y): u'' = -2 exactly on 3-point stencil.
        let n = 11;
        let h = 0.1;
        let (alpha, beta) = (3.0, 0.5);
        let f = TridiagonalFactor::dirichlet_helmholtz(n, h, alpha, beta).unwrap();
        let u: Vec<f64> = (0..n)
            .map(|j| {
                let y = j as f64 * h;
                y * (1.0 - y)
            })
            .collect();
        let mut rhs: Vec<Complex<f64>> = u
            .iter()
            .map(|v| Complex::new(alpha * v + 2.0 * beta, 0.0))
            .collect();
        rhs[0] = Complex::new(0.0, 0.0);
        rhs[n - 1] = Complex::new(0.0, 0.0);
        f.solve_in_place(&mut rhs);
        for (a, e) in rhs.iter().zip(&u) {
            assert!((a.re - e).abs() < 1e-12 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        assert!(TridiagonalFactor::new(&[0.0, 1.0], &[1.0, 1.0], &[1.0, 0.0]).is_err());
    }
}
