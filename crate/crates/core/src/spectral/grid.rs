use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tensor grid: Fourier collocation in the periodic x-direction, uniform
/// nodes in the wall-normal direction.
///
/// Fields hold an `Arc<Grid>`; the FFT plans live here so every field on the
/// same grid shares them.
pub struct Grid<T: Scalar> {
    n_x: usize,
    l_x: T,
    n_y: usize,
    y_extent: T,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Scalar> Grid<T> {
    /// Grid on `[0, l_x) x [0, 1]`.
    pub fn new(n_x: usize, l_x: T, n_y: usize) -> Result<Arc<Self>> {
        Self::with_y_extent(n_x, l_x, n_y, T::one())
    }

    /// Grid on `[0, l_x) x [0, y_extent]`. Used when fields are lifted to
    /// stretched coordinates.
    pub fn with_y_extent(n_x: usize, l_x: T, n_y: usize, y_extent: T) -> Result<Arc<Self>> {
        if n_x == 0 || !n_x.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_x must be even and positive, got {n_x}"
            )));
        }
        if n_y < 3 {
            return Err(Error::InvalidGrid(format!(
                "n_y must be at least 3, got {n_y}"
            )));
        }
        if !(l_x > T::zero()) || !l_x.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "l_x must be positive, got {l_x}"
            )));
        }
        if !(y_extent > T::zero()) || !y_extent.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "y extent must be positive, got {y_extent}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            n_x,
            l_x,
            n_y,
            y_extent,
            forward: planner.plan_fft_forward(n_x),
            inverse: planner.plan_fft_inverse(n_x),
        }))
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn l_x(&self) -> T {
        self.l_x
    }

    pub fn y_extent(&self) -> T {
        self.y_extent
    }

    /// Number of complex coefficients (and physical values) held by a field.
    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h_y(&self) -> T {
        self.y_extent / T::from_count(self.n_y - 1)
    }

    pub fn y(&self, j: usize) -> T {
        if j + 1 == self.n_y {
            self.y_extent
        } else {
            T::from_count(j) * self.h_y()
        }
    }

    pub fn x(&self, i: usize) -> T {
        self.l_x * T::from_count(i) / T::from_count(self.n_x)
    }

    /// Signed integer wavenumber for storage index `idx` (FFT ordering):
    /// `0, 1, ..., n_x/2, -n_x/2+1, ..., -1`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.n_x as i64;
        let idx = idx as i64;
        if idx <= n / 2 {
            idx
        } else {
            idx - n
        }
    }

    /// Storage index of the signed mode `k`, if it is represented.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let n = self.n_x as i64;
        if k > n / 2 || k <= -n / 2 {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + n) as usize })
    }

    /// Scaled wavenumber `2 pi k / L_x` for storage index `idx`.
    pub fn xi(&self, idx: usize) -> T {
        T::lit(2.0) * T::PI() * T::lit(self.mode(idx) as f64) / self.l_x
    }

    pub fn xi_max(&self) -> T {
        T::lit(2.0) * T::PI() * T::from_count(self.n_x / 2) / self.l_x
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.n_x / 2
    }

    /// Retained by the 2/3 rule: `|k| <= n_x / 3`.
    pub fn is_resolved(&self, idx: usize) -> bool {
        (self.mode(idx).unsigned_abs() as usize) * 3 <= self.n_x
    }

    /// Composite trapezoid weights on the y-nodes.
    pub fn trapezoid_weights(&self) -> Vec<T> {
        let h = self.h_y();
        let half = h / T::lit(2.0);
        (0..self.n_y)
            .map(|j| if j == 0 || j + 1 == self.n_y { half } else { h })
            .collect()
    }

    /// Same dimensions and extents.
    pub fn same_shape(&self, other: &Grid<T>) -> bool {
        self.n_x == other.n_x
            && self.n_y == other.n_y
            && self.l_x == other.l_x
            && self.y_extent == other.y_extent
    }

    pub(crate) fn forward_plan(&self) -> &Arc<dyn Fft<T>> {
        &self.forward
    }

    pub(crate) fn inverse_plan(&self) -> &Arc<dyn Fft<T>> {
        &self.inverse
    }
}

impl<T: Scalar> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other)
    }
}

impl<T: Scalar> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_x", &self.n_x)
            .field("l_x", &self.l_x)
            .field("n_y", &self.n_y)
            .field("y_extent", &self.y_extent)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_layout() {
        let g = Grid::<f64>::new(8, 2.0 * std::f64::consts::PI, 5).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.xi(0), 0.0);
        assert!((g.xi(4) - 4.0).abs() < 1e-15);
        for k in -3..=4 {
            assert_eq!(g.mode(g.index_of(k).unwrap()), k);
        }
        assert!(g.index_of(-4).is_none());
    }

    #[test]
    fn y_nodes_hit_both_walls() {
        let g = Grid::<f64>::new(4, 1.0, 7).unwrap();
        assert_eq!(g.y(0), 0.0);
        assert_eq!(g.y(6), 1.0);
        let w: f64 = g.trapezoid_weights().iter().sum();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(Grid::<f64>::new(7, 1.0, 5).is_err());
        assert!(Grid::<f64>::new(8, 1.0, 2).is_err());
        assert!(Grid::<f64>::new(8, -1.0, 5).is_err());
    }

    #[test]
    fn two_thirds_band() {
        let g = Grid::<f64>::new(12, 1.0, 3).unwrap();
        let kept: Vec<i64> = (0..12)
            .filter(|&i| g.is_resolved(i))
            .map(|i| g.mode(i))
            .collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, -4, -3, -2, -1]);
    }
}
