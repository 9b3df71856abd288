use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::grid::Grid;

/// Field stored as complex Fourier coefficients in x on the wall-normal nodes.
///
/// Coefficients are laid out mode-major: `coeffs[idx * n_y + j]`, so every
/// wall-normal line of a single mode is contiguous. The forward transform
/// carries the `1/n_x` factor, hence the `k = 0` line is the x-mean.
#[derive(Clone, Debug)]
pub struct SpectralField<T: Scalar> {
    grid: Arc<Grid<T>>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> SpectralField<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        SpectralField {
            grid: Arc::clone(grid),
            coeffs: vec![Complex::zero(); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid<T>>, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Builds a field coefficient by coefficient from `(storage index, j)`.
    pub fn from_modes(grid: &Arc<Grid<T>>, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let n_y = grid.n_y();
        let coeffs = (0..grid.len()).map(|n| f(n / n_y, n % n_y)).collect();
        SpectralField {
            grid: Arc::clone(grid),
            coeffs,
        }
    }

    /// Samples `f(x, y)` on the collocation nodes and transforms.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(T, T) -> T) -> Self {
        let n_y = grid.n_y();
        let values: Vec<T> = (0..grid.len())
            .map(|n| f(grid.x(n / n_y), grid.y(n % n_y)))
            .collect();
        Self::transform_forward(grid, &values).expect("sized by construction")
    }

    /// Physical values `values[i * n_y + j]` at `(x_i, y_j)` to coefficients.
    pub fn transform_forward(grid: &Arc<Grid<T>>, values: &[T]) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let (n_x, n_y) = (grid.n_x(), grid.n_y());
        let mut buf = vec![Complex::zero(); grid.len()];
        for i in 0..n_x {
            for j in 0..n_y {
                buf[j * n_x + i] = Complex::new(values[i * n_y + j], T::zero());
            }
        }
        grid.forward_plan().process(&mut buf);
        let scale = T::one() / T::from_count(n_x);
        let mut coeffs = vec![Complex::zero(); grid.len()];
        for j in 0..n_y {
            for k in 0..n_x {
                coeffs[k * n_y + j] = buf[j * n_x + k] * scale;
            }
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    /// Back to physical space. Imaginary parts (nonzero only for fields that
    /// break Hermitian symmetry) are dropped.
    pub fn transform_backward(&self) -> Vec<T> {
        let (n_x, n_y) = (self.grid.n_x(), self.grid.n_y());
        let mut buf = vec![Complex::zero(); self.grid.len()];
        for k in 0..n_x {
            for j in 0..n_y {
                buf[j * n_x + k] = self.coeffs[k * n_y + j];
            }
        }
        self.grid.inverse_plan().process(&mut buf);
        let mut values = vec![T::zero(); self.grid.len()];
        for i in 0..n_x {
            for j in 0..n_y {
                values[i * n_y + j] = buf[j * n_x + i].re;
            }
        }
        values
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn at(&self, idx: usize, j: usize) -> Complex<T> {
        self.coeffs[idx * self.grid.n_y() + j]
    }

    pub fn set(&mut self, idx: usize, j: usize, value: Complex<T>) {
        let n_y = self.grid.n_y();
        self.coeffs[idx * n_y + j] = value;
    }

    /// Wall-normal line of storage index `idx`.
    pub fn line(&self, idx: usize) -> &[Complex<T>] {
        let n_y = self.grid.n_y();
        &self.coeffs[idx * n_y..(idx + 1) * n_y]
    }

    pub fn line_mut(&mut self, idx: usize) -> &mut [Complex<T>] {
        let n_y = self.grid.n_y();
        &mut self.coeffs[idx * n_y..(idx + 1) * n_y]
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn map_lines(&self, mut f: impl FnMut(usize, &[Complex<T>], &mut [Complex<T>])) -> Self {
        let mut out = Self::zeros(&self.grid);
        let n_y = self.grid.n_y();
        for idx in 0..self.grid.n_x() {
            let range = idx * n_y..(idx + 1) * n_y;
            f(idx, &self.coeffs[range.clone()], &mut out.coeffs[range]);
        }
        out
    }

    /// `d/dx` as the multiplier `i xi_k`. The Nyquist line is zeroed so that
    /// real fields stay real.
    pub fn dx(&self) -> Self {
        self.map_lines(|idx, src, dst| {
            if self.grid.is_nyquist(idx) {
                return;
            }
            let factor = Complex::new(T::zero(), self.grid.xi(idx));
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *s * factor;
            }
        })
    }

    /// `d/dy`: second-order central differences inside, second-order
    /// one-sided differences on the two wall rows.
    pub fn dy(&self) -> Self {
        let h = self.grid.h_y();
        let n = self.grid.n_y();
        let two = T::lit(2.0);
        let inv_2h = T::one() / (two * h);
        self.map_lines(|_, f, d| {
            for j in 1..n - 1 {
                d[j] = (f[j + 1] - f[j - 1]) * inv_2h;
            }
            d[0] = (f[0] * T::lit(-3.0) + f[1] * T::lit(4.0) - f[2]) * inv_2h;
            d[n - 1] = (f[n - 1] * T::lit(3.0) - f[n - 2] * T::lit(4.0) + f[n - 3]) * inv_2h;
        })
    }

    /// `d^2/dy^2` with the 3-point stencil on interior nodes. Wall rows hold
    /// a one-sided extrapolation; the solver never reads them because the
    /// walls are Dirichlet.
    pub fn dyy(&self) -> Self {
        let h = self.grid.h_y();
        let n = self.grid.n_y();
        let inv_h2 = T::one() / (h * h);
        let two = T::lit(2.0);
        self.map_lines(|_, f, d| {
            for j in 1..n - 1 {
                d[j] = (f[j + 1] - f[j] * two + f[j - 1]) * inv_h2;
            }
            if n >= 4 {
                d[0] = (f[0] * two - f[1] * T::lit(5.0) + f[2] * T::lit(4.0) - f[3]) * inv_h2;
                d[n - 1] = (f[n - 1] * two - f[n - 2] * T::lit(5.0) + f[n - 3] * T::lit(4.0)
                    - f[n - 4])
                    * inv_h2;
            } else {
                d[0] = d[1];
                d[n - 1] = d[n - 2];
            }
        })
    }

    /// Cumulative trapezoid antiderivative `int_0^y f`, zero on the bottom wall.
    pub fn integrate_from_0(&self) -> Self {
        let half_h = self.grid.h_y() / T::lit(2.0);
        self.map_lines(|_, f, d| {
            let mut acc = Complex::zero();
            d[0] = acc;
            for j in 1..f.len() {
                acc = acc + (f[j - 1] + f[j]) * half_h;
                d[j] = acc;
            }
        })
    }

    /// `int_y^top f`, zero on the top wall.
    pub fn integrate_to_top(&self) -> Self {
        let from0 = self.integrate_from_0();
        let n = self.grid.n_y();
        from0.map_lines(|_, f, d| {
            let total = f[n - 1];
            for (dj, fj) in d.iter_mut().zip(f) {
                *dj = total - *fj;
            }
        })
    }

    /// Fourier multiplier `exp(tau (1 + |xi|))`, `tau >= 0`.
    pub fn apply_multiplier(&self, tau: T) -> Result<Self> {
        if tau < T::zero() {
            return Err(Error::NegativeRadius(tau.as_f64()));
        }
        self.apply_multiplier_signed(tau)
    }

    /// Same as [`apply_multiplier`](Self::apply_multiplier) but also accepts
    /// negative radii (smoothing). Not exposed to configuration input.
    pub(crate) fn apply_multiplier_signed(&self, tau: T) -> Result<Self> {
        let exponent = tau * (T::one() + self.grid.xi_max());
        if exponent > T::max_exponent() || !exponent.is_finite() {
            return Err(Error::AmplificationOverflow {
                exponent: exponent.as_f64(),
                limit: T::max_exponent().as_f64(),
            });
        }
        Ok(self.map_lines(|idx, src, dst| {
            let w = (tau * (T::one() + self.grid.xi(idx).abs())).exp();
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *s * w;
            }
        }))
    }

    /// `sum_k (1+|xi_k|)^{2s} int_0^1 |c_k(y)|^2 dy` with trapezoid quadrature.
    pub fn norm_hs0_sq(&self, s: T) -> T {
        let w = self.grid.trapezoid_weights();
        let mut total = T::zero();
        for idx in 0..self.grid.n_x() {
            let weight = (T::one() + self.grid.xi(idx).abs()).powf(T::lit(2.0) * s);
            let line: T = self
                .line(idx)
                .iter()
                .zip(&w)
                .map(|(c, wj)| c.norm_sqr() * *wj)
                .sum();
            total = total + weight * line;
        }
        total
    }

    pub fn norm_hs0(&self, s: T) -> T {
        self.norm_hs0_sq(s).sqrt()
    }

    /// Real part of the weighted `H^{s,0}` pairing; equals `norm_hs0_sq`
    /// on the diagonal.
    pub fn inner_hs0(&self, other: &Self, s: T) -> Result<T> {
        self.check_same_grid(other)?;
        let w = self.grid.trapezoid_weights();
        let mut total = T::zero();
        for idx in 0..self.grid.n_x() {
            let weight = (T::one() + self.grid.xi(idx).abs()).powf(T::lit(2.0) * s);
            let line: T = self
                .line(idx)
                .iter()
                .zip(other.line(idx))
                .zip(&w)
                .map(|((a, b), wj)| (*a * b.conj()).re * *wj)
                .sum();
            total = total + weight * line;
        }
        Ok(total)
    }

    /// Zeroes every mode with `|k| > n_x / 3`.
    pub fn dealias(&self) -> Self {
        self.map_lines(|idx, src, dst| {
            if self.grid.is_resolved(idx) {
                dst.copy_from_slice(src);
            }
        })
    }

    /// Physical values of the 2/3-truncated field.
    pub fn dealiased_values(&self) -> Vec<T> {
        self.dealias().transform_backward()
    }

    /// Pseudo-spectral product with the 2/3 rule applied to both factors and
    /// to the result.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self::product_of_values(
            &self.grid,
            &self.dealiased_values(),
            &other.dealiased_values(),
        ))
    }

    /// Product of two already dealiased physical arrays, transformed and
    /// truncated.
    pub fn product_of_values(grid: &Arc<Grid<T>>, a: &[T], b: &[T]) -> Self {
        let prod: Vec<T> = a.iter().zip(b).map(|(x, y)| *x * *y).collect();
        Self::transform_forward(grid, &prod)
            .expect("sized by grid")
            .dealias()
    }

    /// Copies the spectrum onto a grid with a different `n_x` (zero padding or
    /// truncation); y-nodes must agree.
    pub fn resample_x(&self, target: &Arc<Grid<T>>) -> Result<Self> {
        if target.n_y() != self.grid.n_y() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n_y(),
                got: target.n_y(),
            });
        }
        let mut out = Self::zeros(target);
        for idx in 0..self.grid.n_x() {
            let k = self.grid.mode(idx);
            if let Some(t_idx) = target.index_of(k) {
                // An unmatched Nyquist line would break Hermitian symmetry.
                if self.grid.is_nyquist(idx) && !target.is_nyquist(t_idx) {
                    continue;
                }
                out.line_mut(t_idx).copy_from_slice(self.line(idx));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map_lines(|_, src, dst| {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *s * alpha;
            }
        })
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: T, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o = *o + *b * alpha;
        }
        out
    }

    /// Sets both wall rows to zero for every mode.
    pub fn zero_walls(&mut self) {
        let n_y = self.grid.n_y();
        for idx in 0..self.grid.n_x() {
            self.coeffs[idx * n_y] = Complex::zero();
            self.coeffs[idx * n_y + n_y - 1] = Complex::zero();
        }
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Largest coefficient magnitude on the row `j` over all modes.
    pub fn max_abs_on_row(&self, j: usize) -> T {
        (0..self.grid.n_x())
            .map(|idx| self.at(idx, j).norm())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re == T::zero() && c.im == T::zero())
    }

    /// Largest violation of `c(-k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for idx in 0..self.grid.n_x() {
            let k = self.grid.mode(idx);
            if let Some(m) = self.grid.index_of(-k) {
                for (a, b) in self.line(idx).iter().zip(self.line(m)) {
                    worst = worst.max((*a - b.conj()).norm());
                }
            } else {
                // Nyquist: its own partner, must be real.
                for a in self.line(idx) {
                    worst = worst.max(a.im.abs());
                }
            }
        }
        worst
    }

    /// Mean over x and trapezoid integral over y of `f^2`, computed on the
    /// physical nodes.
    pub fn physical_mean_square(&self) -> T {
        let values = self.transform_backward();
        let w = self.grid.trapezoid_weights();
        let n_y = self.grid.n_y();
        let total: T = values
            .iter()
            .enumerate()
            .map(|(n, v)| *v * *v * w[n % n_y])
            .sum();
        total / T::from_count(self.grid.n_x())
    }
}

impl<T: Scalar> Add for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn add(self, rhs: Self) -> SpectralField<T> {
        debug_assert!(self.grid.same_shape(&rhs.grid));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| *a + *b)
            .collect();
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }
}

impl<T: Scalar> Sub for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn sub(self, rhs: Self) -> SpectralField<T> {
        debug_assert!(self.grid.same_shape(&rhs.grid));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| *a - *b)
            .collect();
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }
}

impl<T: Scalar> Neg for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn neg(self) -> SpectralField<T> {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul<T> for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn mul(self, rhs: T) -> SpectralField<T> {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(n_x: usize, n_y: usize) -> Arc<Grid<f64>> {
        Grid::new(n_x, 2.0 * PI, n_y).unwrap()
    }

    fn max_interior_error(f: &SpectralField<f64>, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let g = f.grid();
        let values = f.transform_backward();
        let mut worst: f64 = 0.0;
        for i in 0..g.n_x() {
            for j in 1..g.n_y() - 1 {
                worst = worst.max((values[i * g.n_y() + j] - exact(g.x(i), g.y(j))).abs());
            }
        }
        worst
    }

    #[test]
    fn constant_has_single_mode() {
        let g = grid(16, 9);
        let f = SpectralField::from_fn(&g, |_, _| 1.0);
        for idx in 0..16 {
            for j in 0..9 {
                let expected = if idx == 0 { 1.0 } else { 0.0 };
                assert!((f.at(idx, j).re - expected).abs() < 1e-14);
                assert!(f.at(idx, j).im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_harmonic_lands_on_plus_minus_one() {
        let g = grid(16, 9);
        let f = SpectralField::from_fn(&g, |x, y| x.cos() * (1.0 + y));
        for idx in 0..16 {
            let energy: f64 = f.line(idx).iter().map(|c| c.norm_sqr()).sum();
            if g.mode(idx).abs() == 1 {
                assert!(energy > 0.1);
            } else {
                assert!(energy < 1e-28, "mode {} has energy {energy}", g.mode(idx));
            }
        }
    }

    #[test]
    fn random_round_trip() {
        let g = grid(32, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::transform_forward(&g, &values).unwrap();
        let back = f.transform_backward();
        let err = values
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = values.iter().map(|a| a.abs()).fold(0.0, f64::max);
        assert!(err / scale < 1e-12);
        assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn forward_rejects_wrong_size() {
        let g = grid(8, 5);
        assert_eq!(
            SpectralField::transform_forward(&g, &[0.0; 10]).unwrap_err(),
            Error::DimensionMismatch {
                expected: 40,
                got: 10
            }
        );
    }

    #[test]
    fn dx_of_sine_and_constant() {
        let l = 3.0;
        let g = Grid::new(16, l, 5).unwrap();
        let kappa = 2.0 * PI / l;
        let c = SpectralField::from_fn(&g, |_, _| 2.5);
        assert!(c.dx().max_abs() == 0.0);
        let s = SpectralField::from_fn(&g, |x, _| (kappa * x).sin());
        assert!(max_interior_error(&s.dx(), |x, _| kappa * (kappa * x).cos()) < 1e-12);
        assert!(
            max_interior_error(&s.dx().dx(), |x, _| -kappa * kappa * (kappa * x).sin()) < 1e-11
        );
    }

    #[test]
    fn dy_exact_on_quadratics() {
        let g = grid(4, 11);
        let lin = SpectralField::from_fn(&g, |_, y| y);
        let quad = SpectralField::from_fn(&g, |_, y| y * y);
        assert!(max_interior_error(&lin.dy(), |_, _| 1.0) < 1e-12);
        assert!(max_interior_error(&quad.dy(), |_, y| 2.0 * y) < 1e-12);
        assert!(max_interior_error(&quad.dyy(), |_, _| 2.0) < 1e-10);
        // one-sided rows are exact on quadratics as well
        let d = quad.dy().transform_backward();
        assert!((d[0] - 0.0).abs() < 1e-12);
        assert!((d[10] - 2.0).abs() < 1e-12);
        assert!(SpectralField::zeros(&g).dyy().is_zero());
    }

    fn dy_error(n_y: usize) -> f64 {
        let g = grid(4, n_y);
        let f = SpectralField::from_fn(&g, |_, y| (PI * y).sin());
        let values = f.dy().transform_backward();
        (0..n_y)
            .map(|j| (values[j] - PI * (PI * g.y(j)).cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dy_second_order_refinement() {
        let ratio = dy_error(33) / dy_error(65);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn dyy_second_order_refinement() {
        let err = |n_y: usize| {
            let g = grid(4, n_y);
            let f = SpectralField::from_fn(&g, |_, y| (PI * y).sin());
            max_interior_error(&f.dyy(), |_, y| -PI * PI * (PI * y).sin())
        };
        let ratio = err(33) / err(65);
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn trapezoid_antiderivatives() {
        let g = grid(4, 9);
        let one = SpectralField::from_fn(&g, |_, _| 1.0).integrate_from_0();
        assert!(max_interior_error(&one, |_, y| y) < 1e-14);
        let lin = SpectralField::from_fn(&g, |_, y| y).integrate_from_0();
        // trapezoid is exact on linear integrands
        assert!(max_interior_error(&lin, |_, y| y * y / 2.0) < 1e-14);
        let err = |n_y: usize| {
            let g = grid(4, n_y);
            let f = SpectralField::from_fn(&g, |_, y| (PI * y).cos()).integrate_from_0();
            let v = f.transform_backward();
            (0..n_y)
                .map(|j| (v[j] - (PI * g.y(j)).sin() / PI).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(33) / err(65);
        assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn integrate_then_differentiate() {
        let err = |n_y: usize| {
            let g = grid(8, n_y);
            let f = SpectralField::from_fn(&g, |x, y| x.sin() * (2.0 * y).exp());
            max_interior_error(&f.integrate_from_0().dy(), |x, y| x.sin() * (2.0 * y).exp())
        };
        assert!(err(65) < 1e-2);
        assert!((3.5..4.5).contains(&(err(33) / err(65))));
    }

    #[test]
    fn multiplier_identity_single_mode_and_semigroup() {
        let g = grid(16, 5);
        let f = SpectralField::from_fn(&g, |x, y| (2.0 * x).cos() + y * x.sin());
        let same = f.apply_multiplier(0.0).unwrap();
        assert_eq!(same.coeffs(), f.coeffs());
        let scaled = f.apply_multiplier(0.3).unwrap();
        let idx = g.index_of(2).unwrap();
        let expected = f.at(idx, 2) * (0.3f64 * 3.0).exp();
        assert!((scaled.at(idx, 2) - expected).norm() < 1e-14);
        let two_step = f
            .apply_multiplier(0.2)
            .unwrap()
            .apply_multiplier(0.45)
            .unwrap();
        let one_step = f.apply_multiplier(0.65).unwrap();
        for (a, b) in two_step.coeffs().iter().zip(one_step.coeffs()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
        }
    }

    #[test]
    fn multiplier_overflow_and_negative_radius() {
        let g = grid(64, 5);
        let f = SpectralField::from_fn(&g, |x, _| x.sin());
        // xi_max = 32 -> 33 * 22 = 726 > 700
        assert!(matches!(
            f.apply_multiplier(22.0),
            Err(Error::AmplificationOverflow { .. })
        ));
        assert!(f.apply_multiplier(21.0).is_ok());
        assert!(matches!(
            f.apply_multiplier(-0.1),
            Err(Error::NegativeRadius(_))
        ));
        assert!(f.apply_multiplier_signed(-0.1).is_ok());
    }

    #[test]
    fn norm_golden_value() {
        // cos(x), constant in y, L_x = 2 pi: c_{+-1} = 1/2, so the norm^2 is
        // 2 * (1 + 1)^{2s} * (1/2)^2 = 2^{2s} / 2.
        let g = grid(16, 9);
        let f = SpectralField::from_fn(&g, |x, _| x.cos());
        for s in [0.0, 1.0, 2.5, 3.0] {
            let expected = 2f64.powf(2.0 * s) * 0.5;
            assert!((f.norm_hs0_sq(s) - expected).abs() < 1e-12 * expected);
        }
        assert_eq!(SpectralField::zeros(&g).norm_hs0(3.0), 0.0);
    }

    #[test]
    fn norm_monotone_in_s() {
        let g = grid(16, 9);
        let f = SpectralField::from_fn(&g, |x, y| (3.0 * x).sin() * y + 0.1);
        let mut prev = 0.0;
        for s in [0.0, 0.5, 1.0, 2.0, 3.5] {
            let n = f.norm_hs0(s);
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn inner_product_properties() {
        let g = grid(16, 9);
        let a = SpectralField::from_fn(&g, |x, y| x.sin() * y);
        let b = SpectralField::from_fn(&g, |x, y| (2.0 * x).cos() * (1.0 - y));
        assert!(a.inner_hs0(&b, 2.0).unwrap().abs() < 1e-14);
        let aa = a.inner_hs0(&a, 2.0).unwrap();
        assert!((aa - a.norm_hs0_sq(2.0)).abs() < 1e-12 * aa);
        let other = Grid::new(8, 2.0 * PI, 9).unwrap();
        assert_eq!(
            a.inner_hs0(&SpectralField::zeros(&other), 1.0).unwrap_err(),
            Error::GridMismatch
        );
    }

    #[test]
    fn cauchy_schwarz_random() {
        let g = grid(16, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let va: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let vb: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = SpectralField::transform_forward(&g, &va).unwrap();
            let b = SpectralField::transform_forward(&g, &vb).unwrap();
            let s = rng.gen_range(0.0..3.0);
            let lhs = a.inner_hs0(&b, s).unwrap().abs();
            assert!(lhs <= a.norm_hs0(s) * b.norm_hs0(s) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn parseval() {
        let g = grid(32, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = SpectralField::transform_forward(&g, &values).unwrap();
        let phys = f.physical_mean_square();
        assert!((phys - f.norm_hs0_sq(0.0)).abs() < 1e-12 * phys);
    }

    #[test]
    fn discrete_poincare() {
        for n_y in [9, 33, 129] {
            let g = grid(16, n_y);
            let h = g.h_y();
            let fields = [
                SpectralField::from_fn(&g, |x, y| x.sin() * y),
                SpectralField::from_fn(&g, |x, y| (2.0 * x).cos() * (PI * y / 2.0).sin()),
                SpectralField::from_fn(&g, |x, y| (x.cos() + 0.3) * (y - y * y * y)),
            ];
            for f in &fields {
                let lhs = f.norm_hs0(2.5);
                let rhs = f.dy().norm_hs0(2.5);
                assert!(lhs <= rhs * (1.0 + 2.0 * h), "n_y={n_y}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn dealiased_product_of_resolved_modes_is_exact() {
        let g = grid(32, 5);
        let a = SpectralField::from_fn(&g, |x, y| (2.0 * x).sin() * (1.0 + y));
        let b = SpectralField::from_fn(&g, |x, _| (3.0 * x).cos());
        let p = a.product(&b).unwrap();
        let exact =
            SpectralField::from_fn(&g, |x, y| (2.0 * x).sin() * (3.0 * x).cos() * (1.0 + y));
        assert!((&p - &exact).max_abs() < 1e-14);
        // |k| = 11 lies beyond 32 / 3 and is removed
        let hi = SpectralField::from_fn(&g, |x, _| (11.0 * x).cos());
        assert!(hi.dealias().max_abs() < 1e-15);
    }

    #[test]
    fn resample_round_trip() {
        let g = grid(16, 5);
        let g2 = grid(32, 5);
        let f = SpectralField::from_fn(&g, |x, y| (3.0 * x).sin() * y + x.cos());
        let up = f.resample_x(&g2).unwrap();
        let back = up.resample_x(&g).unwrap();
        assert!((&back - &f).max_abs() < 1e-15);
        let direct = SpectralField::from_fn(&g2, |x, y| (3.0 * x).sin() * y + x.cos());
        assert!((&up - &direct).max_abs() < 1e-14);
    }
}
