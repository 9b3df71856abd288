//! Reduced boundary-layer system in first-order-in-time form.
//!
//! The primary unknowns are the tangential velocity `u` and the tangential
//! magnetic field `b1` together with their time derivatives. The transverse
//! fields `v`, `b2`, the electric field `e` and the pressure `p` are
//! reconstructed from them at every evaluation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{Grid, SpectralField};

/// Dimensionless coefficients and analytic framework numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters<T> {
    /// Limit ratio of the Hartmann number to the Reynolds number.
    #[serde(rename = "H")]
    pub h: T,
    /// Cattaneo inertia.
    #[serde(rename = "J")]
    pub j: T,
    /// Displacement-current ratio.
    pub kappa: T,
    /// Magnetic Prandtl number.
    #[serde(rename = "Pr_m")]
    pub pr_m: T,
    /// Initial radius of analyticity.
    pub tau0: T,
    /// Sobolev index.
    pub s: T,
}

impl<T: Scalar> Parameters<T> {
    /// All coefficients one, `s = 3`.
    pub fn unit() -> Self {
        Parameters {
            h: T::one(),
            j: T::one(),
            kappa: T::one(),
            pr_m: T::one(),
            tau0: T::one(),
            s: T::lit(3.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: T| {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {x}"
                )))
            }
        };
        if !(self.h >= T::zero()) || !self.h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "H must be nonnegative, got {}",
                self.h
            )));
        }
        positive("J", self.j)?;
        positive("kappa", self.kappa)?;
        positive("Pr_m", self.pr_m)?;
        positive("tau0", self.tau0)?;
        if !(self.s > T::lit(2.0)) || !self.s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "s must exceed 2, got {}",
                self.s
            )));
        }
        Ok(())
    }

    /// `kappa / Pr_m`, the inertia of the magnetic equation.
    pub fn magnetic_inertia(&self) -> T {
        self.kappa / self.pr_m
    }
}

/// Primary unknowns at time `t`.
#[derive(Clone, Debug)]
pub struct State<T: Scalar> {
    pub u: SpectralField<T>,
    pub b1: SpectralField<T>,
    pub ut: SpectralField<T>,
    pub b1t: SpectralField<T>,
    pub t: T,
}

impl<T: Scalar> State<T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        State {
            u: SpectralField::zeros(grid),
            b1: SpectralField::zeros(grid),
            ut: SpectralField::zeros(grid),
            b1t: SpectralField::zeros(grid),
            t: T::zero(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.u.grid()
    }

    pub fn fields(&self) -> [&SpectralField<T>; 4] {
        [&self.u, &self.b1, &self.ut, &self.b1t]
    }

    /// Checks that every component lives on one grid and is finite.
    pub fn validate(&self) -> Result<()> {
        for f in [&self.b1, &self.ut, &self.b1t] {
            self.u.check_same_grid(f)?;
        }
        if self.fields().iter().any(|f| !f.is_finite()) || !self.t.is_finite() {
            return Err(Error::NonFinite("state"));
        }
        Ok(())
    }

    /// Zeroes the wall rows of all four components.
    pub fn enforce_dirichlet(&mut self) {
        self.u.zero_walls();
        self.b1.zero_walls();
        self.ut.zero_walls();
        self.b1t.zero_walls();
    }

    /// Largest wall value over the four components.
    pub fn wall_trace(&self) -> T {
        let last = self.grid().n_y() - 1;
        self.fields()
            .iter()
            .map(|f| f.max_abs_on_row(0).max(f.max_abs_on_row(last)))
            .fold(T::zero(), T::max)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        State {
            u: self.u.scale(alpha),
            b1: self.b1.scale(alpha),
            ut: self.ut.scale(alpha),
            b1t: self.b1t.scale(alpha),
            t: self.t,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.fields().iter().all(|f| f.is_zero())
    }
}

/// Fields determined by the state through the divergence constraints, the
/// Faraday relation and the wall-normal momentum balance.
#[derive(Clone, Debug)]
pub struct DerivedFields<T: Scalar> {
    pub v: SpectralField<T>,
    pub b2: SpectralField<T>,
    pub e: SpectralField<T>,
    pub p: SpectralField<T>,
    pub dpx: SpectralField<T>,
}

/// `v = -int_0^y dx u`.
pub fn reconstruct_v<T: Scalar>(u: &SpectralField<T>) -> SpectralField<T> {
    -&u.dx().integrate_from_0()
}

/// `b2 = -int_0^y dx b1`.
pub fn reconstruct_b2<T: Scalar>(b1: &SpectralField<T>) -> SpectralField<T> {
    reconstruct_v(b1)
}

/// `e = -int_0^y dt b1`.
pub fn reconstruct_e<T: Scalar>(b1t: &SpectralField<T>) -> SpectralField<T> {
    -&b1t.integrate_from_0()
}

/// Pseudo-spectral products evaluated on 2/3-truncated physical values.
struct Products<'g, T: Scalar> {
    grid: &'g Arc<Grid<T>>,
}

impl<'g, T: Scalar> Products<'g, T> {
    fn values(&self, f: &SpectralField<T>) -> Vec<T> {
        f.dealiased_values()
    }

    /// `sum_i c_i a_i b_i`, truncated once; identical to truncating every
    /// product separately because truncation is linear.
    fn combine(&self, terms: &[(T, &[T], &[T])]) -> Result<SpectralField<T>> {
        let mut acc = vec![T::zero(); self.grid.len()];
        for (c, a, b) in terms {
            for ((s, x), y) in acc.iter_mut().zip(a.iter()).zip(b.iter()) {
                *s = *s + *c * *x * *y;
            }
        }
        if acc.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("nonlinear product"));
        }
        Ok(SpectralField::transform_forward(self.grid, &acc)?.dealias())
    }
}

/// Pressure from `dy p = q`, `q = H^2 (b1 b2 u - b1^2 v + b1 e)`, gauged to
/// vanish on the top wall. Returns `(p, dx p)`.
pub fn recover_pressure<T: Scalar>(
    state: &State<T>,
    v: &SpectralField<T>,
    b2: &SpectralField<T>,
    e: &SpectralField<T>,
    params: &Parameters<T>,
) -> Result<(SpectralField<T>, SpectralField<T>)> {
    let grid = state.grid();
    if params.h == T::zero() {
        return Ok((SpectralField::zeros(grid), SpectralField::zeros(grid)));
    }
    let pr = Products { grid };
    let u = pr.values(&state.u);
    let b1 = pr.values(&state.b1);
    let (vv, bb2, ee) = (pr.values(v), pr.values(b2), pr.values(e));
    let b1b2 = pr.values(&pr.combine(&[(T::one(), &b1, &bb2)])?);
    let b1b1 = pr.values(&pr.combine(&[(T::one(), &b1, &b1)])?);
    let q = pr.combine(&[
        (T::one(), &b1b2, &u),
        (-T::one(), &b1b1, &vv),
        (T::one(), &b1, &ee),
    ])?;
    let p = q
        .scale(params.h * params.h)
        .integrate_to_top()
        .scale(-T::one());
    let dpx = p.dx();
    Ok((p, dpx))
}

/// Reconstructs `v`, `b2`, `e`, `p`, `dx p` from the state.
pub fn derive<T: Scalar>(state: &State<T>, params: &Parameters<T>) -> Result<DerivedFields<T>> {
    let v = reconstruct_v(&state.u);
    let b2 = reconstruct_b2(&state.b1);
    let e = reconstruct_e(&state.b1t);
    let (p, dpx) = recover_pressure(state, &v, &b2, &e, params)?;
    Ok(DerivedFields { v, b2, e, p, dpx })
}

/// Explicit (nonlinear and pressure) contributions, before division by the
/// inertia coefficients:
///
/// `n_u = -u u_x - v u_y - p_x + H^2 (b1 b2 v - u b2^2 - b2 e)`
/// `n_b = -u b1_x - v b1_y + b1 u_x + b2 u_y`
#[derive(Clone, Debug)]
pub struct ExplicitTerms<T: Scalar> {
    pub n_u: SpectralField<T>,
    pub n_b: SpectralField<T>,
}

pub fn explicit_terms<T: Scalar>(
    state: &State<T>,
    params: &Parameters<T>,
) -> Result<ExplicitTerms<T>> {
    let grid = state.grid();
    let d = derive(state, params)?;
    let pr = Products { grid };
    let ux_f = state.u.dx();
    let u = pr.values(&state.u);
    let ux = pr.values(&ux_f);
    let uy = pr.values(&state.u.dy());
    let b1x = pr.values(&state.b1.dx());
    let b1y = pr.values(&state.b1.dy());
    let b1 = pr.values(&state.b1);
    let v = pr.values(&d.v);
    let b2 = pr.values(&d.b2);
    let one = T::one();

    let mut n_u = &pr.combine(&[(-one, &u, &ux), (-one, &v, &uy)])? - &d.dpx;
    if params.h != T::zero() {
        let e = pr.values(&d.e);
        let b1b2 = pr.values(&pr.combine(&[(one, &b1, &b2)])?);
        let b2b2 = pr.values(&pr.combine(&[(one, &b2, &b2)])?);
        let lorentz = pr.combine(&[(one, &b1b2, &v), (-one, &u, &b2b2), (-one, &b2, &e)])?;
        n_u = n_u.axpy(params.h * params.h, &lorentz);
    }
    let n_b = pr.combine(&[
        (-one, &u, &b1x),
        (-one, &v, &b1y),
        (one, &b1, &ux),
        (one, &b2, &uy),
    ])?;
    Ok(ExplicitTerms { n_u, n_b })
}

/// Time derivative of the state.
#[derive(Clone, Debug)]
pub struct Rhs<T: Scalar> {
    pub du: SpectralField<T>,
    pub dut: SpectralField<T>,
    pub db1: SpectralField<T>,
    pub db1t: SpectralField<T>,
}

/// Full right-hand side of the reduced system; wall rows of `dut`, `db1t`
/// are zero.
pub fn rhs<T: Scalar>(state: &State<T>, params: &Parameters<T>) -> Result<Rhs<T>> {
    let ex = explicit_terms(state, params)?;
    let mut dut = (&(&state.u.dyy() - &state.ut) + &ex.n_u).scale(T::one() / params.j);
    let inv_pr = T::one() / params.pr_m;
    let mut db1t = (&state.b1.dyy().axpy(-params.pr_m, &state.b1t).scale(inv_pr) + &ex.n_b)
        .scale(params.pr_m / params.kappa);
    dut.zero_walls();
    db1t.zero_walls();
    if !dut.is_finite() || !db1t.is_finite() {
        return Err(Error::NonFinite("rhs"));
    }
    Ok(Rhs {
        du: state.ut.clone(),
        dut,
        db1: state.b1t.clone(),
        db1t,
    })
}

/// Largest interior value of the cell-centred divergence
/// `(dx f_j + dx f_{j+1}) / 2 + (g_{j+1} - g_j) / h`.
///
/// This is the divergence operator that is discretely adjoint to the
/// trapezoid reconstruction, so it vanishes up to roundoff for `g`
/// produced by [`reconstruct_v`].
pub fn staggered_divergence<T: Scalar>(f: &SpectralField<T>, g: &SpectralField<T>) -> T {
    let grid = f.grid();
    let (n_x, n_y) = (grid.n_x(), grid.n_y());
    let fx = f.dx().transform_backward();
    let gv = g.transform_backward();
    let h = grid.h_y();
    let half = T::lit(0.5);
    let mut worst = T::zero();
    for i in 0..n_x {
        for j in 0..n_y - 1 {
            let n = i * n_y + j;
            let r = (fx[n] + fx[n + 1]) * half + (gv[n + 1] - gv[n]) / h;
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Largest interior value of `dx f + dy g` with the nodal central stencil.
pub fn nodal_divergence<T: Scalar>(f: &SpectralField<T>, g: &SpectralField<T>) -> T {
    let grid = f.grid();
    let n_y = grid.n_y();
    let r = (&f.dx() + &g.dy()).transform_backward();
    r.iter()
        .enumerate()
        .filter(|(n, _)| {
            let j = n % n_y;
            j > 0 && j + 1 < n_y
        })
        .map(|(_, x)| x.abs())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n_y: usize) -> Arc<Grid<f64>> {
        Grid::new(16, 2.0 * PI, n_y).unwrap()
    }

    fn max_err(f: &SpectralField<f64>, exact: impl Fn(f64, f64) -> f64) -> f64 {
        let g = f.grid();
        let v = f.transform_backward();
        (0..g.len())
            .map(|n| (v[n] - exact(g.x(n / g.n_y()), g.y(n % g.n_y()))).abs())
            .fold(0.0, f64::max)
    }

    fn state_from(
        g: &Arc<Grid<f64>>,
        u: impl Fn(f64, f64) -> f64,
        b1: impl Fn(f64, f64) -> f64,
    ) -> State<f64> {
        let mut s = State::zeros(g);
        s.u = SpectralField::from_fn(g, u);
        s.b1 = SpectralField::from_fn(g, b1);
        s
    }

    #[test]
    fn parameter_validation() {
        assert!(Parameters::<f64>::unit().validate().is_ok());
        let mut p = Parameters::<f64>::unit();
        p.j = 0.0;
        assert!(p.validate().is_err());
        let mut p = Parameters::<f64>::unit();
        p.s = 2.0;
        assert!(p.validate().is_err());
        let mut p = Parameters::<f64>::unit();
        p.h = -1.0;
        assert!(p.validate().is_err());
        p.h = 0.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn v_from_linear_profile() {
        let g = grid(9);
        assert!(reconstruct_v(&SpectralField::zeros(&g)).is_zero());
        let u = SpectralField::from_fn(&g, |x, y| x.sin() * y);
        let v = reconstruct_v(&u);
        assert!(max_err(&v, |x, y| -x.cos() * y * y / 2.0) < 1e-14);
        let flat = SpectralField::from_fn(&g, |_, y| y * (1.0 - y));
        assert!(reconstruct_v(&flat).max_abs() < 1e-15);
        assert!(reconstruct_b2(&flat).max_abs() < 1e-15);
    }

    #[test]
    fn e_reconstruction() {
        let g = grid(9);
        let one = SpectralField::from_fn(&g, |_, _| 1.0);
        assert!(max_err(&reconstruct_e(&one), |_, y| -y) < 1e-15);
        let err = |n_y: usize| {
            let g = grid(n_y);
            let c = SpectralField::from_fn(&g, |_, y| (PI * y).cos());
            max_err(&reconstruct_e(&c), |_, y| -(PI * y).sin() / PI)
        };
        assert!((3.8..4.2).contains(&(err(33) / err(65))));
    }

    #[test]
    fn pressure_vanishes_without_field_or_coupling() {
        let g = grid(17);
        let s = state_from(&g, |x, y| x.sin() * (PI * y).sin(), |_, _| 0.0);
        let d = derive(&s, &Parameters::unit()).unwrap();
        assert!(d.p.max_abs() == 0.0 && d.dpx.max_abs() == 0.0);
        let s = state_from(
            &g,
            |x, y| x.sin() * (PI * y).sin(),
            |x, y| x.cos() * (PI * y).sin(),
        );
        let mut p = Parameters::unit();
        p.h = 0.0;
        assert!(derive(&s, &p).unwrap().p.is_zero());
    }

    #[test]
    fn pressure_gauge_top_wall() {
        let g = grid(17);
        let s = state_from(
            &g,
            |x, y| x.sin() * (PI * y).sin(),
            |x, y| x.cos() * (PI * y).sin(),
        );
        let d = derive(&s, &Parameters::unit()).unwrap();
        assert_eq!(d.p.max_abs_on_row(16), 0.0);
        assert!(d.p.max_abs() > 1e-4);
    }

    /// Dense-quadrature oracle for `p(x, y) = -int_y^1 q` with
    /// `u = sin x S`, `b1 = cos x S`, `b1t = 0`, `S = sin(pi y)`.
    fn pressure_oracle(x: f64, y: f64) -> f64 {
        let s = |y: f64| (PI * y).sin();
        let c = |y: f64| (1.0 - (PI * y).cos()) / PI;
        let q = |y: f64| {
            let (u, b1) = (x.sin() * s(y), x.cos() * s(y));
            let (v, b2) = (-x.cos() * c(y), x.sin() * c(y));
            b1 * b2 * u - b1 * b1 * v
        };
        let n = 4000;
        let h = (1.0 - y) / n as f64;
        // composite Simpson
        let mut acc = q(y) + q(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * q(y + i as f64 * h);
        }
        -acc * h / 3.0
    }

    #[test]
    fn pressure_matches_dense_quadrature() {
        let err = |n_y: usize| {
            let g = grid(n_y);
            let s = state_from(
                &g,
                |x, y| x.sin() * (PI * y).sin(),
                |x, y| x.cos() * (PI * y).sin(),
            );
            let d = derive(&s, &Parameters::unit()).unwrap();
            max_err(&d.p, pressure_oracle)
        };
        let (e1, e2) = (err(33), err(65));
        assert!(e2 < 1e-3, "{e2}");
        assert!((3.5..4.5).contains(&(e1 / e2)), "{}", e1 / e2);
    }

    #[test]
    fn zero_state_zero_rhs() {
        let g = grid(9);
        let r = rhs(&State::zeros(&g), &Parameters::unit()).unwrap();
        assert!(r.du.is_zero() && r.dut.is_zero() && r.db1.is_zero() && r.db1t.is_zero());
    }

    #[test]
    fn pure_magnetic_profile_golden() {
        // u = 0, b1 = sin(pi y) cos x, b1t = 0: every momentum term vanishes
        // and db1t = (Pr/kappa)(1/Pr) dyy b1.
        let g = grid(17);
        let s = state_from(&g, |_, _| 0.0, |x, y| (PI * y).sin() * x.cos());
        let mut p = Parameters::unit();
        p.pr_m = 2.0;
        p.kappa = 3.0;
        p.h = 1.7;
        let r = rhs(&s, &p).unwrap();
        assert!(r.dut.max_abs() < 1e-15);
        let mut expected = s.b1.dyy().scale(1.0 / 3.0);
        expected.zero_walls();
        assert!((&r.db1t - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn reduces_to_damped_wave_without_field() {
        let g = grid(17);
        let mut s = state_from(&g, |_, y| (PI * y).sin(), |_, _| 0.0);
        s.ut = SpectralField::from_fn(&g, |_, y| 0.5 * (2.0 * PI * y).sin());
        let mut p = Parameters::unit();
        p.h = 0.0;
        p.j = 2.0;
        let r = rhs(&s, &p).unwrap();
        let mut expected = (&s.u.dyy() - &s.ut).scale(0.5);
        expected.zero_walls();
        assert!((&r.dut - &expected).max_abs() < 1e-13);
        assert!(r.db1t.max_abs() == 0.0);
    }

    #[test]
    fn x_independent_state_has_no_pressure() {
        let g = grid(17);
        let s = state_from(&g, |_, y| (PI * y).sin(), |_, y| y * (1.0 - y));
        let d = derive(&s, &Parameters::unit()).unwrap();
        assert!(d.v.max_abs() < 1e-15 && d.b2.max_abs() < 1e-15);
        assert!(d.dpx.max_abs() < 1e-15);
    }

    #[test]
    fn zero_b1_is_invariant() {
        let g = grid(17);
        let s = state_from(
            &g,
            |x, y| (x.sin() + 0.2 * (2.0 * x).cos()) * (PI * y).sin(),
            |_, _| 0.0,
        );
        let r = rhs(&s, &Parameters::unit()).unwrap();
        assert!(r.db1t.is_zero());
    }

    #[test]
    fn divergence_measures() {
        let g = grid(65);
        let u = SpectralField::from_fn(&g, |x, y| {
            x.sin() * (PI * y).sin() + (2.0 * x).cos() * y * y
        });
        let v = reconstruct_v(&u);
        let scale = u.dx().max_abs();
        assert!(staggered_divergence(&u, &v) < 1e-13 * scale.max(1.0));
        let h = g.h_y();
        assert!(nodal_divergence(&u, &v) <= 5.0 * h * h * 20.0);
    }
}
