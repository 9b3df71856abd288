//! Manufactured solution and convergence studies.
//!
//! The exact solution is
//! `u = e^{-t} sin x sin(pi y)`, `b1 = e^{-t} cos x sin(pi y)`
//! on `L_x = 2 pi`, and the source terms are obtained by substituting it
//! into the reduced system, pressure included.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{simulate, Forcing, IntegratorConfig, Scheme};
use crate::model::{Parameters, State};
use crate::scalar::Scalar;
use crate::spectral::{Grid, SpectralField};

fn profiles<T: Scalar>(y: T) -> (T, T, T) {
    let pi = T::PI();
    let s = (pi * y).sin();
    let c = (T::one() - (pi * y).cos()) / pi;
    (s, c, (pi * y).cos())
}

/// `int_y^1 S^2 C` and `int_y^1 S C`.
fn tail_integrals<T: Scalar>(y: T) -> (T, T) {
    let pi = T::PI();
    let (two, three, four) = (T::lit(2.0), T::lit(3.0), T::lit(4.0));
    let s = (pi * y).sin();
    let i1 =
        ((T::one() - y) / two + (two * pi * y).sin() / (four * pi) + s * s * s / (three * pi)) / pi;
    let i2 = (T::one() + (pi * y).cos() + s * s / two) / (pi * pi);
    (i1, i2)
}

/// Exact state at time `t`.
pub fn exact_state<T: Scalar>(grid: &Arc<Grid<T>>, t: T) -> State<T> {
    let a = (-t).exp();
    let u = SpectralField::from_fn(grid, |x, y| a * x.sin() * profiles(y).0);
    let b1 = SpectralField::from_fn(grid, |x, y| a * x.cos() * profiles(y).0);
    let mut s = State {
        ut: u.scale(-T::one()),
        b1t: b1.scale(-T::one()),
        u,
        b1,
        t,
    };
    s.enforce_dirichlet();
    s
}

/// Exact pressure, gauged to vanish at `y = 1`.
pub fn exact_pressure<T: Scalar>(grid: &Arc<Grid<T>>, h: T, t: T) -> SpectralField<T> {
    SpectralField::from_fn(grid, |x, y| exact_pressure_at(x, y, h, t))
}

/// Pointwise exact pressure.
pub fn exact_pressure_at<T: Scalar>(x: T, y: T, h: T, t: T) -> T {
    let (e2, e3) = ((-T::lit(2.0) * t).exp(), (-T::lit(3.0) * t).exp());
    let (i1, i2) = tail_integrals(y);
    -h * h * (x.cos() * i1 * e3 + x.cos() * x.cos() * i2 * e2)
}

/// Source terms for the manufactured solution.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured<T> {
    pub params: Parameters<T>,
}

impl<T: Scalar> Manufactured<T> {
    pub fn new(params: &Parameters<T>) -> Self {
        Manufactured { params: *params }
    }

    /// Pointwise `(f_u, f_b)`.
    pub fn source(&self, x: T, y: T, t: T) -> (T, T) {
        let p = &self.params;
        let one = T::one();
        let pi = T::PI();
        let (e1, e2, e3) = (
            (-t).exp(),
            (-T::lit(2.0) * t).exp(),
            (-T::lit(3.0) * t).exp(),
        );
        let (s, c, cy) = profiles(y);
        let (i1, i2) = tail_integrals(y);
        let h2 = p.h * p.h;
        let (sx, cx) = (x.sin(), x.cos());
        let fu = e1 * (p.j - one + pi * pi) * sx * s
            + e2 * sx * cx * (s * s - pi * c * cy + h2 * c * c + T::lit(2.0) * h2 * i2)
            + e3 * h2 * sx * (s * c * c + i1);
        let fb = e1 * (p.magnetic_inertia() - one + pi * pi / p.pr_m) * cx * s
            - e2 * (s * s + pi * c * cy);
        (fu, fb)
    }
}

impl<T: Scalar> Forcing<T> for Manufactured<T> {
    fn evaluate(&self, grid: &Arc<Grid<T>>, t: T) -> (SpectralField<T>, SpectralField<T>) {
        let n_y = grid.n_y();
        let mut fu = vec![T::zero(); grid.len()];
        let mut fb = vec![T::zero(); grid.len()];
        for n in 0..grid.len() {
            let (a, b) = self.source(grid.x(n / n_y), grid.y(n % n_y), t);
            fu[n] = a;
            fb[n] = b;
        }
        (
            SpectralField::transform_forward(grid, &fu).expect("sized by grid"),
            SpectralField::transform_forward(grid, &fb).expect("sized by grid"),
        )
    }
}

/// Errors and observed orders along a refinement sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderTable {
    pub label: String,
    /// Refinement parameter (dt or n_y) per level.
    pub levels: Vec<f64>,
    pub errors: Vec<f64>,
    /// `orders[i]` compares levels `i` and `i + 1` (temporal: successive
    /// Richardson differences).
    pub orders: Vec<f64>,
}

impl OrderTable {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        !self.orders.is_empty() && self.orders.iter().all(|o| (lo..=hi).contains(o))
    }
}

/// Settings shared by both studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsConfig {
    pub n_x: usize,
    pub t_end: f64,
    /// Temporal study: fixed `n_y`, step sequence.
    pub n_y_temporal: usize,
    pub dts: Vec<f64>,
    /// Spatial study: fixed small step, grid sequence.
    pub dt_spatial: f64,
    pub n_ys: Vec<usize>,
    #[serde(default)]
    pub scheme: Scheme,
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            n_x: 16,
            t_end: 0.5,
            n_y_temporal: 33,
            dts: vec![4e-3, 2e-3, 1e-3],
            dt_spatial: 2.5e-4,
            n_ys: vec![33, 65, 129],
            scheme: Scheme::ImexCnAb2,
        }
    }
}

fn run_to_end<T: Scalar>(
    params: &Parameters<T>,
    grid: &Arc<Grid<T>>,
    dt: T,
    t_end: T,
    scheme: Scheme,
) -> Result<State<T>> {
    let initial = exact_state(grid, T::zero());
    let mut cfg = IntegratorConfig::new(dt, t_end);
    cfg.scheme = scheme;
    cfg.mms_forcing = true;
    let (n, _) = cfg.step_plan();
    cfg.snapshot_every = Some(n.max(1));
    let forcing: Arc<dyn Forcing<T>> = Arc::new(Manufactured::new(params));
    let traj = simulate(&initial, params, &cfg, n.max(1), Some(forcing)).map_err(|a| a.error)?;
    Ok(traj.final_state().clone())
}

fn state_distance<T: Scalar>(a: &State<T>, b: &State<T>) -> f64 {
    ((&a.u - &b.u).norm_hs0_sq(T::zero()) + (&a.b1 - &b.b1).norm_hs0_sq(T::zero()))
        .sqrt()
        .as_f64()
}

fn orders_from(errors: &[f64], ratio: impl Fn(usize) -> f64) -> Vec<f64> {
    errors
        .windows(2)
        .enumerate()
        .map(|(i, w)| (w[0] / w[1]).ln() / ratio(i).ln())
        .collect()
}

/// Temporal order from successive differences of the final states, which
/// cancels the (common) spatial error.
pub fn temporal_order<T: Scalar>(params: &Parameters<T>, cfg: &MmsConfig) -> Result<OrderTable> {
    let grid = Grid::new(cfg.n_x, T::lit(2.0) * T::PI(), cfg.n_y_temporal)?;
    let finals = cfg
        .dts
        .iter()
        .map(|&dt| run_to_end(params, &grid, T::lit(dt), T::lit(cfg.t_end), cfg.scheme))
        .collect::<Result<Vec<_>>>()?;
    let errors: Vec<f64> = finals
        .windows(2)
        .map(|w| state_distance(&w[0], &w[1]))
        .collect();
    let orders = orders_from(&errors, |i| cfg.dts[i] / cfg.dts[i + 1]);
    Ok(OrderTable {
        label: "temporal".into(),
        levels: cfg.dts.clone(),
        errors,
        orders,
    })
}

/// Spatial order from the error against the exact solution at a step small
/// enough for the time error to be negligible.
pub fn spatial_order<T: Scalar>(params: &Parameters<T>, cfg: &MmsConfig) -> Result<OrderTable> {
    let mut errors = Vec::with_capacity(cfg.n_ys.len());
    for &n_y in &cfg.n_ys {
        let grid = Grid::new(cfg.n_x, T::lit(2.0) * T::PI(), n_y)?;
        let fin = run_to_end(
            params,
            &grid,
            T::lit(cfg.dt_spatial),
            T::lit(cfg.t_end),
            cfg.scheme,
        )?;
        errors.push(state_distance(&fin, &exact_state(&grid, fin.t)));
    }
    let orders = orders_from(&errors, |i| {
        (cfg.n_ys[i + 1] - 1) as f64 / (cfg.n_ys[i] - 1) as f64
    });
    let levels = cfg.n_ys.iter().map(|&n| n as f64).collect();
    Ok(OrderTable {
        label: "spatial_y".into(),
        levels,
        errors,
        orders,
    })
}

/// Both studies; fails when a sequence has fewer than two levels for the
/// spatial study or three for the temporal one.
pub fn convergence_study<T: Scalar>(
    params: &Parameters<T>,
    cfg: &MmsConfig,
) -> Result<(OrderTable, OrderTable)> {
    if cfg.dts.len() < 3 || cfg.n_ys.len() < 2 {
        return Err(Error::InvalidParameter(
            "convergence study needs at least three steps and two grids".into(),
        ));
    }
    Ok((temporal_order(params, cfg)?, spatial_order(params, cfg)?))
}
