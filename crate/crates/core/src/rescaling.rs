//! Term-order bookkeeping for the two boundary-layer scalings.
//!
//! Test fields are given in the scaled variables `(t, x, y)` with `x` of
//! period `2 pi` and `y` in `[0, 1]`. They are lifted to the dimensionless
//! variables `(t', x', y')` and every term of the dimensionless
//! Navier-Stokes-Maxwell system is evaluated there, with derivatives taken
//! numerically on a grid stretched by the same change of variables. The
//! observed power of the small parameter is then a log-log fit over several
//! parameter values, and owes nothing to the claimed exponents.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mms::exact_pressure_at;
use crate::spectral::{Grid, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Prandtl,
    Hartmann,
}

/// Dimensionless parameters. `Ha = H_limit * Re` and `Re_m = Pr_m * Re`
/// hold exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescalingParams {
    #[serde(rename = "Re")]
    pub re: f64,
    #[serde(rename = "H_limit")]
    pub h_limit: f64,
    #[serde(rename = "Pr_m")]
    pub pr_m: f64,
    #[serde(rename = "U0_over_c")]
    pub u0_over_c: f64,
    #[serde(rename = "Jscript")]
    pub jscript: f64,
    pub regime: Regime,
}

impl RescalingParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("Re", self.re),
            ("Pr_m", self.pr_m),
            ("U0_over_c", self.u0_over_c),
            ("Jscript", self.jscript),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.h_limit.is_finite() && self.h_limit >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "H_limit must be >= 0, got {}",
                self.h_limit
            )));
        }
        Ok(())
    }

    pub fn ha(&self) -> f64 {
        self.h_limit * self.re
    }

    pub fn re_m(&self) -> f64 {
        self.pr_m * self.re
    }

    pub fn eps(&self) -> f64 {
        self.re.powf(-0.5)
    }

    /// `H / Ha`, which reduces to `1 / Re`; that form is also used when `H = 0`.
    pub fn delta(&self) -> f64 {
        1.0 / self.re
    }

    pub fn small(&self) -> f64 {
        match self.regime {
            Regime::Prandtl => self.eps(),
            Regime::Hartmann => self.delta(),
        }
    }

    /// The fixed displacement-current ratio of the regime.
    pub fn kappa(&self) -> f64 {
        let r = self.u0_over_c * self.u0_over_c;
        match self.regime {
            Regime::Prandtl => r / self.re,
            Regime::Hartmann => r,
        }
    }

    pub fn j_limit(&self) -> f64 {
        self.kappa() * self.jscript
    }

    /// The same fixed limits with the Reynolds number set by `small`.
    pub fn at_small(&self, small: f64) -> Result<Self> {
        if !(small.is_finite() && small > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "small parameter must be positive, got {small}"
            )));
        }
        let kappa = self.kappa();
        let mut p = *self;
        match self.regime {
            Regime::Prandtl => {
                p.re = small.powi(-2);
                p.u0_over_c = (kappa * p.re).sqrt();
            }
            Regime::Hartmann => p.re = 1.0 / small,
        }
        Ok(p)
    }

    fn coefficients(&self) -> Coefficients {
        let r = self.u0_over_c * self.u0_over_c;
        Coefficients {
            cat_u: r * self.jscript / self.re,
            inv_re: 1.0 / self.re,
            cat_b: r / self.re_m(),
            inv_re_m: 1.0 / self.re_m(),
            lorentz: self.ha() * self.ha() / self.re,
        }
    }

    fn limit_coefficients(&self) -> Coefficients {
        Coefficients {
            cat_u: self.j_limit(),
            inv_re: 1.0,
            cat_b: self.kappa() / self.pr_m,
            inv_re_m: 1.0 / self.pr_m,
            lorentz: self.h_limit * self.h_limit,
        }
    }
}

impl Default for RescalingParams {
    fn default() -> Self {
        RescalingParams {
            re: 100.0,
            h_limit: 0.5,
            pr_m: 1.0,
            u0_over_c: 1.0,
            jscript: 1.0,
            regime: Regime::Prandtl,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Coefficients {
    cat_u: f64,
    inv_re: f64,
    cat_b: f64,
    inv_re_m: f64,
    lorentz: f64,
}

pub const FIELD_NAMES: [&str; 6] = ["u", "v", "b1", "b2", "e", "p"];
const U: usize = 0;
const V: usize = 1;
const B1: usize = 2;
const B2: usize = 3;
const E: usize = 4;
const P: usize = 5;

/// Fields `(u, v, b1, b2, e, p)` in the scaled variables.
pub trait ScaledFields {
    fn sample(&self, t: f64, x: f64, y: f64) -> [f64; 6];
}

/// Low Fourier modes in `x` times polynomial or sine profiles in `y`, with
/// `u = v = 0` on the wall and the given traces for `b1`, `b2`, `e`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolySinFields {
    pub amplitude: f64,
    pub decay: f64,
    pub b1_trace: f64,
    pub b2_trace: f64,
    pub e_trace: f64,
}

impl PolySinFields {
    pub fn zero() -> Self {
        PolySinFields {
            amplitude: 0.0,
            decay: 0.0,
            b1_trace: 0.0,
            b2_trace: 0.0,
            e_trace: 0.0,
        }
    }
}

impl Default for PolySinFields {
    fn default() -> Self {
        PolySinFields {
            amplitude: 1.0,
            decay: 1.0,
            b1_trace: 0.5,
            b2_trace: 0.25,
            e_trace: 0.125,
        }
    }
}

impl ScaledFields for PolySinFields {
    fn sample(&self, t: f64, x: f64, y: f64) -> [f64; 6] {
        let g = self.amplitude * (-self.decay * t).exp();
        let s = (PI * y).sin();
        let c = (1.0 - (PI * y).cos()) / PI;
        [
            g * x.sin() * s,
            -g * x.cos() * c,
            self.b1_trace + g * x.cos() * s,
            self.b2_trace + g * x.sin() * c,
            self.e_trace + g * (2.0 * x).cos() * y * (1.0 - y),
            g * x.cos() * y * y * (1.0 + y),
        ]
    }
}

/// The manufactured solution of the reduced system, completed with its
/// reconstructed `v`, `b2`, `e` and pressure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedFields {
    pub h: f64,
}

impl ScaledFields for ManufacturedFields {
    fn sample(&self, t: f64, x: f64, y: f64) -> [f64; 6] {
        let a = (-t).exp();
        let s = (PI * y).sin();
        let c = (1.0 - (PI * y).cos()) / PI;
        [
            a * x.sin() * s,
            -a * x.cos() * c,
            a * x.cos() * s,
            a * x.sin() * c,
            a * x.cos() * c,
            exact_pressure_at(x, y, self.h, t),
        ]
    }
}

/// Primed coordinate = stretch * scaled coordinate; primed field =
/// `field[k]` * scaled field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scaling {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub field: [f64; 6],
}

impl Scaling {
    pub fn new(regime: Regime, small: f64) -> Self {
        match regime {
            Regime::Prandtl => {
                let e = small;
                Scaling {
                    t: 1.0,
                    x: 1.0,
                    y: e,
                    field: [1.0, e, 1.0, e, e, 1.0],
                }
            }
            Regime::Hartmann => {
                let d = small;
                let r = d.sqrt();
                Scaling {
                    t: d,
                    x: r,
                    y: d,
                    field: [1.0 / r, 1.0, 1.0 / r, 1.0, 1.0 / r, 1.0 / d],
                }
            }
        }
    }

    pub fn identity() -> Self {
        Scaling {
            t: 1.0,
            x: 1.0,
            y: 1.0,
            field: [1.0; 6],
        }
    }
}

/// Scaled fields seen in the dimensionless variables.
pub struct Lifted<'a, F: ScaledFields + ?Sized> {
    pub fields: &'a F,
    pub scaling: Scaling,
}

impl<F: ScaledFields + ?Sized> Lifted<'_, F> {
    pub fn sample(&self, tp: f64, xp: f64, yp: f64) -> [f64; 6] {
        let s = &self.scaling;
        let mut out = self.fields.sample(tp / s.t, xp / s.x, yp / s.y);
        for (o, c) in out.iter_mut().zip(s.field) {
            *o *= c;
        }
        out
    }

    /// The forward change of variables applied to the lifted fields.
    pub fn pull_back(&self, t: f64, x: f64, y: f64) -> [f64; 6] {
        let s = &self.scaling;
        let mut out = self.sample(s.t * t, s.x * x, s.y * y);
        for (o, c) in out.iter_mut().zip(s.field) {
            *o /= c;
        }
        out
    }
}

/// Sampling grid and time slice, in scaled variables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub n_x: usize,
    pub n_y: usize,
    pub t0: f64,
    pub h_t: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Frame {
            n_x: 16,
            n_y: 33,
            t0: 0.5,
            h_t: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct FieldDerivs {
    val: Vec<f64>,
    dt: Vec<f64>,
    dtt: Vec<f64>,
    dx: Vec<f64>,
    dxx: Vec<f64>,
    dy: Vec<f64>,
    dyy: Vec<f64>,
}

struct Derivs {
    f: [FieldDerivs; 6],
    len: usize,
}

/// Samples `sample` on the grid stretched by `scaling` and differentiates
/// in the stretched variables: central differences in time, spectral in x,
/// finite differences in y.
fn derivatives(
    sample: &dyn Fn(f64, f64, f64) -> [f64; 6],
    scaling: &Scaling,
    frame: &Frame,
) -> Result<Derivs> {
    let grid = Grid::with_y_extent(frame.n_x, 2.0 * PI * scaling.x, frame.n_y, scaling.y)?;
    let n_y = grid.n_y();
    let len = grid.len();
    let ht = frame.h_t * scaling.t;
    let t0 = frame.t0 * scaling.t;
    let slices: Vec<Vec<[f64; 6]>> = [t0 - ht, t0, t0 + ht]
        .iter()
        .map(|&t| {
            (0..len)
                .map(|n| sample(t, grid.x(n / n_y), grid.y(n % n_y)))
                .collect()
        })
        .collect();
    let mut f: [FieldDerivs; 6] = Default::default();
    for (k, d) in f.iter_mut().enumerate() {
        let col = |s: usize| -> Vec<f64> { slices[s].iter().map(|v| v[k]).collect() };
        let (m, z, p) = (col(0), col(1), col(2));
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rescaling test field"));
        }
        let field = SpectralField::transform_forward(&grid, &z)?;
        check_resolved(&field, FIELD_NAMES[k])?;
        let fx = field.dx();
        d.dt = (0..len).map(|n| (p[n] - m[n]) / (2.0 * ht)).collect();
        d.dtt = (0..len)
            .map(|n| (p[n] - 2.0 * z[n] + m[n]) / (ht * ht))
            .collect();
        d.dxx = fx.dx().transform_backward();
        d.dx = fx.transform_backward();
        d.dy = field.dy().transform_backward();
        d.dyy = field.dyy().transform_backward();
        d.val = z;
    }
    Ok(Derivs { f, len })
}

fn check_resolved(field: &SpectralField<f64>, name: &str) -> Result<()> {
    let grid = field.grid();
    let (mut inside, mut outside) = (0.0, 0.0);
    for idx in 0..grid.n_x() {
        let e: f64 = field.line(idx).iter().map(|c| c.norm_sqr()).sum();
        if grid.is_resolved(idx) {
            inside += e;
        } else {
            outside += e;
        }
    }
    if outside > 1e-24 * (inside + outside) + f64::MIN_POSITIVE {
        return Err(Error::Unresolved(format!(
            "{name}: fraction {:.3e} of its energy lies outside the two-thirds band on n_x = {}",
            outside / (inside + outside),
            grid.n_x()
        )));
    }
    Ok(())
}

type Pointwise = fn(&Derivs, &Coefficients, usize) -> f64;

/// One signed term of the dimensionless system.
struct TermSpec {
    eq: u8,
    name: &'static str,
    prandtl: f64,
    hartmann: f64,
    in_prandtl_display: bool,
    in_hartmann_display: bool,
    eval: Pointwise,
}

pub const EQUATIONS: [&str; 8] = [
    "x-momentum",
    "y-momentum",
    "incompressibility",
    "b1 induction",
    "b2 induction",
    "Faraday b1",
    "Faraday b2",
    "solenoidal b",
];

macro_rules! term {
    ($eq:expr, $name:expr, $pe:expr, $he:expr, $pd:expr, $hd:expr, $f:expr) => {
        TermSpec {
            eq: $eq,
            name: $name,
            prandtl: $pe,
            hartmann: $he,
            in_prandtl_display: $pd,
            in_hartmann_display: $hd,
            eval: $f,
        }
    };
}

/// Every term of the dimensionless system written as `LHS - RHS`, with the
/// exponent of the small parameter claimed for it in each scaled display.
/// The inertial and viscous `v` terms missing from a display carry the
/// exponent shared by the rest of their equation.
#[rustfmt::skip]
const TERMS: &[TermSpec] = &[
    term!(1, "J dtt u", 0.0, -1.5, true, true, |d, c, n| c.cat_u * d.f[U].dtt[n]),
    term!(1, "dt u", 0.0, -1.5, true, true, |d, _, n| d.f[U].dt[n]),
    term!(1, "u dx u", 0.0, -1.5, true, true, |d, _, n| d.f[U].val[n] * d.f[U].dx[n]),
    term!(1, "v dy u", 0.0, -1.5, true, true, |d, _, n| d.f[V].val[n] * d.f[U].dy[n]),
    term!(1, "dxx u", 2.0, -0.5, true, true, |d, c, n| -c.inv_re * d.f[U].dxx[n]),
    term!(1, "dyy u", 0.0, -1.5, true, true, |d, c, n| -c.inv_re * d.f[U].dyy[n]),
    term!(1, "dx p", 0.0, -1.5, true, true, |d, _, n| d.f[P].dx[n]),
    term!(1, "Lorentz x", 0.0, -1.5, true, true, |d, c, n| {
        let (u, v, b1, b2, e) = (d.f[U].val[n], d.f[V].val[n], d.f[B1].val[n], d.f[B2].val[n], d.f[E].val[n]);
        -c.lorentz * (b1 * b2 * v - u * b2 * b2 - b2 * e)
    }),
    term!(2, "J dtt v", 1.0, -1.0, false, false, |d, c, n| c.cat_u * d.f[V].dtt[n]),
    term!(2, "dt v", 1.0, -1.0, true, true, |d, _, n| d.f[V].dt[n]),
    term!(2, "u dx v", 1.0, -1.0, true, true, |d, _, n| d.f[U].val[n] * d.f[V].dx[n]),
    term!(2, "v dy v", 1.0, -1.0, true, true, |d, _, n| d.f[V].val[n] * d.f[V].dy[n]),
    term!(2, "dxx v", 3.0, 0.0, true, true, |d, c, n| -c.inv_re * d.f[V].dxx[n]),
    term!(2, "dyy v", 1.0, -1.0, false, true, |d, c, n| -c.inv_re * d.f[V].dyy[n]),
    term!(2, "dy p", -1.0, -2.0, true, true, |d, _, n| d.f[P].dy[n]),
    term!(2, "Lorentz y", -1.0, -2.0, true, true, |d, c, n| {
        let (u, v, b1, b2, e) = (d.f[U].val[n], d.f[V].val[n], d.f[B1].val[n], d.f[B2].val[n], d.f[E].val[n]);
        -c.lorentz * (b2 * b1 * u - b1 * b1 * v + b1 * e)
    }),
    term!(3, "dx u", 0.0, -1.0, true, true, |d, _, n| d.f[U].dx[n]),
    term!(3, "dy v", 0.0, -1.0, true, true, |d, _, n| d.f[V].dy[n]),
    term!(4, "kappa dtt b1", 0.0, -1.5, true, true, |d, c, n| c.cat_b * d.f[B1].dtt[n]),
    term!(4, "dt b1", 0.0, -1.5, true, true, |d, _, n| d.f[B1].dt[n]),
    term!(4, "dxx b1", 2.0, -0.5, true, true, |d, c, n| -c.inv_re_m * d.f[B1].dxx[n]),
    term!(4, "dyy b1", 0.0, -1.5, true, true, |d, c, n| -c.inv_re_m * d.f[B1].dyy[n]),
    term!(4, "b1 dx u", 0.0, -1.5, true, true, |d, _, n| -d.f[B1].val[n] * d.f[U].dx[n]),
    term!(4, "b2 dy u", 0.0, -1.5, true, true, |d, _, n| -d.f[B2].val[n] * d.f[U].dy[n]),
    term!(4, "u dx b1", 0.0, -1.5, true, true, |d, _, n| d.f[U].val[n] * d.f[B1].dx[n]),
    term!(4, "v dy b1", 0.0, -1.5, true, true, |d, _, n| d.f[V].val[n] * d.f[B1].dy[n]),
    term!(5, "kappa dtt b2", 1.0, -1.0, true, true, |d, c, n| c.cat_b * d.f[B2].dtt[n]),
    term!(5, "dt b2", 1.0, -1.0, true, true, |d, _, n| d.f[B2].dt[n]),
    term!(5, "dxx b2", 3.0, 0.0, true, true, |d, c, n| -c.inv_re_m * d.f[B2].dxx[n]),
    term!(5, "dyy b2", 1.0, -1.0, true, true, |d, c, n| -c.inv_re_m * d.f[B2].dyy[n]),
    term!(5, "b1 dx v", 1.0, -1.0, true, true, |d, _, n| -d.f[B1].val[n] * d.f[V].dx[n]),
    term!(5, "b2 dy v", 1.0, -1.0, true, true, |d, _, n| -d.f[B2].val[n] * d.f[V].dy[n]),
    term!(5, "u dx b2", 1.0, -1.0, true, true, |d, _, n| d.f[U].val[n] * d.f[B2].dx[n]),
    term!(5, "v dy b2", 1.0, -1.0, true, true, |d, _, n| d.f[V].val[n] * d.f[B2].dy[n]),
    term!(6, "dt b1", 0.0, -1.5, true, true, |d, _, n| d.f[B1].dt[n]),
    term!(6, "dy e", 0.0, -1.5, true, true, |d, _, n| d.f[E].dy[n]),
    term!(7, "dt b2", 1.0, -1.0, true, true, |d, _, n| d.f[B2].dt[n]),
    term!(7, "dx e", 1.0, -1.0, true, true, |d, _, n| -d.f[E].dx[n]),
    term!(8, "dx b1", 0.0, -1.0, true, true, |d, _, n| d.f[B1].dx[n]),
    term!(8, "dy b2", 0.0, -1.0, true, true, |d, _, n| d.f[B2].dy[n]),
];

/// Power of the small parameter each equation is multiplied by before the
/// limit is taken. For the Hartmann y-momentum equation this is `delta^2`:
/// with `delta` alone the pressure gradient stays at order `delta^{-1}`.
pub fn multiplier_exponent(regime: Regime, eq: u8) -> f64 {
    match (regime, eq) {
        (Regime::Prandtl, 2) => 1.0,
        (Regime::Prandtl, 5 | 7) => -1.0,
        (Regime::Prandtl, _) => 0.0,
        (Regime::Hartmann, 1 | 4 | 6) => 1.5,
        (Regime::Hartmann, 2) => 2.0,
        (Regime::Hartmann, _) => 1.0,
    }
}

fn rms(values: impl Iterator<Item = f64>, len: usize) -> f64 {
    (values.map(|v| v * v).sum::<f64>() / len as f64).sqrt()
}

/// Least-squares slope of `ln y` against `ln x` and the largest absolute
/// deviation from the fitted line. `None` if any `y` is not positive.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 || ys.iter().any(|y| !(*y > 0.0 && y.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let resid = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - my - slope * (x - mx)).abs())
        .fold(0.0, f64::max);
    Some((slope, resid))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub equation: u8,
    pub term: String,
    /// False for terms of the dimensionless system that the scaled display leaves out.
    pub in_display: bool,
    pub claimed: f64,
    pub multiplier: f64,
    /// `None` when the term vanishes for every parameter value.
    pub observed: Option<f64>,
    pub fit_residual: Option<f64>,
    pub norms: Vec<f64>,
}

impl TermRow {
    pub fn deviation(&self) -> Option<f64> {
        self.observed.map(|o| (o - self.claimed).abs())
    }

    /// Exponent after the equation multiplier: 0 for terms of the limit
    /// system, positive for terms that vanish.
    pub fn net_claimed(&self) -> f64 {
        self.claimed + self.multiplier
    }
}

/// A parameter combination that must equal its limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Substitution {
    pub name: String,
    pub target: f64,
    pub values: Vec<f64>,
}

impl Substitution {
    pub fn holds(&self, rel: f64) -> bool {
        self.values
            .iter()
            .all(|v| (v - self.target).abs() <= rel * self.target.abs().max(1e-300))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermOrderTable {
    pub regime: Regime,
    pub small_values: Vec<f64>,
    pub rows: Vec<TermRow>,
    pub substitutions: Vec<Substitution>,
    /// Every term vanished.
    pub degenerate: bool,
}

impl TermOrderTable {
    pub fn max_deviation(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(TermRow::deviation)
            .reduce(f64::max)
    }

    /// Every nonvanishing term within `tol` of its claimed exponent, and
    /// every substitution exact to `1e-12`.
    pub fn within(&self, tol: f64) -> bool {
        !self.degenerate
            && self
                .rows
                .iter()
                .all(|r| r.deviation().is_none_or(|d| d <= tol))
            && self.substitutions.iter().all(|s| s.holds(1e-12))
    }

    /// Decades spanned by the parameter values.
    pub fn decades(&self) -> f64 {
        let lo = self
            .small_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = self.small_values.iter().copied().fold(0.0, f64::max);
        (hi / lo).log10()
    }
}

fn check_small_values(small_values: &[f64]) -> Result<()> {
    if small_values.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 parameter values, got {}",
            small_values.len()
        )));
    }
    for (i, v) in small_values.iter().enumerate() {
        if !(v.is_finite() && *v > 0.0 && *v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "parameter values must lie in (0, 1], got {v}"
            )));
        }
        if small_values[..i].contains(v) {
            return Err(Error::InvalidParameter(format!(
                "repeated parameter value {v}"
            )));
        }
    }
    Ok(())
}

fn substitutions(params: &RescalingParams, small_values: &[f64]) -> Result<Vec<Substitution>> {
    let at: Vec<RescalingParams> = small_values
        .iter()
        .map(|&s| params.at_small(s))
        .collect::<Result<_>>()?;
    let h2 = params.h_limit * params.h_limit;
    let kappa = params.kappa();
    let sub = |name: &str, target: f64, f: &dyn Fn(&RescalingParams, f64) -> f64| Substitution {
        name: name.to_string(),
        target,
        values: at.iter().zip(small_values).map(|(p, &s)| f(p, s)).collect(),
    };
    let mut out = vec![sub("Re_m/Re", params.pr_m, &|p, _| p.re_m() / p.re)];
    match params.regime {
        Regime::Prandtl => {
            out.push(sub("Ha^2 eps^4", h2, &|p, e| p.ha() * p.ha() * e.powi(4)));
            out.push(sub("(U0/c)^2 eps^2", kappa, &|p, e| {
                p.u0_over_c * p.u0_over_c * e * e
            }));
        }
        Regime::Hartmann => {
            if params.h_limit > 0.0 {
                out.push(sub("Ha/(Re H)", 1.0, &|p, _| p.ha() / (p.re * p.h_limit)));
            }
            out.push(sub("Ha^2 delta/Re", h2, &|p, d| p.ha() * p.ha() * d / p.re));
            out.push(sub("Ha H/Re", h2, &|p, _| p.ha() * p.h_limit / p.re));
            out.push(sub("(U0/c)^2", kappa, &|p, _| p.u0_over_c * p.u0_over_c));
        }
    }
    Ok(out)
}

/// Lifts `fields` for each small parameter value, evaluates every term of
/// the dimensionless system and fits its exponent.
pub fn scale_terms<F: ScaledFields + ?Sized>(
    fields: &F,
    params: &RescalingParams,
    small_values: &[f64],
    frame: &Frame,
) -> Result<TermOrderTable> {
    params.validate()?;
    check_small_values(small_values)?;
    let regime = params.regime;
    let mut norms = vec![Vec::with_capacity(small_values.len()); TERMS.len()];
    for &small in small_values {
        let p = params.at_small(small)?;
        let lifted = Lifted {
            fields,
            scaling: Scaling::new(regime, small),
        };
        let d = derivatives(&|t, x, y| lifted.sample(t, x, y), &lifted.scaling, frame)?;
        let c = p.coefficients();
        for (spec, out) in TERMS.iter().zip(norms.iter_mut()) {
            out.push(rms((0..d.len).map(|n| (spec.eval)(&d, &c, n)), d.len));
        }
    }
    let rows: Vec<TermRow> = TERMS
        .iter()
        .zip(norms)
        .map(|(spec, norms)| {
            let fit = loglog_fit(small_values, &norms);
            let (claimed, in_display) = match regime {
                Regime::Prandtl => (spec.prandtl, spec.in_prandtl_display),
                Regime::Hartmann => (spec.hartmann, spec.in_hartmann_display),
            };
            TermRow {
                equation: spec.eq,
                term: spec.name.to_string(),
                in_display,
                claimed,
                multiplier: multiplier_exponent(regime, spec.eq),
                observed: fit.map(|f| f.0),
                fit_residual: fit.map(|f| f.1),
                norms,
            }
        })
        .collect();
    let degenerate = rows.iter().all(|r| r.observed.is_none());
    if degenerate {
        log::warn!("all rescaling terms vanish; the table is degenerate");
    }
    Ok(TermOrderTable {
        regime,
        small_values: small_values.to_vec(),
        rows,
        substitutions: substitutions(params, small_values)?,
        degenerate,
    })
}

pub fn prandtl_scale_terms<F: ScaledFields + ?Sized>(
    fields: &F,
    params: &RescalingParams,
    eps_values: &[f64],
    frame: &Frame,
) -> Result<TermOrderTable> {
    scale_terms(
        fields,
        &RescalingParams {
            regime: Regime::Prandtl,
            ..*params
        },
        eps_values,
        frame,
    )
}

pub fn hartmann_scale_terms<F: ScaledFields + ?Sized>(
    fields: &F,
    params: &RescalingParams,
    delta_values: &[f64],
    frame: &Frame,
) -> Result<TermOrderTable> {
    scale_terms(
        fields,
        &RescalingParams {
            regime: Regime::Hartmann,
            ..*params
        },
        delta_values,
        frame,
    )
}

/// Residuals of the eight equations of the limit system.
fn limit_equations(d: &Derivs, c: &Coefficients, n: usize) -> [f64; 8] {
    let g = |k: usize| &d.f[k];
    let (u, v, b1, b2, e) = (
        g(U).val[n],
        g(V).val[n],
        g(B1).val[n],
        g(B2).val[n],
        g(E).val[n],
    );
    [
        c.cat_u * g(U).dtt[n] + g(U).dt[n] + u * g(U).dx[n] + v * g(U).dy[n] - g(U).dyy[n]
            + g(P).dx[n]
            - c.lorentz * (b1 * b2 * v - u * b2 * b2 - b2 * e),
        g(P).dy[n] - c.lorentz * (b1 * b2 * u - b1 * b1 * v + b1 * e),
        g(U).dx[n] + g(V).dy[n],
        c.cat_b * g(B1).dtt[n] + g(B1).dt[n] + u * g(B1).dx[n] + v * g(B1).dy[n]
            - c.inv_re_m * g(B1).dyy[n]
            - b1 * g(U).dx[n]
            - b2 * g(U).dy[n],
        c.cat_b * g(B2).dtt[n] + g(B2).dt[n] + u * g(B2).dx[n] + v * g(B2).dy[n]
            - c.inv_re_m * g(B2).dyy[n]
            - b1 * g(V).dx[n]
            - b2 * g(V).dy[n],
        g(B1).dt[n] + g(E).dy[n],
        g(B2).dt[n] - g(E).dx[n],
        g(B1).dx[n] + g(B2).dy[n],
    ]
}

/// Per-equation RMS gap between the multiplied full system and the limit
/// system on the same fields.
pub fn limit_gaps<F: ScaledFields + ?Sized>(
    fields: &F,
    params: &RescalingParams,
    small: f64,
    frame: &Frame,
) -> Result<[f64; 8]> {
    params.validate()?;
    let p = params.at_small(small)?;
    let lifted = Lifted {
        fields,
        scaling: Scaling::new(params.regime, small),
    };
    let full = derivatives(&|t, x, y| lifted.sample(t, x, y), &lifted.scaling, frame)?;
    let scaled = derivatives(
        &|t, x, y| fields.sample(t, x, y),
        &Scaling::identity(),
        frame,
    )?;
    let (c, cl) = (p.coefficients(), params.limit_coefficients());
    let mults: Vec<f64> = (1..=8)
        .map(|eq| small.powf(multiplier_exponent(params.regime, eq)))
        .collect();
    let mut sums = [0.0; 8];
    for n in 0..full.len {
        let mut residual = [0.0; 8];
        for spec in TERMS {
            residual[spec.eq as usize - 1] += (spec.eval)(&full, &c, n);
        }
        let limit = limit_equations(&scaled, &cl, n);
        for k in 0..8 {
            sums[k] += (mults[k] * residual[k] - limit[k]).powi(2);
        }
    }
    Ok(sums.map(|s| (s / full.len as f64).sqrt()))
}

/// Root-sum-square of [`limit_gaps`].
pub fn limit_residual<F: ScaledFields + ?Sized>(
    fields: &F,
    params: &RescalingParams,
    small: f64,
    frame: &Frame,
) -> Result<f64> {
    Ok(limit_gaps(fields, params, small, frame)?
        .iter()
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt())
}

/// Largest relative deviation of lift followed by the forward change of
/// variables from the identity, over the frame nodes.
pub fn round_trip_error<F: ScaledFields + ?Sized>(
    fields: &F,
    regime: Regime,
    small: f64,
    frame: &Frame,
) -> Result<f64> {
    let grid = Grid::<f64>::new(frame.n_x, 2.0 * PI, frame.n_y)?;
    let lifted = Lifted {
        fields,
        scaling: Scaling::new(regime, small),
    };
    let mut scale = [0.0f64; 6];
    let mut err = [0.0f64; 6];
    for i in 0..grid.n_x() {
        for j in 0..grid.n_y() {
            let (x, y) = (grid.x(i), grid.y(j));
            let a = fields.sample(frame.t0, x, y);
            let b = lifted.pull_back(frame.t0, x, y);
            for k in 0..6 {
                scale[k] = scale[k].max(a[k].abs());
                err[k] = err[k].max((a[k] - b[k]).abs());
            }
        }
    }
    Ok((0..6)
        .map(|k| {
            if scale[k] > 0.0 {
                err[k] / scale[k]
            } else {
                err[k]
            }
        })
        .fold(0.0, f64::max))
}

/// Mean ratio of the lifted `b1` wall trace to the scaled one.
pub fn b1_trace_ratio<F: ScaledFields + ?Sized>(
    fields: &F,
    regime: Regime,
    small: f64,
    frame: &Frame,
) -> Result<f64> {
    let lifted = Lifted {
        fields,
        scaling: Scaling::new(regime, small),
    };
    let mut ratios = Vec::new();
    for i in 0..frame.n_x {
        let x = 2.0 * PI * i as f64 / frame.n_x as f64;
        let scaled = fields.sample(frame.t0, x, 0.0)[B1];
        if scaled.abs() > 1e-300 {
            let sc = lifted.scaling;
            ratios.push(lifted.sample(sc.t * frame.t0, sc.x * x, 0.0)[B1] / scaled);
        }
    }
    if ratios.is_empty() {
        return Err(Error::InvalidParameter("b1 trace vanishes".into()));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

pub const DEFAULT_SMALL_VALUES: [f64; 4] = [0.2, 0.05, 0.01, 0.002];

/// Both tables plus the identity, trace and limit checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescalingReport {
    pub prandtl: TermOrderTable,
    pub hartmann: TermOrderTable,
    pub round_trip: f64,
    /// `(delta, lifted b1 trace / b1 trace)`.
    pub hartmann_trace: Vec<(f64, f64)>,
    pub prandtl_gaps: Vec<f64>,
    pub hartmann_gaps: Vec<f64>,
    pub prandtl_gap_order: Option<f64>,
    pub hartmann_gap_order: Option<f64>,
}

impl RescalingReport {
    pub fn passes(&self, tol: f64) -> bool {
        let trace_ok = self
            .hartmann_trace
            .iter()
            .all(|(d, r)| (r * d.sqrt() - 1.0).abs() < 1e-12);
        let gap_ok = |o: Option<f64>| o.is_some_and(|o| o >= 0.9);
        self.prandtl.within(tol)
            && self.hartmann.within(tol)
            && self.round_trip <= 1e-12
            && trace_ok
            && gap_ok(self.prandtl_gap_order)
            && gap_ok(self.hartmann_gap_order)
    }
}

/// Runs both regimes on [`PolySinFields`] for the exponent tables and on
/// the manufactured solution for the limit gaps.
pub fn run_verification(
    params: &RescalingParams,
    small_values: &[f64],
    frame: &Frame,
) -> Result<RescalingReport> {
    let fields = PolySinFields::default();
    let mms = ManufacturedFields { h: params.h_limit };
    let pp = RescalingParams {
        regime: Regime::Prandtl,
        ..*params
    };
    let hp = RescalingParams {
        regime: Regime::Hartmann,
        ..*params
    };
    let prandtl = scale_terms(&fields, &pp, small_values, frame)?;
    let hartmann = scale_terms(&fields, &hp, small_values, frame)?;
    let mut round_trip = 0.0f64;
    let mut hartmann_trace = Vec::new();
    let mut prandtl_gaps = Vec::new();
    let mut hartmann_gaps = Vec::new();
    for &s in small_values {
        for regime in [Regime::Prandtl, Regime::Hartmann] {
            round_trip = round_trip.max(round_trip_error(&fields, regime, s, frame)?);
        }
        hartmann_trace.push((s, b1_trace_ratio(&fields, Regime::Hartmann, s, frame)?));
        prandtl_gaps.push(limit_residual(&mms, &pp, s, frame)?);
        hartmann_gaps.push(limit_residual(&mms, &hp, s, frame)?);
    }
    let prandtl_gap_order = loglog_fit(small_values, &prandtl_gaps).map(|f| f.0);
    let hartmann_gap_order = loglog_fit(small_values, &hartmann_gaps).map(|f| f.0);
    Ok(RescalingReport {
        prandtl,
        hartmann,
        round_trip,
        hartmann_trace,
        prandtl_gaps,
        hartmann_gaps,
        prandtl_gap_order,
        hartmann_gap_order,
    })
}
