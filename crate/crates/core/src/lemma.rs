//! Numerical checks of the product law in analytic anisotropic spaces and
//! of the auxiliary inequalities behind the energy estimate.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{compute_functionals, EnergyParams};
use crate::error::{Error, Result};
use crate::model::{Parameters, State};
use crate::presets::{random_analytic_field, Walls};
use crate::scalar::Scalar;
use crate::spectral::{Grid, SpectralField};

/// Inputs of one product-law evaluation.
#[derive(Clone, Debug)]
pub struct LemmaCase<T: Scalar> {
    /// Must vanish on the bottom wall.
    pub f: SpectralField<T>,
    pub g: SpectralField<T>,
    pub sigma1: T,
    pub sigma2: T,
    pub tau: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductLawOutcome<T> {
    pub lhs: T,
    pub rhs: T,
    /// `lhs / rhs`, defined as 0 when both vanish.
    pub ratio: T,
}

/// Exact product of two band-limited fields: both factors are zero padded
/// to `2 n_x` so the full product spectrum is represented without aliasing.
pub fn padded_product<T: Scalar>(
    f: &SpectralField<T>,
    g: &SpectralField<T>,
) -> Result<SpectralField<T>> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let fine = Grid::with_y_extent(2 * grid.n_x(), grid.l_x(), grid.n_y(), grid.y_extent())?;
    let a = f.resample_x(&fine)?.transform_backward();
    let b = g.resample_x(&fine)?.transform_backward();
    let prod: Vec<T> = a.iter().zip(&b).map(|(x, y)| *x * *y).collect();
    SpectralField::transform_forward(&fine, &prod)
}

/// Compares `|(f g)_eta|_{sigma1}` with
/// `2^{sigma1 - 1/2} / sqrt(sigma2 - 1/2) (|dy f_eta|_{sigma1} |g_eta|_{sigma2}
///  + |dy f_eta|_{sigma2} |g_eta|_{sigma1})`, all in `H^{sigma,0}`.
pub fn product_law_check<T: Scalar>(case: &LemmaCase<T>) -> Result<ProductLawOutcome<T>> {
    let half = T::lit(0.5);
    if !(case.sigma2 > half) || case.sigma2 > case.sigma1 {
        return Err(Error::InvalidParameter(format!(
            "need 1/2 < sigma2 <= sigma1, got sigma1 = {}, sigma2 = {}",
            case.sigma1, case.sigma2
        )));
    }
    if case.tau < T::zero() {
        return Err(Error::NegativeRadius(case.tau.as_f64()));
    }
    let trace = case.f.max_abs_on_row(0);
    if trace > T::lit(1e-12) * case.f.max_abs().max(T::one()) {
        return Err(Error::TraceViolation(trace.as_f64()));
    }
    let lhs = padded_product(&case.f, &case.g)?
        .apply_multiplier(case.tau)?
        .norm_hs0(case.sigma1);
    let fy = case.f.apply_multiplier(case.tau)?.dy();
    let g = case.g.apply_multiplier(case.tau)?;
    let c = T::lit(2.0).powf(case.sigma1 - half) / (case.sigma2 - half).sqrt();
    let rhs = c
        * (fy.norm_hs0(case.sigma1) * g.norm_hs0(case.sigma2)
            + fy.norm_hs0(case.sigma2) * g.norm_hs0(case.sigma1));
    let ratio = if rhs > T::zero() {
        lhs / rhs
    } else if lhs == T::zero() {
        T::zero()
    } else {
        T::infinity()
    };
    Ok(ProductLawOutcome { lhs, rhs, ratio })
}

/// Largest value of `(1+|xi|)^{2s} / (2^{2s-1} [(1+|xi-eta|)^{2s} + (1+|eta|)^{2s}])`
/// over the product grid.
pub fn triangle_power_check<T: Scalar>(sigma1: T, xi_grid: &[T], eta_grid: &[T]) -> Result<T> {
    if !(sigma1 > T::lit(0.5)) {
        return Err(Error::InvalidParameter(format!(
            "sigma1 must exceed 1/2, got {sigma1}"
        )));
    }
    let two_s = T::lit(2.0) * sigma1;
    let c = T::lit(2.0).powf(two_s - T::one());
    let w = |x: T| (T::one() + x.abs()).powf(two_s);
    let mut worst = T::zero();
    for &xi in xi_grid {
        for &eta in eta_grid {
            worst = worst.max(w(xi) / (c * (w(xi - eta) + w(eta))));
        }
    }
    Ok(worst)
}

/// `(|f|_{H^{s,0}}, |dy f|_{H^{s,0}})` for `f` vanishing at `y = 0`.
pub fn poincare_check<T: Scalar>(f: &SpectralField<T>, s: T) -> Result<(T, T)> {
    let trace = f.max_abs_on_row(0);
    if trace > T::lit(1e-12) * f.max_abs().max(T::one()) {
        return Err(Error::TraceViolation(trace.as_f64()));
    }
    Ok((f.norm_hs0(s), f.dy().norm_hs0(s)))
}

/// The four norm-by-functional bounds at one state, as `(lhs, rhs)` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBoundReport<T> {
    pub u_by_es: (T, T),
    pub b_by_es: (T, T),
    pub u_by_ds_half: (T, T),
    pub b_by_ds_half: (T, T),
}

impl<T: Scalar> EnergyBoundReport<T> {
    pub fn pairs(&self) -> [(T, T); 4] {
        [
            self.u_by_es,
            self.b_by_es,
            self.u_by_ds_half,
            self.b_by_ds_half,
        ]
    }

    pub fn passes(&self) -> bool {
        self.pairs()
            .iter()
            .all(|(l, r)| *l <= *r * (T::one() + T::lit(1e-12)))
    }
}

/// `|u_eta|_s, |b_eta|_s <= 2 sqrt(E_s)` and
/// `|u_eta|_{s+1/2}, |b_eta|_{s+1/2} <= 2 sqrt(D_{s+1/2})`.
pub fn energy_bound_check<T: Scalar>(
    state: &State<T>,
    params: &Parameters<T>,
    ep: &EnergyParams<T>,
) -> Result<EnergyBoundReport<T>> {
    let f = compute_functionals(state, params, ep)?;
    let tau = ep.tau(state.t);
    let u = state.u.apply_multiplier(tau)?;
    let b = state.b1.apply_multiplier(tau)?;
    let s = params.s;
    let sh = s + T::lit(0.5);
    let two = T::lit(2.0);
    Ok(EnergyBoundReport {
        u_by_es: (u.norm_hs0(s), two * f.es.sqrt()),
        b_by_es: (b.norm_hs0(s), two * f.es.sqrt()),
        u_by_ds_half: (u.norm_hs0(sh), two * f.ds_half.sqrt()),
        b_by_ds_half: (b.norm_hs0(sh), two * f.ds_half.sqrt()),
    })
}

/// One line of the randomized product-law log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub seed: u64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub tau: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Outcome of the randomized and exhaustive suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub seed: u64,
    pub cases: Vec<CaseRecord>,
    pub worst_product_ratio: f64,
    /// `(sigma1, worst ratio)` for the triangle-power grid.
    pub triangle: Vec<(f64, f64)>,
}

impl LemmaSuiteReport {
    pub fn product_law_holds(&self, tol: f64) -> bool {
        self.cases.iter().all(|c| c.ratio <= 1.0 + tol)
    }

    pub fn triangle_holds(&self) -> bool {
        self.triangle.iter().all(|(_, w)| *w <= 1.0)
    }
}

/// Random product-law case number `i` of a suite: `f = y * smooth` so its
/// trace vanishes exactly, `g` unconstrained, `1/2 < 0.6 < sigma2 <= sigma1
/// <= 4`, `tau` in `[0, 1]`.
pub fn random_case<T: Scalar>(grid: &Arc<Grid<T>>, case_seed: u64) -> LemmaCase<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    let rf = T::lit(rng.gen_range(0.2..1.5));
    let rg = T::lit(rng.gen_range(0.2..1.5));
    let f = random_analytic_field(grid, &mut rng, rf, Walls::Bottom);
    let g = random_analytic_field(grid, &mut rng, rg, Walls::Neither);
    let sigma1: f64 = rng.gen_range(0.6..4.0);
    let sigma2: f64 = rng.gen_range(0.6..=sigma1);
    let tau: f64 = rng.gen_range(0.0..=1.0);
    LemmaCase {
        f,
        g,
        sigma1: T::lit(sigma1),
        sigma2: T::lit(sigma2),
        tau: T::lit(tau),
    }
}

pub const TRIANGLE_SIGMAS: [f64; 4] = [0.6, 1.0, 2.5, 3.5];

/// Runs `n_cases` random product-law cases (seeds `seed, seed + 1, ...`)
/// and the triangle-power grid `xi, eta in {-10, ..., 10}`.
pub fn run_suite(seed: u64, n_cases: usize, n_x: usize, n_y: usize) -> Result<LemmaSuiteReport> {
    let grid = Grid::<f64>::new(n_x, 2.0 * std::f64::consts::PI, n_y)?;
    let mut cases = Vec::with_capacity(n_cases);
    let mut worst = 0.0f64;
    for i in 0..n_cases {
        let case_seed = seed.wrapping_add(i as u64);
        let case = random_case(&grid, case_seed);
        let out = product_law_check(&case)?;
        worst = worst.max(out.ratio);
        cases.push(CaseRecord {
            seed: case_seed,
            sigma1: case.sigma1,
            sigma2: case.sigma2,
            tau: case.tau,
            lhs: out.lhs,
            rhs: out.rhs,
            ratio: out.ratio,
        });
    }
    let pts: Vec<f64> = (-10..=10).map(f64::from).collect();
    let triangle = TRIANGLE_SIGMAS
        .iter()
        .map(|&s| triangle_power_check(s, &pts, &pts).map(|w| (s, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LemmaSuiteReport {
        seed,
        cases,
        worst_product_ratio: worst,
        triangle,
    })
}
