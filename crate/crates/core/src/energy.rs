//! Analytic-norm energy machinery: the time-dependent weight, the energy and
//! dissipation functionals, the explicit constants, and the checks built on
//! them (smallness of the data, exponential decay, master inequality).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Parameters, State};
use crate::scalar::Scalar;
use crate::spectral::SpectralField;

/// Damping rates and the weight `eta(t) = tau0 (1 - exp(-lam t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams<T> {
    pub lam: T,
    pub r: T,
    pub m_small: T,
    pub m_big: T,
    pub tau0: T,
}

impl<T: Scalar> EnergyParams<T> {
    pub fn new(params: &Parameters<T>) -> Self {
        let one = T::one();
        let ratio = params.magnetic_inertia();
        let m_small = one.min(params.j).min(ratio);
        let m_big = one.max(params.j).max(ratio);
        let r = one / (T::lit(4.0) * m_big);
        EnergyParams {
            lam: r / T::lit(4.0),
            r,
            m_small,
            m_big,
            tau0: params.tau0,
        }
    }

    pub fn eta(&self, t: T) -> T {
        self.tau0 * (T::one() - (-self.lam * t).exp())
    }

    pub fn eta_p(&self, t: T) -> T {
        self.lam * self.tau0 * (-self.lam * t).exp()
    }

    pub fn eta_pp(&self, t: T) -> T {
        -self.lam * self.lam * self.tau0 * (-self.lam * t).exp()
    }

    /// Remaining radius `tau0 - eta(t) = tau0 exp(-lam t)`.
    pub fn tau(&self, t: T) -> T {
        self.tau0 * (-self.lam * t).exp()
    }
}

/// Explicit constants of the global existence and decay statement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable<T> {
    pub d_s: T,
    pub eps_s: T,
    pub delta_small: T,
    pub c_decay: T,
}

pub fn constants<T: Scalar>(params: &Parameters<T>) -> ConstantsTable<T> {
    let ep = EnergyParams::new(params);
    let one = T::one();
    let two = T::lit(2.0);
    let s = params.s;
    let bracket = one + (s - two) / (s - one).sqrt();
    let d_s = two.powf(two * s + T::lit(6.0)) / (s - two) * bracket;
    let eps_s = (s - two) / two.powf(two * s + T::lit(14.0)) / bracket;
    let pr_max = params.pr_m.max(one / params.pr_m);
    let tau_max = params.tau0.max(one / params.tau0);
    let tau_min = params.tau0.min(one / params.tau0);
    let (m, big) = (ep.m_small, ep.m_big);
    let c_decay = T::lit(64.0) * (big / m).powi(3) * pr_max * tau_max * tau_max;
    let three_halves = T::lit(1.5);
    let delta_small = m.powf(three_halves) / big.powf(T::lit(2.5)) * tau_min.powf(three_halves)
        / (one.max(params.h * params.h) * pr_max.sqrt())
        * eps_s;
    ConstantsTable {
        d_s,
        eps_s,
        delta_small,
        c_decay,
    }
}

/// `exp((tau0 - eta(t)) (1 + |D_x|)) f`.
pub fn eta_weight<T: Scalar>(
    f: &SpectralField<T>,
    t: T,
    ep: &EnergyParams<T>,
) -> Result<SpectralField<T>> {
    f.apply_multiplier(ep.tau(t))
}

/// Which norm the `D_{s+1}` functional is evaluated in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DsOneReading {
    /// `3/4 |u_eta|^2 + 3/4 |b_eta|^2` in `H^{s+1,0}`, as the energy
    /// identities produce it.
    #[default]
    Derivation,
    /// `3/4 |u_eta|^2 + 3/4 |(dt b1)_eta|^2` in `H^{s+1/2,0}`, as displayed
    /// with the functionals.
    Printed,
}

/// Weighted fields at one time instant.
struct Weighted<T: Scalar> {
    u: SpectralField<T>,
    b: SpectralField<T>,
    ut: SpectralField<T>,
    bt: SpectralField<T>,
    uy: SpectralField<T>,
    by: SpectralField<T>,
}

impl<T: Scalar> Weighted<T> {
    fn new(state: &State<T>, tau: T) -> Result<Self> {
        let u = state.u.apply_multiplier(tau)?;
        let b = state.b1.apply_multiplier(tau)?;
        Ok(Weighted {
            uy: u.dy(),
            by: b.dy(),
            ut: state.ut.apply_multiplier(tau)?,
            bt: state.b1t.apply_multiplier(tau)?,
            u,
            b,
        })
    }
}

/// `d/dt (f_eta) = (dt f)_eta - eta' (1 + |D_x|) f_eta`.
fn chain_rule<T: Scalar>(
    ft: &SpectralField<T>,
    f: &SpectralField<T>,
    eta_p: T,
) -> SpectralField<T> {
    let grid = f.grid().clone();
    let n_y = grid.n_y();
    SpectralField::from_modes(&grid, |idx, j| {
        let w = eta_p * (T::one() + grid.xi(idx).abs());
        ft.coeffs()[idx * n_y + j] - f.coeffs()[idx * n_y + j] * w
    })
}

/// Values of all functionals at a single time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Functionals<T> {
    pub es: T,
    pub es_half: T,
    pub es_one: T,
    pub ds0: T,
    pub ds_half: T,
    pub ds_one: T,
    pub ds_one_printed: T,
    pub ds_threehalf: T,
}

impl<T: Scalar> Functionals<T> {
    pub fn ds_one_for(&self, reading: DsOneReading) -> T {
        match reading {
            DsOneReading::Derivation => self.ds_one,
            DsOneReading::Printed => self.ds_one_printed,
        }
    }
}

fn functionals_of<T: Scalar>(w: &Weighted<T>, params: &Parameters<T>, eta_p: T) -> Functionals<T> {
    let s = params.s;
    let half = T::lit(0.5);
    let (s_half, s_one, s_3half) = (s + half, s + T::one(), s + T::lit(1.5));
    let j = params.j;
    let kp = params.magnetic_inertia();
    let pr = params.pr_m;

    let es = j * j * half * w.ut.norm_hs0_sq(s)
        + half * w.ut.scale(j).axpy(T::one(), &w.u).norm_hs0_sq(s)
        + j * w.uy.norm_hs0_sq(s)
        + kp * kp * half * w.bt.norm_hs0_sq(s)
        + half * w.bt.scale(kp).axpy(T::one(), &w.b).norm_hs0_sq(s)
        + params.kappa / (pr * pr) * w.by.norm_hs0_sq(s);
    let es_half = half * (w.u.norm_hs0_sq(s_half) + w.b.norm_hs0_sq(s_half));
    let es_one = w.u.norm_hs0_sq(s_one) + w.b.norm_hs0_sq(s_one);

    let ds0 = half
        * (w.uy.norm_hs0_sq(s) + w.ut.norm_hs0_sq(s) + w.by.norm_hs0_sq(s) + w.bt.norm_hs0_sq(s));
    let block = |ft: &SpectralField<T>, f: &SpectralField<T>, fy: &SpectralField<T>| {
        half * ft.norm_hs0_sq(s_half)
            + half * (ft + f).norm_hs0_sq(s_half)
            + T::lit(2.0) * fy.norm_hs0_sq(s_half)
            + chain_rule(ft, f, eta_p).norm_hs0_sq(s_half)
            + T::lit(0.375) * f.norm_hs0_sq(s_half)
    };
    let ds_half = block(&w.ut, &w.u, &w.uy) + block(&w.bt, &w.b, &w.by);
    let q = T::lit(0.75);
    let ds_one = q * (w.u.norm_hs0_sq(s_one) + w.b.norm_hs0_sq(s_one));
    let ds_one_printed = q * (w.u.norm_hs0_sq(s_half) + w.bt.norm_hs0_sq(s_half));
    let ds_threehalf = w.u.norm_hs0_sq(s_3half) + w.b.norm_hs0_sq(s_3half);
    Functionals {
        es,
        es_half,
        es_one,
        ds0,
        ds_half,
        ds_one,
        ds_one_printed,
        ds_threehalf,
    }
}

/// Energy and dissipation functionals of `state` at its own time `state.t`.
pub fn compute_functionals<T: Scalar>(
    state: &State<T>,
    params: &Parameters<T>,
    ep: &EnergyParams<T>,
) -> Result<Functionals<T>> {
    let w = Weighted::new(state, ep.tau(state.t))?;
    Ok(functionals_of(&w, params, ep.eta_p(state.t)))
}

pub fn compute_es<T: Scalar>(
    state: &State<T>,
    params: &Parameters<T>,
    ep: &EnergyParams<T>,
) -> Result<T> {
    Ok(compute_functionals(state, params, ep)?.es)
}

/// `(D_s, D_{s+1/2}, D_{s+1}, D_{s+3/2})` with the default `D_{s+1}` reading.
pub fn compute_d_suite<T: Scalar>(
    state: &State<T>,
    params: &Parameters<T>,
    ep: &EnergyParams<T>,
) -> Result<(T, T, T, T)> {
    let f = compute_functionals(state, params, ep)?;
    Ok((f.ds0, f.ds_half, f.ds_one, f.ds_threehalf))
}

/// Sum of the six squared analytic norms with radius `tau`:
/// `|u|_{s+1}^2 + |dt u|_s^2 + |dy u|_s^2` plus the magnetic analogues.
pub fn analytic_norm_sq<T: Scalar>(state: &State<T>, tau: T, s: T) -> Result<T> {
    let w = Weighted::new(state, tau)?;
    let s1 = s + T::one();
    Ok(w.u.norm_hs0_sq(s1)
        + w.ut.norm_hs0_sq(s)
        + w.uy.norm_hs0_sq(s)
        + w.b.norm_hs0_sq(s1)
        + w.bt.norm_hs0_sq(s)
        + w.by.norm_hs0_sq(s))
}

/// Everything the trajectory checks need from one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub t: T,
    #[serde(flatten)]
    pub functionals: Functionals<T>,
    pub tau_t: T,
    pub tau_empirical: Option<T>,
    /// Left-hand side of the decay bound at this time.
    pub analytic_norm_sq: T,
}

pub fn report<T: Scalar>(
    state: &State<T>,
    params: &Parameters<T>,
    ep: &EnergyParams<T>,
) -> Result<EnergyReport<T>> {
    let tau_t = ep.tau(state.t);
    let w = Weighted::new(state, tau_t)?;
    let functionals = functionals_of(&w, params, ep.eta_p(state.t));
    let s = params.s;
    let s1 = s + T::one();
    let analytic_norm_sq = w.u.norm_hs0_sq(s1)
        + w.ut.norm_hs0_sq(s)
        + w.uy.norm_hs0_sq(s)
        + w.b.norm_hs0_sq(s1)
        + w.bt.norm_hs0_sq(s)
        + w.by.norm_hs0_sq(s);
    Ok(EnergyReport {
        t: state.t,
        functionals,
        tau_t,
        tau_empirical: empirical_radius(&state.u),
        analytic_norm_sq,
    })
}

/// Unweighted-sum left-hand side of the smallness condition: six analytic
/// norms of the data with radius `tau0`.
pub fn smallness_lhs<T: Scalar>(initial: &State<T>, params: &Parameters<T>) -> Result<T> {
    let w = Weighted::new(initial, params.tau0)?;
    let s = params.s;
    let s1 = s + T::one();
    Ok(w.u.norm_hs0(s1)
        + w.uy.norm_hs0(s)
        + w.ut.norm_hs0(s)
        + w.b.norm_hs0(s1)
        + w.by.norm_hs0(s)
        + w.bt.norm_hs0(s))
}

/// `(passes, delta_small - lhs)`.
pub fn check_smallness<T: Scalar>(
    initial: &State<T>,
    params: &Parameters<T>,
    ct: &ConstantsTable<T>,
) -> Result<(bool, T)> {
    let margin = ct.delta_small - smallness_lhs(initial, params)?;
    Ok((margin >= T::zero(), margin))
}

/// Tolerance applied to inequality verdicts.
pub fn verdict_tolerance<T: Scalar>(lhs: T, rhs: T, rel: T) -> T {
    rel * lhs.abs().max(rhs.abs())
}

/// Per-sample outcome of a trajectory inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalitySeries<T> {
    pub t: Vec<T>,
    pub lhs: Vec<T>,
    pub rhs: Vec<T>,
    pub slack: Vec<T>,
}

impl<T: Scalar> InequalitySeries<T> {
    fn with_capacity(n: usize) -> Self {
        InequalitySeries {
            t: Vec::with_capacity(n),
            lhs: Vec::with_capacity(n),
            rhs: Vec::with_capacity(n),
            slack: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: T, lhs: T, rhs: T) {
        self.t.push(t);
        self.lhs.push(lhs);
        self.rhs.push(rhs);
        self.slack.push(rhs - lhs);
    }

    /// Every sample satisfies `slack >= -rel * max(|lhs|, |rhs|)`.
    pub fn passes(&self, rel: T) -> bool {
        self.per_sample(rel).into_iter().all(|ok| ok)
    }

    pub fn per_sample(&self, rel: T) -> Vec<bool> {
        (0..self.t.len())
            .map(|i| self.slack[i] >= -verdict_tolerance(self.lhs[i], self.rhs[i], rel))
            .collect()
    }

    /// Smallest slack normalized by the larger side (0 for zero samples).
    pub fn worst_relative_slack(&self) -> T {
        (0..self.t.len())
            .map(|i| {
                let scale = self.lhs[i].abs().max(self.rhs[i].abs());
                if scale > T::zero() {
                    self.slack[i] / scale
                } else {
                    T::zero()
                }
            })
            .fold(T::infinity(), T::min)
    }

    pub fn worst_slack(&self) -> T {
        self.slack.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Decay bound: six squared analytic norms at radius `tau(t)` against
/// `C_decay` times their initial value with radius `tau0`, damped by
/// `exp(-t / (8 M))`. The first report must be the initial sample.
pub fn check_decay<T: Scalar>(
    reports: &[EnergyReport<T>],
    params: &Parameters<T>,
    ct: &ConstantsTable<T>,
) -> InequalitySeries<T> {
    let ep = EnergyParams::new(params);
    let mut out = InequalitySeries::with_capacity(reports.len());
    let Some(first) = reports.first() else {
        return out;
    };
    let initial = first.analytic_norm_sq;
    let rate = T::one() / (T::lit(8.0) * ep.m_big);
    for r in reports {
        let rhs = ct.c_decay * initial * (-(r.t - first.t) * rate).exp();
        out.push(r.t, r.analytic_norm_sq, rhs);
    }
    out
}

/// Master inequality result with the half-sampling quadrature advisory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterReport<T> {
    pub reading: DsOneReading,
    pub series: InequalitySeries<T>,
    /// Largest relative change of the time integrals at the final sample
    /// when every second sample is dropped; `None` with fewer than 3 samples.
    pub richardson_relative_change: Option<T>,
}

#[derive(Clone, Copy)]
struct Integrands<T> {
    dissipation: T,
    rest: T,
    bilinear_weighted: T,
    bilinear: T,
    trilinear: T,
}

fn integrands<T: Scalar>(
    r: &EnergyReport<T>,
    params: &Parameters<T>,
    ep: &EnergyParams<T>,
    reading: DsOneReading,
) -> Integrands<T> {
    let f = &r.functionals;
    let (t, m) = (r.t, ep.m_small);
    let (e1, e2) = (ep.eta_p(t), ep.eta_pp(t));
    let w = (ep.r * t).exp();
    let kp = params.magnetic_inertia();
    let dissipation = w
        * (f.ds0
            + e1 * f.ds_half
            + m * e1 * e1 * f.ds_one_for(reading)
            + m * m * e1 * e1 * e1 * f.ds_threehalf);
    let rest = w
        * ((params.j + kp) * e2 * f.es_half
            + T::lit(2.0) * (params.j * params.j + kp * kp) * e1 * e2 * f.es_one);
    Integrands {
        dissipation,
        rest,
        bilinear_weighted: w * f.es.sqrt() * f.ds_half,
        bilinear: w * f.es * f.ds_half,
        trilinear: w * f.es * (f.ds_half * f.ds_threehalf).sqrt(),
    }
}

fn cumulative_trapezoid<T: Scalar>(t: &[T], y: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = T::zero();
    for i in 0..t.len() {
        if i > 0 {
            acc = acc + (t[i] - t[i - 1]) * (y[i] + y[i - 1]) / T::lit(2.0);
        }
        out.push(acc);
    }
    out
}

/// Evaluates both sides of the master energy inequality at every sample,
/// with the time integrals accumulated by the composite trapezoid rule over
/// the report times.
pub fn check_master_inequality<T: Scalar>(
    reports: &[EnergyReport<T>],
    params: &Parameters<T>,
    ep: &EnergyParams<T>,
    ct: &ConstantsTable<T>,
    reading: DsOneReading,
) -> MasterReport<T> {
    let n = reports.len();
    let mut series = InequalitySeries::with_capacity(n);
    if n == 0 {
        return MasterReport {
            reading,
            series,
            richardson_relative_change: None,
        };
    }
    let times: Vec<T> = reports.iter().map(|r| r.t).collect();
    let ints: Vec<Integrands<T>> = reports
        .iter()
        .map(|r| integrands(r, params, ep, reading))
        .collect();
    let integrate = |g: fn(&Integrands<T>) -> T| {
        let y: Vec<T> = ints.iter().map(g).collect();
        cumulative_trapezoid(&times, &y)
    };
    let diss = integrate(|i| i.dissipation);
    let rest = integrate(|i| i.rest);
    let bw = integrate(|i| i.bilinear_weighted);
    let bl = integrate(|i| i.bilinear);
    let tl = integrate(|i| i.trilinear);

    let first = &reports[0].functionals;
    let (m, big) = (ep.m_small, ep.m_big);
    let t0 = times[0];
    let e0 = ep.eta_p(t0);
    let initial = first.es + big * e0 * first.es_half + big * big * e0 * e0 * first.es_one;
    let k = (T::one() / params.j.sqrt()).max(params.pr_m / params.kappa.sqrt());
    let coupling = ct.d_s * T::one().max(params.h * params.h);
    for (i, r) in reports.iter().enumerate() {
        let f = &r.functionals;
        let e1 = ep.eta_p(r.t);
        let energy = (ep.r * r.t).exp() * (f.es + m * e1 * f.es_half + m * m * e1 * e1 * f.es_one);
        let lhs = energy + diss[i] - rest[i];
        let rhs = initial + coupling * (k * bw[i] + bl[i] + k * tl[i]);
        series.push(r.t, lhs, rhs);
    }

    let richardson_relative_change = (n >= 3).then(|| {
        let coarse: Vec<usize> = (0..n).step_by(2).collect();
        let last = *coarse.last().expect("nonempty");
        let ct_: Vec<T> = coarse.iter().map(|&i| times[i]).collect();
        let mut worst = T::zero();
        for (fine, g) in [
            (
                &diss,
                (|i: &Integrands<T>| i.dissipation) as fn(&Integrands<T>) -> T,
            ),
            (&rest, |i| i.rest),
            (&bw, |i| i.bilinear_weighted),
        ] {
            let y: Vec<T> = coarse.iter().map(|&i| g(&ints[i])).collect();
            let c = cumulative_trapezoid(&ct_, &y);
            let scale = fine[last].abs();
            if scale > T::zero() {
                worst = worst.max((c[c.len() - 1] - fine[last]).abs() / scale);
            }
        }
        worst
    });
    if let Some(change) = richardson_relative_change {
        if change > T::lit(0.01) {
            log::warn!("time quadrature of the dissipation integrals changes by {change} under half sampling");
        }
    }
    MasterReport {
        reading,
        series,
        richardson_relative_change,
    }
}

/// Relative amplitude floor below which modes are ignored by the radius fit.
pub const RADIUS_FLOOR: f64 = 1e-13;
/// Minimum number of modes the radius fit needs.
pub const RADIUS_MIN_MODES: usize = 8;

/// Radius of analyticity estimated from the exponential decay of the
/// spectrum: least-squares slope of `-log max_y |c_k|` against `|xi_k|`
/// over the 2/3-resolved band, skipping modes below `RADIUS_FLOOR` times the
/// largest amplitude. `None` when fewer than `RADIUS_MIN_MODES` modes remain
/// or the fit is degenerate.
pub fn empirical_radius<T: Scalar>(f: &SpectralField<T>) -> Option<T> {
    let grid = f.grid();
    let amps: Vec<(T, T)> = (0..grid.n_x())
        .filter(|&idx| grid.is_resolved(idx))
        .map(|idx| {
            let a = f.line(idx).iter().map(|c| c.norm()).fold(T::zero(), T::max);
            (grid.xi(idx).abs(), a)
        })
        .collect();
    let peak = amps.iter().map(|p| p.1).fold(T::zero(), T::max);
    if !(peak > T::zero()) || !peak.is_finite() {
        return None;
    }
    let floor = T::lit(RADIUS_FLOOR) * peak;
    let pts: Vec<(T, T)> = amps
        .into_iter()
        .filter(|p| p.1 > floor)
        .map(|(x, a)| (x, -a.ln()))
        .collect();
    if pts.len() < RADIUS_MIN_MODES {
        return None;
    }
    let n = T::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > T::zero()) {
        return None;
    }
    Some(sxy / sxx)
}
