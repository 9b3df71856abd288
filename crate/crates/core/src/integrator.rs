//! IMEX time stepping of the reduced system.
//!
//! Each equation has the second-order form `mu w_t = -w + nu D2 u + N`,
//! `u_t = w`, with `(mu, nu) = (J, 1)` for the velocity and
//! `(kappa / Pr_m, 1 / Pr_m)` for the magnetic field. Damping and
//! wall-normal diffusion are implicit; the nonlinear, pressure and forcing
//! terms `N` are explicit. Every Fourier mode shares the same real
//! tridiagonal matrix, which is factored once.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{self, EnergyParams, EnergyReport};
use crate::error::{Error, Result};
use crate::model::{self, Parameters, State};
use crate::scalar::Scalar;
use crate::spectral::{Grid, SpectralField, TridiagonalFactor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Crank-Nicolson on the linear part, second-order Adams-Bashforth on
    /// the explicit part (explicit Euler on the first step).
    #[default]
    ImexCnAb2,
    /// Backward Euler on the linear part, forward Euler on the explicit part.
    ImexEuler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig<T> {
    pub dt: T,
    pub t_end: T,
    #[serde(default)]
    pub scheme: Scheme,
    /// Adds the manufactured-solution source terms.
    #[serde(default)]
    pub mms_forcing: bool,
    /// A step whose L2 norm of any component exceeds this aborts the run.
    pub max_norm_guard: T,
    /// Keep a full state every this many steps (the initial and final states
    /// are always kept). Defaults to the monitoring interval.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        IntegratorConfig {
            dt,
            t_end,
            scheme: Scheme::ImexCnAb2,
            mms_forcing: false,
            max_norm_guard: T::lit(1e6),
            snapshot_every: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if !(self.max_norm_guard > T::zero()) {
            return Err(Error::InvalidParameter(
                "max_norm_guard must be positive".into(),
            ));
        }
        if self.snapshot_every == Some(0) {
            return Err(Error::InvalidParameter(
                "snapshot_every must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of steps and the step actually used so that the run lands on
    /// `t_end` exactly.
    pub fn step_plan(&self) -> (usize, T) {
        if self.t_end == T::zero() {
            return (0, self.dt);
        }
        let ratio = (self.t_end / self.dt).to_f64().unwrap_or(0.0);
        let n = ((ratio * (1.0 - 1e-12)).ceil() as usize).max(1);
        (n, self.t_end / T::from_count(n))
    }
}

/// Additional source terms in the velocity and magnetic equations, added to
/// the explicit part before division by the inertia.
pub trait Forcing<T: Scalar>: Send + Sync {
    fn evaluate(&self, grid: &Arc<Grid<T>>, t: T) -> (SpectralField<T>, SpectralField<T>);
}

/// Advisory step bound: hyperbolic time scales and an advective CFL limit.
pub fn dt_stability<T: Scalar>(params: &Parameters<T>, state: &State<T>) -> T {
    let half = T::lit(0.5);
    let u_inf = state
        .u
        .transform_backward()
        .iter()
        .fold(T::zero(), |m, x| m.max(x.abs()));
    let adv = if u_inf > T::zero() {
        half / (u_inf * state.grid().xi_max())
    } else {
        T::infinity()
    };
    (half * params.j.sqrt())
        .min(half * params.magnetic_inertia().sqrt())
        .min(adv)
}

/// Per-equation implicit operator.
#[derive(Clone, Debug)]
struct Block<T: Scalar> {
    mu: T,
    nu: T,
    factor: TridiagonalFactor<T>,
}

impl<T: Scalar> Block<T> {
    fn new(mu: T, nu: T, dt: T, scheme: Scheme, grid: &Grid<T>) -> Result<Self> {
        let (alpha, beta) = match scheme {
            Scheme::ImexCnAb2 => {
                let a = dt / (T::lit(2.0) * mu);
                (T::one() + a, dt * a / T::lit(2.0) * nu)
            }
            Scheme::ImexEuler => (T::one() + dt / mu, dt * dt * nu / mu),
        };
        let factor = TridiagonalFactor::dirichlet_helmholtz(grid.n_y(), grid.h_y(), alpha, beta)?;
        Ok(Block { mu, nu, factor })
    }

    /// Advances `(u, w)` given the explicit increment `e` (already divided by
    /// the inertia and extrapolated).
    fn advance(
        &self,
        u: &SpectralField<T>,
        w: &SpectralField<T>,
        e: &SpectralField<T>,
        dt: T,
        scheme: Scheme,
    ) -> (SpectralField<T>, SpectralField<T>) {
        let two = T::lit(2.0);
        let mut r = match scheme {
            Scheme::ImexCnAb2 => {
                let a = dt / (two * self.mu);
                u.scale(T::one() + a)
                    .axpy(dt * a / two * self.nu, &u.dyy())
                    .axpy(dt, w)
                    .axpy(dt * dt / two, e)
            }
            Scheme::ImexEuler => u
                .scale(T::one() + dt / self.mu)
                .axpy(dt, w)
                .axpy(dt * dt, e),
        };
        r.zero_walls();
        for idx in 0..u.grid().n_x() {
            self.factor.solve_in_place(r.line_mut(idx));
        }
        let w_new = match scheme {
            Scheme::ImexCnAb2 => (&r - u).scale(two / dt).axpy(-T::one(), w),
            Scheme::ImexEuler => (&r - u).scale(T::one() / dt),
        };
        (r, w_new)
    }
}

/// Stateful stepper: holds the factored implicit operators and the
/// explicit-term history needed by Adams-Bashforth.
pub struct Stepper<T: Scalar> {
    params: Parameters<T>,
    scheme: Scheme,
    dt: T,
    guard: T,
    u_block: Block<T>,
    b_block: Block<T>,
    history: Option<(SpectralField<T>, SpectralField<T>)>,
    forcing: Option<Arc<dyn Forcing<T>>>,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(
        params: &Parameters<T>,
        grid: &Arc<Grid<T>>,
        dt: T,
        scheme: Scheme,
        guard: T,
    ) -> Result<Self> {
        params.validate()?;
        if !(dt > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let one = T::one();
        Ok(Stepper {
            params: *params,
            scheme,
            dt,
            guard,
            u_block: Block::new(params.j, one, dt, scheme, grid)?,
            b_block: Block::new(
                params.magnetic_inertia(),
                one / params.pr_m,
                dt,
                scheme,
                grid,
            )?,
            history: None,
            forcing: None,
        })
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing<T>>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Forgets the Adams-Bashforth history; the next step bootstraps again.
    pub fn reset(&mut self) {
        self.history = None;
    }

    fn explicit(&self, state: &State<T>) -> Result<(SpectralField<T>, SpectralField<T>)> {
        let ex = model::explicit_terms(state, &self.params)?;
        let (mut nu, mut nb) = (ex.n_u, ex.n_b);
        if let Some(f) = &self.forcing {
            let (fu, fb) = f.evaluate(state.grid(), state.t);
            nu = &nu + &fu;
            nb = &nb + &fb;
        }
        Ok((
            nu.scale(T::one() / self.u_block.mu),
            nb.scale(T::one() / self.b_block.mu),
        ))
    }

    /// One step of size `dt`. On error the stepper history is untouched and
    /// the caller still owns the last valid state.
    pub fn step(&mut self, state: &State<T>) -> Result<State<T>> {
        let (nu, nb) = self.explicit(state)?;
        let (eu, eb) = match (&self.history, self.scheme) {
            (Some((pu, pb)), Scheme::ImexCnAb2) => {
                let (a, b) = (T::lit(1.5), T::lit(-0.5));
                (nu.scale(a).axpy(b, pu), nb.scale(a).axpy(b, pb))
            }
            _ => (nu.clone(), nb.clone()),
        };
        let (u, ut) = self
            .u_block
            .advance(&state.u, &state.ut, &eu, self.dt, self.scheme);
        let (b1, b1t) = self
            .b_block
            .advance(&state.b1, &state.b1t, &eb, self.dt, self.scheme);
        let mut next = State {
            u,
            b1,
            ut,
            b1t,
            t: state.t + self.dt,
        };
        next.enforce_dirichlet();
        for f in next.fields() {
            if !f.is_finite() {
                return Err(Error::Divergence {
                    t: next.t.as_f64(),
                    norm: f64::INFINITY,
                    guard: self.guard.as_f64(),
                });
            }
            let n = f.norm_hs0(T::zero());
            if n > self.guard {
                return Err(Error::Divergence {
                    t: next.t.as_f64(),
                    norm: n.as_f64(),
                    guard: self.guard.as_f64(),
                });
            }
        }
        self.history = Some((nu, nb));
        Ok(next)
    }
}

/// Snapshots and monitor reports of one run.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Scalar> {
    pub snapshots: Vec<State<T>>,
    pub reports: Vec<EnergyReport<T>>,
    pub params: Parameters<T>,
    pub grid: Arc<Grid<T>>,
    pub config: IntegratorConfig<T>,
    pub steps_taken: usize,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_state(&self) -> &State<T> {
        self.snapshots
            .last()
            .expect("trajectory holds the initial snapshot")
    }

    /// Report nearest to time `t`.
    pub fn report_near(&self, t: T) -> Option<&EnergyReport<T>> {
        self.reports.iter().min_by(|a, b| {
            (a.t - t)
                .abs()
                .partial_cmp(&(b.t - t).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

/// A run that stopped early; `trajectory` holds everything up to and
/// including the last valid state.
#[derive(Debug)]
pub struct Aborted<T: Scalar> {
    pub error: Error,
    pub trajectory: Trajectory<T>,
}

impl<T: Scalar> std::fmt::Display for Aborted<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "run aborted after {} steps: {}",
            self.trajectory.steps_taken, self.error
        )
    }
}

impl<T: Scalar> std::error::Error for Aborted<T> {}

/// Integrates from `initial` to `t_end`, recording an energy report every
/// `monitor_every` steps (and at the final step).
pub fn simulate<T: Scalar>(
    initial: &State<T>,
    params: &Parameters<T>,
    cfg: &IntegratorConfig<T>,
    monitor_every: usize,
    forcing: Option<Arc<dyn Forcing<T>>>,
) -> Result<Trajectory<T>, Box<Aborted<T>>> {
    let grid = initial.grid().clone();
    let mut traj = Trajectory {
        snapshots: vec![initial.clone()],
        reports: Vec::new(),
        params: *params,
        grid: grid.clone(),
        config: *cfg,
        steps_taken: 0,
    };
    let fail = |error: Error, traj: Trajectory<T>| {
        Box::new(Aborted {
            error,
            trajectory: traj,
        })
    };
    if let Err(e) = cfg
        .validate()
        .and_then(|_| params.validate())
        .and_then(|_| initial.validate())
    {
        return Err(fail(e, traj));
    }
    if monitor_every == 0 {
        return Err(fail(
            Error::InvalidParameter("monitor_every must be positive".into()),
            traj,
        ));
    }
    let trace = initial.wall_trace();
    if trace
        > T::lit(1e-12)
            * initial
                .fields()
                .iter()
                .map(|f| f.max_abs())
                .fold(T::one(), T::max)
    {
        return Err(fail(Error::TraceViolation(trace.as_f64()), traj));
    }
    let ep = EnergyParams::new(params);
    match energy::report(initial, params, &ep) {
        Ok(r) => traj.reports.push(r),
        Err(e) => return Err(fail(e, traj)),
    }
    let (n_steps, dt) = cfg.step_plan();
    if n_steps == 0 {
        return Ok(traj);
    }
    let bound = dt_stability(params, initial);
    if dt > bound {
        log::warn!("dt = {dt} exceeds the advisory stability bound {bound}");
    }
    let mut stepper = match Stepper::new(params, &grid, dt, cfg.scheme, cfg.max_norm_guard) {
        Ok(s) => s,
        Err(e) => return Err(fail(e, traj)),
    };
    if let Some(f) = forcing {
        stepper = stepper.with_forcing(f);
    }
    let snap_every = cfg.snapshot_every.unwrap_or(monitor_every);
    let t0 = initial.t;
    let mut state = initial.clone();
    for n in 1..=n_steps {
        let mut next = match stepper.step(&state) {
            Ok(s) => s,
            Err(e) => {
                if traj.snapshots.last().map(|s| s.t) != Some(state.t) {
                    traj.snapshots.push(state);
                }
                return Err(fail(e, traj));
            }
        };
        next.t = t0 + dt * T::from_count(n);
        state = next;
        traj.steps_taken = n;
        let last = n == n_steps;
        if n % monitor_every == 0 || last {
            match energy::report(&state, params, &ep) {
                Ok(r) => traj.reports.push(r),
                Err(e) => {
                    traj.snapshots.push(state);
                    return Err(fail(e, traj));
                }
            }
        }
        if n % snap_every == 0 || last {
            traj.snapshots.push(state.clone());
        }
    }
    Ok(traj)
}
