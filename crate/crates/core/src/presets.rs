//! Initial data.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::smallness_lhs;
use crate::error::{Error, Result};
use crate::model::{Parameters, State};
use crate::scalar::Scalar;
use crate::spectral::{Grid, SpectralField};

/// `sinh r / (cosh r - cos x) = 1 + 2 sum_k e^{-r k} cos(k x)`: every
/// Fourier coefficient decays exactly like `e^{-r |k|}`.
pub fn poisson_kernel<T: Scalar>(x: T, r: T) -> T {
    r.sinh() / (r.cosh() - x.cos())
}

/// Field with coefficients `e^{-r |xi_k|} e^{-i xi_k shift} g(y)` on the
/// 2/3-resolved band, i.e. the Poisson kernel `P_r(x - shift) g(y)` built in
/// coefficient space. Sampling the kernel and transforming would leave
/// roundoff of relative size 1e-16 in every mode, which the analytic weight
/// `e^{tau (1 + |xi|)}` then amplifies beyond the true coefficients.
pub fn poisson_field<T: Scalar>(
    grid: &Arc<Grid<T>>,
    r: T,
    shift: T,
    g: impl Fn(T) -> T,
) -> SpectralField<T> {
    let profile: Vec<T> = (0..grid.n_y()).map(|j| g(grid.y(j))).collect();
    SpectralField::from_modes(grid, |idx, j| {
        if !grid.is_resolved(idx) || grid.is_nyquist(idx) {
            return Complex::new(T::zero(), T::zero());
        }
        let xi = grid.xi(idx);
        let phase = -xi * shift;
        Complex::new(phase.cos(), phase.sin()) * ((-r * xi.abs()).exp() * profile[j])
    })
}

/// Named initial-data families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Zero,
    /// `u = A P_r(x) sin(pi y)`, `b1 = A/2 P_r(x - 1) sin(2 pi y)`,
    /// `ut = -A/4 P_r(x) sin(pi y)`, `b1t = 0`, with `P_r` the Poisson
    /// kernel whose coefficients decay like `e^{-radius |xi|}`, truncated to
    /// the 2/3 band.
    Analytic {
        amplitude: f64,
        radius: f64,
        /// When set, the amplitude is replaced so that the smallness
        /// left-hand side equals this fraction of `delta_small`.
        #[serde(default)]
        smallness_fraction: Option<f64>,
    },
    /// Random analytic data with spectral decay `e^{-radius |xi|}`.
    Random {
        amplitude: f64,
        radius: f64,
    },
    /// The manufactured solution at `t = 0`.
    Mms,
}

/// Which walls a random field must vanish on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Walls {
    Both,
    Bottom,
    Neither,
}

/// Random real field: mode `k` carries `e^{-radius |xi_k|}` times a random
/// combination of four smooth wall-normal profiles. Modes outside the 2/3
/// band are left empty.
pub fn random_analytic_field<T: Scalar, R: Rng>(
    grid: &Arc<Grid<T>>,
    rng: &mut R,
    radius: T,
    walls: Walls,
) -> SpectralField<T> {
    let n_y = grid.n_y();
    let pi = T::PI();
    let profile = |m: usize, y: T| -> T {
        let mf = T::from_count(m);
        match walls {
            Walls::Both => (mf * pi * y).sin(),
            Walls::Bottom => y * (mf * pi * y / T::lit(2.0)).cos(),
            Walls::Neither => (mf * pi * y / T::lit(2.0)).cos(),
        }
    };
    let mut f = SpectralField::zeros(grid);
    for idx in 0..grid.n_x() {
        let k = grid.mode(idx);
        if k < 0 || !grid.is_resolved(idx) || grid.is_nyquist(idx) {
            continue;
        }
        let decay = (-radius * grid.xi(idx).abs()).exp();
        let mut line = vec![Complex::new(T::zero(), T::zero()); n_y];
        for m in 1..=4 {
            let re = T::lit(rng.gen_range(-1.0..1.0)) * decay;
            let im = if k == 0 {
                T::zero()
            } else {
                T::lit(rng.gen_range(-1.0..1.0)) * decay
            };
            for (j, c) in line.iter_mut().enumerate() {
                *c = *c + Complex::new(re, im) * profile(m, grid.y(j));
            }
        }
        if walls != Walls::Neither {
            line[0] = Complex::new(T::zero(), T::zero());
        }
        if walls == Walls::Both {
            line[n_y - 1] = Complex::new(T::zero(), T::zero());
        }
        if k > 0 {
            let mirror = grid.index_of(-k).expect("resolved mode has a partner");
            let conj: Vec<_> = line.iter().map(|c| c.conj()).collect();
            f.line_mut(mirror).copy_from_slice(&conj);
        }
        f.line_mut(idx).copy_from_slice(&line);
    }
    f
}

/// Random state satisfying the wall conditions.
pub fn random_state<T: Scalar, R: Rng>(
    grid: &Arc<Grid<T>>,
    rng: &mut R,
    amplitude: T,
    radius: T,
) -> State<T> {
    let mut field = || random_analytic_field(grid, rng, radius, Walls::Both).scale(amplitude);
    State {
        u: field(),
        b1: field(),
        ut: field(),
        b1t: field(),
        t: T::zero(),
    }
}

impl Preset {
    pub fn build<T: Scalar, R: Rng>(
        &self,
        grid: &Arc<Grid<T>>,
        params: &Parameters<T>,
        rng: &mut R,
    ) -> Result<State<T>> {
        let state = match self {
            Preset::Zero => State::zeros(grid),
            Preset::Analytic {
                amplitude,
                radius,
                smallness_fraction,
            } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                let a = T::lit(*amplitude);
                let r = T::lit(*radius);
                let pi = T::PI();
                let u = poisson_field(grid, r, T::zero(), |y| a * (pi * y).sin());
                let b1 = poisson_field(grid, r, T::one(), |y| {
                    a * T::lit(0.5) * (T::lit(2.0) * pi * y).sin()
                });
                let ut = u.scale(T::lit(-0.25));
                let mut s = State {
                    b1t: SpectralField::zeros(grid),
                    u,
                    b1,
                    ut,
                    t: T::zero(),
                };
                s.enforce_dirichlet();
                match smallness_fraction {
                    Some(frac) => {
                        let lhs = smallness_lhs(&s, params)?;
                        if !(lhs > T::zero()) {
                            return Err(Error::InvalidParameter("cannot rescale zero data".into()));
                        }
                        let target = T::lit(*frac) * crate::energy::constants(params).delta_small;
                        s.scaled(target / lhs)
                    }
                    None => s,
                }
            }
            Preset::Random { amplitude, radius } => {
                random_state(grid, rng, T::lit(*amplitude), T::lit(*radius))
            }
            Preset::Mms => crate::mms::exact_state(grid, T::zero()),
        };
        state.validate()?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{check_smallness, constants, empirical_radius};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn poisson_kernel_spectrum() {
        let g = Grid::<f64>::new(64, 2.0 * PI, 5).unwrap();
        let f = SpectralField::from_fn(&g, |x, _| poisson_kernel(x, 1.5));
        for k in 0..10i64 {
            let c = f.at(g.index_of(k).unwrap(), 2).re;
            assert!((c - (-1.5 * k as f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_field_matches_sampled_kernel() {
        let g = Grid::<f64>::new(64, 2.0 * PI, 5).unwrap();
        let built = poisson_field(&g, 1.5, 1.0, |y| y);
        let sampled = SpectralField::from_fn(&g, |x, y| poisson_kernel(x - 1.0, 1.5) * y).dealias();
        assert!((&built - &sampled).max_abs() < 1e-14);
        assert!(built.hermitian_defect() < 1e-16);
    }

    #[test]
    fn analytic_preset_is_scaled_to_fraction() {
        let g = Grid::<f64>::new(32, 2.0 * PI, 17).unwrap();
        let p = Parameters::unit();
        let preset = Preset::Analytic {
            amplitude: 1.0,
            radius: 1.5,
            smallness_fraction: Some(0.5),
        };
        let s = preset
            .build(&g, &p, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        let ct = constants(&p);
        let (ok, margin) = check_smallness(&s, &p, &ct).unwrap();
        assert!(ok);
        assert!((margin - 0.5 * ct.delta_small).abs() < 1e-12 * ct.delta_small);
        assert!((empirical_radius(&s.u).unwrap() - 1.5).abs() < 1e-6);
        assert_eq!(s.wall_trace(), 0.0);
    }

    #[test]
    fn random_fields_respect_walls_and_symmetry() {
        let g = Grid::<f64>::new(32, 2.0 * PI, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_state(&g, &mut rng, 1.0, 0.5);
        assert_eq!(s.wall_trace(), 0.0);
        for f in s.fields() {
            assert!(f.hermitian_defect() < 1e-15);
        }
        let f = random_analytic_field(&g, &mut rng, 0.5, Walls::Bottom);
        assert_eq!(f.max_abs_on_row(0), 0.0);
        assert!(f.max_abs_on_row(16) > 0.0);
    }

    #[test]
    fn preset_parses_from_toml_like_json() {
        let p: Preset =
            serde_json::from_str(r#"{"preset":"analytic","amplitude":1.0,"radius":1.5}"#).unwrap();
        assert_eq!(
            p,
            Preset::Analytic {
                amplitude: 1.0,
                radius: 1.5,
                smallness_fraction: None
            }
        );
        assert_eq!(
            serde_json::from_str::<Preset>(r#"{"preset":"zero"}"#).unwrap(),
            Preset::Zero
        );
    }
}
