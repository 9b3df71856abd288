use std::f64::consts::PI;
use std::sync::Arc;

use clayer::energy::{compute_functionals, EnergyParams};
use clayer::lemma::{product_law_check, random_case, triangle_power_check};
use clayer::model::Parameters;
use clayer::presets::{random_analytic_field, random_state, Walls};
use clayer::{Field, Grid64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> Arc<Grid64> {
    Grid64::new(16, 2.0 * PI, 17).unwrap()
}

fn field(seed: u64, walls: Walls) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_analytic_field(&grid(), &mut rng, 0.8, walls)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz(a in any::<u64>(), b in any::<u64>(), s in 0.0f64..4.0) {
        let (f, g) = (field(a, Walls::Neither), field(b, Walls::Both));
        let ip = f.inner_hs0(&g, s).unwrap();
        prop_assert!(ip.abs() <= f.norm_hs0(s) * g.norm_hs0(s) * (1.0 + 1e-12));
    }

    #[test]
    fn multiplier_semigroup(seed in any::<u64>(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let f = field(seed, Walls::Neither);
        let a = f.apply_multiplier(t1).unwrap().apply_multiplier(t2).unwrap();
        let b = f.apply_multiplier(t1 + t2).unwrap();
        let scale = b.max_abs().max(1e-300);
        prop_assert!((&a - &b).max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn norms_grow_with_index(seed in any::<u64>(), s in 0.0f64..3.0, ds in 0.0f64..2.0) {
        let f = field(seed, Walls::Neither);
        prop_assert!(f.norm_hs0(s) <= f.norm_hs0(s + ds) * (1.0 + 1e-14));
    }

    #[test]
    fn functionals_are_quadratic(seed in any::<u64>(), lam in -3.0f64..3.0) {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(&g, &mut rng, 0.1, 1.0);
        let p = Parameters::unit();
        let ep = EnergyParams::new(&p);
        let a = compute_functionals(&s, &p, &ep).unwrap();
        let b = compute_functionals(&s.scaled(lam), &p, &ep).unwrap();
        let l2 = lam * lam;
        for (x, y) in [(a.es, b.es), (a.ds0, b.ds0), (a.ds_half, b.ds_half), (a.ds_threehalf, b.ds_threehalf)] {
            prop_assert!((y - l2 * x).abs() <= 1e-12 * (l2 * x).abs().max(1e-300));
        }
    }

    #[test]
    fn triangle_power(s in 0.51f64..4.0, xi in -50.0f64..50.0, eta in -50.0f64..50.0) {
        prop_assert!(triangle_power_check(s, &[xi], &[eta]).unwrap() <= 1.0 + 1e-14);
    }

    #[test]
    fn product_law_random(seed in any::<u64>()) {
        let out = product_law_check(&random_case::<f64>(&grid(), seed)).unwrap();
        prop_assert!(out.ratio <= 1.0);
    }
}
