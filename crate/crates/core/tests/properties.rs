//! Randomised invariants.

use proptest::prelude::*;

use flatwave::diagnostics::{fit_decay, pointwise_functionals};
use flatwave::evolve::FlowState;
use flatwave::forms::nonlinear::assemble_g;
use flatwave::geometry::Geometry;
use flatwave::random::{random_bulk, random_surface, random_velocity, rng, Spectrum};
use flatwave::{Grid, SurfaceFunction};

fn spec() -> Spectrum {
    Spectrum { max_mode: 3, ..Spectrum::default() }
}

fn small_grid() -> std::sync::Arc<Grid> {
    Grid::new_2d(24, 12.0, 9, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn horizontal_derivative_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = small_grid();
        let mut r = rng(seed);
        let f = random_surface(&g, &mut r, &spec(), 1.0);
        let h = random_surface(&g, &mut r, &spec(), 1.0);
        let lhs = (&f.scale(a) + &h.scale(b)).dh(0);
        let rhs = &f.dh(0).scale(a) + &h.dh(0).scale(b);
        prop_assert!((&lhs - &rhs).sup() <= 1e-12 * (1.0 + lhs.sup()));
    }

    #[test]
    fn piola_identity_on_random_surfaces(seed in 0u64..1000, amp in 0.01f64..0.2) {
        let g = Grid::new_2d(32, 20.0, 33, 1.0).unwrap();
        let eta = random_surface(&g, &mut rng(seed), &spec(), amp);
        let geo = Geometry::new(&eta).unwrap();
        let r = geo.piola_residual();
        prop_assert!(r <= 1e-8, "{r:e}");
    }

    #[test]
    fn fit_recovers_power_laws(s in -5.0f64..-0.2, c in 1e-6f64..1e3) {
        let series: Vec<(f64, f64)> =
            (0..30).map(|i| 1.0 + 7.0 * i as f64).map(|t| (t, c * (1.0 + t).powf(s))).collect();
        let fit = fit_decay(&series, (1.0, 210.0)).unwrap();
        prop_assert!((fit.slope - s).abs() <= 1e-6);
        prop_assert!((fit.prefactor / c - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn pointwise_chain_holds(seed in 0u64..1000, amp in 1e-4f64..10.0) {
        let g = small_grid();
        let u = random_velocity(&g, &mut rng(seed), &spec(), amp);
        let k = pointwise_functionals(&u);
        prop_assert!(k.k_bar <= k.k_cal && k.k_cal <= k.k_frak, "{k:?}");
    }

    #[test]
    fn checkpoint_round_trip(seed in 0u64..1000, t in 0.0f64..100.0) {
        let g = small_grid();
        let mut r = rng(seed);
        let eta = random_surface(&g, &mut r, &spec(), 0.05);
        let u = random_velocity(&g, &mut r, &spec(), 0.1);
        let p = random_bulk(&g, &mut r, &spec(), 0.1, false);
        let s = FlowState::new(u, p, eta, t).unwrap();
        let bytes = s.to_bytes();
        let back = FlowState::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(back.t.to_bits(), t.to_bits());
    }

    #[test]
    fn nonlinear_forcing_scales_quadratically(seed in 0u64..1000) {
        let g = small_grid();
        let terms = |eps: f64| {
            let mut r = rng(seed);
            let eta = random_surface(&g, &mut r, &spec(), eps);
            let eta_t = random_surface(&g, &mut r, &spec(), eps);
            let geo = Geometry::with_layers(&[eta, eta_t]).unwrap();
            let u = random_velocity(&g, &mut r, &spec(), eps);
            let p = random_bulk(&g, &mut r, &spec(), eps, false);
            assemble_g(&geo, &u, &p).unwrap().sup_terms()
        };
        let (a, b) = (terms(1e-3), terms(1e-4));
        for (x, y) in a.iter().zip(&b) {
            if *x > 1e-300 {
                prop_assert!((x / y).log10() >= 1.95, "{x:e} vs {y:e}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn functionals_are_nonnegative(seed in 0u64..1000, amp in 1e-4f64..0.05) {
        use flatwave::diagnostics::{evaluate_state, FunctionalParams};
        let g = small_grid();
        let mut r = rng(seed);
        let eta = random_surface(&g, &mut r, &spec(), amp);
        let u = random_velocity(&g, &mut r, &spec(), amp);
        let s = FlowState::new(u, flatwave::BulkField::zeros(&g), eta, 0.0).unwrap();
        let rep = evaluate_state(&s, &FunctionalParams::for_dim(2)).unwrap();
        for (name, v) in rep.scalars() {
            prop_assert!(v >= 0.0 && v.is_finite(), "{name} = {v}");
        }
    }
}

#[test]
fn flat_surface_piola_residual_is_roundoff() {
    let g = small_grid();
    let geo = Geometry::new(&SurfaceFunction::zeros(&g)).unwrap();
    assert!(geo.piola_residual() <= 1e-12);
}
