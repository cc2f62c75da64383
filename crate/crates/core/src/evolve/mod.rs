//! Time integration of the flattened free-surface problem.

pub mod init;
pub mod layers;
pub mod poisson;
pub mod run;
pub mod state;
pub mod step;

pub use init::{initial_state, InitialProfile};
pub use layers::{energy_identity_residual, time_layers, LayerSolver, TimeLayers};
pub use state::{kinematic_rate, FlowState};
pub use step::{step_doubling_error, StepOptions, StepReport, Stepper};
pub use run::{run, step_doubling_study, MonitorSample, RunSettings, StepDoublingStudy, Trajectory};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_complex::Complex64 as C;

    use super::*;
    use crate::discretization::Grid;
    use crate::stokes::{linear_mode_evolve, LinearModeState, Scheme, Vertical, Wavenumber};

    fn grid() -> Arc<Grid> {
        Grid::new_2d(32, 20.0, 17, 1.0).unwrap()
    }

    fn opts(scheme: Scheme, dt: f64) -> StepOptions {
        StepOptions { scheme, dt, ..StepOptions::default() }
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let g = grid();
        let s = FlowState::still(crate::SurfaceFunction::zeros(&g)).unwrap();
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let next = Stepper::new(&g, opts(scheme, 0.1)).unwrap().step(&s).unwrap();
            assert_eq!(next.eta.sup(), 0.0);
            assert!(next.u.iter().all(|c| c.sup() == 0.0));
        }
    }

    #[test]
    fn small_amplitude_matches_linear_mode_step() {
        let g = grid();
        let amp = 1e-8;
        let s = initial_state(&g, &InitialProfile::Cosine { amplitude: amp, mode: [1, 0] }).unwrap();
        let v = Arc::new(Vertical::new(g.nz(), g.depth()));
        let wave = Wavenumber::from_grid(&g, 1);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let stepper = Stepper::new(&g, opts(scheme, 0.05)).unwrap();
            let mut full = s.clone();
            let mut lin = LinearModeState::rest(2, g.nz(), C::new(0.5 * amp, 0.0));
            for _ in 0..5 {
                full = stepper.step(&full).unwrap();
                lin = linear_mode_evolve(&lin, &v, wave, 0.05, scheme).unwrap();
            }
            let err = (full.eta.coefficients()[1] - lin.eta).norm();
            assert!(err < 1e-12 * amp, "{scheme:?}: {err:e}");
        }
    }

    #[test]
    fn step_doubling_shows_scheme_order() {
        let g = grid();
        let s = initial_state(&g, &InitialProfile::Cosine { amplitude: 0.05, mode: [1, 0] }).unwrap();
        for (scheme, expect) in [(Scheme::ImplicitEuler, 1.0), (Scheme::CrankNicolson, 2.0)] {
            let settings = RunSettings { step: opts(scheme, 0.1), t_end: 1.0, ..RunSettings::default() };
            let study = step_doubling_study(&s, &settings, &[0.2, 0.1, 0.05]).unwrap();
            assert!((study.order - expect).abs() < 0.25, "{scheme:?}: {study:?}");
        }
    }

    #[test]
    fn energy_decreases_and_divergence_stays_small() {
        let g = grid();
        let s = initial_state(&g, &InitialProfile::Gaussian { amplitude: 0.05, width: 2.0 }).unwrap();
        let settings = RunSettings { t_end: 1.0, snapshot_every: 0.5, ..RunSettings::default() };
        let traj = run(s, &settings, |_| Ok(())).unwrap();
        assert!(traj.energy_nonincreasing(0.0));
        for m in &traj.monitor {
            assert!(m.divergence_residual <= 1e-8 * m.velocity_h1.max(1e-300) + 1e-14, "{m:?}");
        }
        assert_eq!(traj.snapshots.len(), 3);
    }

    #[test]
    fn mirror_symmetric_data_stay_symmetric() {
        let g = grid();
        let s = initial_state(&g, &InitialProfile::Gaussian { amplitude: 0.05, width: 2.0 }).unwrap();
        let stepper = Stepper::new(&g, opts(Scheme::CrankNicolson, 0.05)).unwrap();
        let s = stepper.step(&stepper.step(&s).unwrap()).unwrap();
        let e = s.eta.values();
        let n = g.nx();
        for j in 1..n {
            assert!((e[j] - e[n - j]).abs() < 1e-14, "{j}");
        }
    }

    #[test]
    fn velocity_layer_matches_backward_difference() {
        // implicit Euler: (s1 - s0)/dt = ∂_t at s1 + O(dt), down to the
        // spatial mismatch between the flat-plus-forcing and geometric forms
        let g = grid();
        let s = initial_state(&g, &InitialProfile::Cosine { amplitude: 0.05, mode: [2, 0] }).unwrap();
        let warm = Stepper::new(&g, opts(Scheme::ImplicitEuler, 0.05)).unwrap();
        let s0 = warm.step(&warm.step(&s).unwrap()).unwrap();
        let err = |dt: f64| {
            let s1 = Stepper::new(&g, opts(Scheme::ImplicitEuler, dt)).unwrap().step(&s0).unwrap();
            let layers = time_layers(&s1).unwrap();
            let mut e: f64 = 0.0;
            for c in 0..2 {
                let fd = (&s1.u[c] - &s0.u[c]).scale(1.0 / dt);
                e = e.max((&layers.u[1][c] - &fd).sup() / fd.sup());
            }
            let fd_eta = (&s1.eta - &s0.eta).scale(1.0 / dt);
            e.max((layers.eta(1) - &fd_eta).sup() / fd_eta.sup())
        };
        for dt in [1e-3, 1e-4] {
            let e = err(dt);
            assert!(e < 1e-4, "dt {dt}: {e:e}");
        }
    }

    #[test]
    fn energy_identity_holds_with_equation_derivatives() {
        let g = grid();
        let s = initial_state(&g, &InitialProfile::Gaussian { amplitude: 0.05, width: 2.0 }).unwrap();
        let stepper = Stepper::new(&g, opts(Scheme::ImplicitEuler, 0.05)).unwrap();
        let s = stepper.step(&stepper.step(&s).unwrap()).unwrap();
        let r = energy_identity_residual(&s).unwrap();
        assert!(r <= 1e-8 * s.velocity_h1().powi(2), "{r:e}");
    }

    #[test]
    fn restart_from_checkpoint_is_byte_exact() {
        let g = grid();
        let s = initial_state(&g, &InitialProfile::Gaussian { amplitude: 0.02, width: 2.0 }).unwrap();
        let base = RunSettings { t_end: 0.5, snapshot_every: 0.25, ..RunSettings::default() };
        let whole = run(s.clone(), &base, |_| Ok(())).unwrap();
        let first = run(s, &RunSettings { t_end: 0.25, ..base.clone() }, |_| Ok(())).unwrap();
        let restored = FlowState::from_bytes(&first.final_state().to_bytes()).unwrap();
        let second = run(restored, &RunSettings { rannacher: false, ..base }, |_| Ok(())).unwrap();
        assert_eq!(whole.final_state().to_bytes(), second.final_state().to_bytes());
    }

    #[test]
    #[ignore]
    fn time_reference_step() {
        let g = Grid::new_2d(256, 400.0, 33, 1.0).unwrap();
        let s = initial_state(&g, &InitialProfile::Gaussian { amplitude: 1e-3, width: 4.0 }).unwrap();
        let st = Stepper::new(&g, opts(Scheme::ImplicitEuler, 0.01)).unwrap();
        let mut s = st.step(&s).unwrap();
        let t0 = std::time::Instant::now();
        for _ in 0..20 {
            let (n, r) = st.step_with_report(&s).unwrap();
            s = n;
            eprintln!("{r:?}");
        }
        eprintln!("per step {:?}", t0.elapsed() / 20);
        let t0 = std::time::Instant::now();
        let _ = time_layers(&s).unwrap();
        eprintln!("layers {:?}", t0.elapsed());
    }
}
