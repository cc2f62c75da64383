//! Initial surfaces and the quiescent initial state.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::layers::LayerSolver;
use super::state::FlowState;
use crate::discretization::{BulkField, Grid, SurfaceFunction};
use crate::error::{Error, Result};
use crate::random::{random_surface, rng, Spectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialProfile {
    /// `a exp(-|x - c|²/w²)` centred in the box, mean removed.
    Gaussian { amplitude: f64, width: f64 },
    /// `a cos(k·x)` for the lattice mode `mode`.
    Cosine { amplitude: f64, mode: [i64; 2] },
    /// Seeded band-limited surface with sup norm `amplitude`.
    Random { amplitude: f64, seed: u64, max_mode: usize },
}

impl InitialProfile {
    pub fn amplitude(&self) -> f64 {
        match *self {
            Self::Gaussian { amplitude, .. } | Self::Cosine { amplitude, .. } | Self::Random { amplitude, .. } => {
                amplitude
            }
        }
    }

    pub fn surface(&self, grid: &Arc<Grid>) -> Result<SurfaceFunction> {
        let h = grid.horizontal_dims();
        match *self {
            Self::Gaussian { amplitude, width } => {
                if !(width > 0.0) {
                    return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
                }
                let centre: Vec<f64> = (0..h).map(|a| 0.5 * grid.period(a)).collect();
                let f = SurfaceFunction::from_fn(grid, |x| {
                    let r2: f64 = (0..h).map(|a| (x[a] - centre[a]).powi(2)).sum();
                    amplitude * (-r2 / (width * width)).exp()
                });
                let m = f.mean();
                Ok(f.map(|v| v - m))
            }
            Self::Cosine { amplitude, mode } => {
                let k: Vec<f64> =
                    (0..h).map(|a| 2.0 * std::f64::consts::PI * mode[a] as f64 / grid.period(a)).collect();
                Ok(SurfaceFunction::from_fn(grid, |x| amplitude * (0..h).map(|a| k[a] * x[a]).sum::<f64>().cos()))
            }
            Self::Random { amplitude, seed, max_mode } => {
                let spec = Spectrum { max_mode, ..Spectrum::default() };
                let f = random_surface(grid, &mut rng(seed), &spec, 1.0);
                let m = f.mean();
                let f = f.map(|v| v - m);
                let s = f.sup();
                Ok(if s == 0.0 { f } else { f.scale(amplitude / s) })
            }
        }
    }
}

/// Fluid at rest under `η₀`, with the pressure the equations assign to it.
pub fn initial_state(grid: &Arc<Grid>, profile: &InitialProfile) -> Result<FlowState> {
    let eta = profile.surface(grid)?;
    let still = FlowState::still(eta)?;
    let zero = vec![BulkField::zeros(grid); grid.dim()];
    let (p, _, _) = LayerSolver::new(grid)?.pressure(still.geometry(), &zero)?;
    FlowState::new(zero, p, still.eta, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_has_zero_mean_and_peak_at_centre() {
        let g = Grid::new_2d(64, 40.0, 9, 1.0).unwrap();
        let eta = InitialProfile::Gaussian { amplitude: 1e-3, width: 2.0 }.surface(&g).unwrap();
        assert!(eta.mean().abs() < 1e-18);
        let imax = (0..64).max_by(|&a, &b| eta.values()[a].total_cmp(&eta.values()[b])).unwrap();
        assert_eq!(imax, 32);
    }

    #[test]
    fn still_pressure_is_hydrostatic_for_flat_surface() {
        let g = Grid::new_2d(16, 10.0, 9, 1.0).unwrap();
        let s = initial_state(&g, &InitialProfile::Cosine { amplitude: 0.0, mode: [1, 0] }).unwrap();
        assert!(s.p.sup() < 1e-15);
    }

    #[test]
    fn still_pressure_matches_surface_height() {
        let g = Grid::new_2d(32, 20.0, 17, 1.0).unwrap();
        let s = initial_state(&g, &InitialProfile::Cosine { amplitude: 1e-3, mode: [2, 0] }).unwrap();
        assert!((&s.p.trace() - &s.eta).sup() < 1e-14);
    }
}
