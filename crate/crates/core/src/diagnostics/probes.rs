//! Empirical probes of the interpolation inequalities
//! `‖f‖² ≲ E_min^θ E_high^{1-θ}` over an ensemble of small states.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::evaluate_state;
use super::functionals::FunctionalParams;
use crate::discretization::{BulkField, Grid};
use crate::error::Result;
use crate::evolve::{initial_state, InitialProfile, StepOptions, Stepper};
use crate::random::rng;

/// A probed row: the left side and the powers of `E_min` and `E_high`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProbeRow {
    /// `|Dη|₀²` against `E_min^{1/2} E_high^{1/2}`.
    DEta,
    /// `‖u_h‖₀²` against `E_min^{1/2} E_high^{1/2}`.
    HorizontalVelocity,
    /// `|η|_∞²` against `E_min^{1/4} E_high^{3/4}`.
    EtaSup,
    /// `|Dη|₀²` against `E_min E_high^{1/2}`, which is wrong by design.
    Misspecified,
}

impl ProbeRow {
    pub const ALL: [ProbeRow; 4] = [Self::DEta, Self::HorizontalVelocity, Self::EtaSup, Self::Misspecified];

    pub fn name(self) -> &'static str {
        match self {
            Self::DEta => "deta_l2",
            Self::HorizontalVelocity => "uh_l2",
            Self::EtaSup => "eta_linf",
            Self::Misspecified => "deta_l2_misspecified",
        }
    }

    /// Powers of `E_min` and `E_high`.
    pub fn powers(self) -> (f64, f64) {
        match self {
            Self::DEta | Self::HorizontalVelocity => (0.5, 0.5),
            Self::EtaSup => (0.25, 0.75),
            Self::Misspecified => (1.0, 0.5),
        }
    }

    fn lhs(self, s: &ProbeSample) -> f64 {
        match self {
            Self::DEta | Self::Misspecified => s.deta_l2,
            Self::HorizontalVelocity => s.uh_l2,
            Self::EtaSup => s.eta_linf,
        }
    }

    pub fn ratio(self, s: &ProbeSample) -> f64 {
        let lhs = self.lhs(s);
        if lhs == 0.0 {
            return 0.0;
        }
        let (a, b) = self.powers();
        lhs / (s.e_min.powf(a) * s.e_high.powf(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeSample {
    pub amplitude: f64,
    pub deta_l2: f64,
    pub uh_l2: f64,
    pub eta_linf: f64,
    pub e_min: f64,
    pub e_high: f64,
    pub k_bar: f64,
    pub k_cal: f64,
    pub k_frak: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSettings {
    pub size: usize,
    pub seed: u64,
    /// Amplitudes are log-uniform in this range.
    pub amplitudes: (f64, f64),
    /// Implicit-Euler steps taken from rest so the velocity is nonzero.
    pub steps: usize,
    pub dt: f64,
    pub max_mode: usize,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        Self { size: 50, seed: 7, amplitudes: (1e-4, 1e-2), steps: 2, dt: 0.1, max_mode: 4 }
    }
}

/// Sample one state per ensemble member on `grid`.
pub fn probe_ensemble(
    grid: &Arc<Grid>,
    settings: &EnsembleSettings,
    params: &FunctionalParams,
) -> Result<Vec<ProbeSample>> {
    let mut r = rng(settings.seed);
    let (lo, hi) = settings.amplitudes;
    let members: Vec<(f64, u64)> =
        (0..settings.size).map(|_| (if lo == hi { lo } else { lo * (hi / lo).powf(r.gen::<f64>()) }, r.gen())).collect();
    let stepper = Stepper::new(grid, StepOptions { dt: settings.dt, ..StepOptions::default() })?;
    let run = |i: usize| -> Result<ProbeSample> {
        let (amplitude, seed) = members[i];
        let profile = InitialProfile::Random { amplitude, seed, max_mode: settings.max_mode };
        let mut s = initial_state(grid, &profile)?;
        for _ in 0..settings.steps {
            s = stepper.step(&s)?;
        }
        sample(&s, amplitude, params)
    };
    crate::parallel::map(members.len(), run).into_iter().collect()
}

fn sample(s: &crate::evolve::FlowState, amplitude: f64, params: &FunctionalParams) -> Result<ProbeSample> {
    let h = s.dim() - 1;
    let deta_l2 = (0..h).map(|a| s.eta.dh(a)).map(|d| (&d * &d).integral()).sum();
    let uh_l2 = s.u[..h].iter().map(|c: &BulkField| (c * c).integral()).sum();
    let eta_linf = s.eta.sup().powi(2);
    let report = evaluate_state(s, params)?;
    Ok(ProbeSample {
        amplitude,
        deta_l2,
        uh_l2,
        eta_linf,
        e_min: report.E_min,
        e_high: report.E_high,
        k_bar: report.K_bar,
        k_cal: report.K_cal,
        k_frak: report.K_frak,
    })
}

/// Largest `lhs / rhs` over the samples; zero when every left side vanishes.
pub fn interpolation_probe(samples: &[ProbeSample], row: ProbeRow) -> f64 {
    samples.iter().map(|s| row.ratio(s)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<Grid> {
        Grid::new_2d(32, 20.0, 11, 1.0).unwrap()
    }

    #[test]
    fn flat_ensemble_gives_zero() {
        let s = EnsembleSettings { size: 3, amplitudes: (0.0, 0.0), ..EnsembleSettings::default() };
        let samples = probe_ensemble(&grid(), &s, &FunctionalParams::for_dim(2)).unwrap();
        for row in ProbeRow::ALL {
            assert_eq!(interpolation_probe(&samples, row), 0.0);
        }
    }

    #[test]
    fn correct_rows_bounded_and_misspecified_row_scales() {
        let p = FunctionalParams::for_dim(2);
        let at = |a: f64| {
            let s = EnsembleSettings { size: 4, amplitudes: (a, a), ..EnsembleSettings::default() };
            probe_ensemble(&grid(), &s, &p).unwrap()
        };
        let (small, large) = (at(1e-4), at(1e-2));
        for row in [ProbeRow::DEta, ProbeRow::HorizontalVelocity, ProbeRow::EtaSup] {
            let r = interpolation_probe(&small, row).max(interpolation_probe(&large, row));
            assert!(r <= 10.0, "{}: {r}", row.name());
        }
        let ratio =
            interpolation_probe(&small, ProbeRow::Misspecified) / interpolation_probe(&large, ProbeRow::Misspecified);
        assert!(ratio > 30.0, "{ratio}");
    }
}
