//! Energy functionals, the pointwise functionals, the combined norm `G`,
//! decay fits, the anisotropy report and interpolation probes.

pub mod anisotropy;
pub mod fit;
pub mod functionals;
pub mod pointwise;
pub mod probes;
pub mod series;
pub mod total;

pub use anisotropy::{anisotropy_quantities, anisotropy_report, AnisotropyReport, AnisotropyRow};
pub use fit::{fit_decay, log_log_slope, DecayFit};
pub use functionals::{evaluate_functionals, EnergyReport, FunctionalParams};
pub use pointwise::{pointwise_functionals, Pointwise};
pub use probes::{interpolation_probe, probe_ensemble, EnsembleSettings, ProbeRow, ProbeSample};
pub use series::{Diagnoser, SeriesRow, CSV_COLUMNS};
pub use total::{g_total, GTotal, G_PARTS};

use crate::error::Result;
use crate::evolve::{time_layers, FlowState};

/// Time layers from the equations, then every functional.
pub fn evaluate_state(state: &FlowState, params: &FunctionalParams) -> Result<EnergyReport> {
    evaluate_functionals(&time_layers(state)?, params)
}
