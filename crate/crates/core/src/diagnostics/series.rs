//! One row of the trajectory time series per snapshot.

use std::sync::Arc;

use serde::Serialize;

use super::functionals::{evaluate_functionals, EnergyReport, FunctionalParams};
use crate::discretization::Grid;
use crate::error::Result;
use crate::evolve::{FlowState, LayerSolver};

pub const CSV_COLUMNS: [&str; 11] = [
    "t",
    "E_high",
    "D_high",
    "E_min",
    "D_min",
    "F",
    "K_frak",
    "K_bar",
    "J_min",
    "div_residual",
    "energy_identity_residual",
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub e_high: f64,
    pub d_high: f64,
    pub e_min: f64,
    pub d_min: f64,
    pub f: f64,
    pub k_frak: f64,
    pub k_bar: f64,
    pub j_min: f64,
    pub div_residual: f64,
    pub energy_identity_residual: f64,
}

impl SeriesRow {
    /// Values in [`CSV_COLUMNS`] order.
    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.e_high,
            self.d_high,
            self.e_min,
            self.d_min,
            self.f,
            self.k_frak,
            self.k_bar,
            self.j_min,
            self.div_residual,
            self.energy_identity_residual,
        ]
    }
}

/// Evaluates snapshots of one grid with a shared layer solver.
#[derive(Debug)]
pub struct Diagnoser {
    solver: LayerSolver,
    params: FunctionalParams,
}

impl Diagnoser {
    pub fn new(grid: &Arc<Grid>, params: FunctionalParams) -> Result<Self> {
        params.validate(grid.dim())?;
        Ok(Self { solver: LayerSolver::new(grid)?, params })
    }

    pub fn params(&self) -> &FunctionalParams {
        &self.params
    }

    pub fn evaluate(&self, state: &FlowState) -> Result<(SeriesRow, EnergyReport)> {
        let layers = self.solver.layers(state)?;
        let r = evaluate_functionals(&layers, &self.params)?;
        let b = self.solver.energy_balance(state)?;
        let row = SeriesRow {
            t: state.t,
            e_high: r.E_high,
            d_high: r.D_high,
            e_min: r.E_min,
            d_min: r.D_min,
            f: r.F,
            k_frak: r.K_frak,
            k_bar: r.K_bar,
            j_min: state.min_jacobian(),
            div_residual: state.divergence_residual(),
            energy_identity_residual: (b.rate + b.dissipation).abs(),
        };
        Ok((row, r))
    }
}
