//! Decay exponents of the velocity families and the anisotropy check.

use std::collections::BTreeMap;

use serde::Serialize;

use super::fit::{fit_decay, DecayFit};
use crate::discretization::BulkField;
use crate::evolve::FlowState;
use crate::stokes::quadrature::{SUP_DUH, SUP_UD, SUP_UH, SURF_DZUH};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnisotropyRow {
    pub series: String,
    pub fit: Option<DecayFit>,
    /// Upper bound on the exponent.
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnisotropyReport {
    pub rows: Vec<AnisotropyRow>,
    pub swapped: bool,
    /// Every row fitted and within its bound.
    pub holds: bool,
}

/// Fit `sup|u_d|²`, `sup|Du_h|²`, `|∂_d u_h|²` on `Σ` (bound `-1.8`) and
/// `sup|u_h|²` (bound `-(2-κ) + 0.2`) over `window`. With `swap` the `u_h`
/// and `u_d` series trade places, which should break the ordering.
pub fn anisotropy_report(
    times: &[f64],
    series: &BTreeMap<String, Vec<f64>>,
    kappa: f64,
    window: (f64, f64),
    swap: bool,
) -> AnisotropyReport {
    let fast = -1.8;
    let slow = -(2.0 - kappa) + 0.2;
    let pick = |name: &'static str| -> &'static str {
        match (swap, name) {
            (true, SUP_UD) => SUP_UH,
            (true, SUP_UH) => SUP_UD,
            (_, n) => n,
        }
    };
    let rows: Vec<AnisotropyRow> = [(SUP_UD, fast), (SUP_DUH, fast), (SURF_DZUH, fast), (SUP_UH, slow)]
        .into_iter()
        .map(|(name, bound)| {
            let fit = series.get(pick(name)).and_then(|v| {
                let pts: Vec<(f64, f64)> = times.iter().copied().zip(v.iter().copied()).collect();
                fit_decay(&pts, window).ok()
            });
            let passed = fit.is_some_and(|f| f.slope <= bound);
            AnisotropyRow { series: name.to_string(), fit, bound, passed }
        })
        .collect();
    let holds = rows.iter().all(|r| r.passed);
    AnisotropyReport { rows, swapped: swap, holds }
}

/// The four anisotropy quantities of a state, keyed like the quadrature table.
pub fn anisotropy_quantities(state: &FlowState) -> BTreeMap<String, f64> {
    let d = state.dim();
    let h = d - 1;
    let sq = |f: &BulkField| f * f;
    let mut uh = BulkField::zeros(state.grid());
    let mut duh = BulkField::zeros(state.grid());
    let mut dzuh = BulkField::zeros(state.grid());
    for c in 0..h {
        uh += sq(&state.u[c]);
        for a in 0..h {
            duh += sq(&state.u[c].dh(a));
        }
        dzuh += sq(&state.u[c].dz());
    }
    let mut out = BTreeMap::new();
    out.insert(SUP_UH.to_string(), uh.sup());
    out.insert(SUP_DUH.to_string(), duh.sup());
    out.insert(SUP_UD.to_string(), sq(&state.u[h]).sup());
    out.insert(SURF_DZUH.to_string(), dzuh.trace().sup());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(ud: f64, uh: f64) -> (Vec<f64>, BTreeMap<String, Vec<f64>>) {
        let t: Vec<f64> = (0..=50).map(|i| i as f64).collect();
        let law = |e: f64| t.iter().map(|&t| (1.0 + t).powf(e)).collect::<Vec<_>>();
        let mut m = BTreeMap::new();
        m.insert(SUP_UD.to_string(), law(ud));
        m.insert(SUP_DUH.to_string(), law(-2.0));
        m.insert(SURF_DZUH.to_string(), law(-2.0));
        m.insert(SUP_UH.to_string(), law(uh));
        (t, m)
    }

    #[test]
    fn anisotropic_decay_passes_and_swap_fails() {
        let (t, m) = synthetic(-2.0, -1.5);
        assert!(anisotropy_report(&t, &m, 0.5, (5.0, 50.0), false).holds);
        assert!(!anisotropy_report(&t, &m, 0.5, (5.0, 50.0), true).holds);
    }

    #[test]
    fn zero_series_are_empty() {
        let t: Vec<f64> = (0..10).map(f64::from).collect();
        let m: BTreeMap<String, Vec<f64>> =
            [SUP_UD, SUP_DUH, SURF_DZUH, SUP_UH].iter().map(|k| (k.to_string(), vec![0.0; 10])).collect();
        let r = anisotropy_report(&t, &m, 0.5, (1.0, 9.0), false);
        assert!(r.rows.iter().all(|row| row.fit.is_none() && !row.passed));
        assert!(!r.holds);
    }
}
