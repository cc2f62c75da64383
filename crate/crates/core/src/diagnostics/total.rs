//! The combined time-weighted norm `G` of a trajectory.

use serde::Serialize;

use super::functionals::{EnergyReport, FunctionalParams};

pub const G_PARTS: [&str; 8] = [
    "sup E_high",
    "int D_high",
    "sup E_plus/(1+t)^theta",
    "int E_plus/(1+t)^(1+theta)",
    "int D_plus/(1+t)^(theta+kappa)",
    "sup F/(1+t)^(1+theta)",
    "int F/(1+t)^(2+theta)",
    "sup (1+t)^2 E_min",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GTotal {
    pub value: f64,
    /// The eight constituents at the last sample, in [`G_PARTS`] order.
    pub parts: [f64; 8],
    pub times: Vec<f64>,
    /// `G` at every sample time.
    pub series: Vec<f64>,
    /// Each constituent at every sample time.
    pub part_series: Vec<[f64; 8]>,
}

/// Running sups over the samples and trapezoidal time integrals.
pub fn g_total(reports: &[EnergyReport], params: &FunctionalParams) -> GTotal {
    let th = params.theta;
    let ka = params.kappa;
    let w = |t: f64, e: f64| (1.0 + t).powf(e);
    let integrands = |r: &EnergyReport| {
        [r.D_high, r.E_plus / w(r.t, 1.0 + th), r.D_plus / w(r.t, th + ka), r.F / w(r.t, 2.0 + th)]
    };
    let sups = |r: &EnergyReport| [r.E_high, r.E_plus / w(r.t, th), r.F / w(r.t, 1.0 + th), w(r.t, 2.0) * r.E_min];

    let mut s = [0.0f64; 4];
    let mut i = [0.0f64; 4];
    let mut out = GTotal { value: 0.0, parts: [0.0; 8], times: Vec::new(), series: Vec::new(), part_series: Vec::new() };
    let mut prev: Option<(f64, [f64; 4])> = None;
    for r in reports {
        let cur = integrands(r);
        if let Some((t0, p)) = prev {
            let dt = r.t - t0;
            for k in 0..4 {
                i[k] += 0.5 * dt * (p[k] + cur[k]);
            }
        }
        prev = Some((r.t, cur));
        for (k, v) in sups(r).into_iter().enumerate() {
            s[k] = s[k].max(v);
        }
        let parts = [s[0], i[0], s[1], i[1], i[2], s[2], i[3], s[3]];
        out.times.push(r.t);
        out.series.push(parts.iter().sum());
        out.part_series.push(parts);
        out.parts = parts;
    }
    out.value = out.parts.iter().sum();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use crate::evolve::{initial_state, time_layers, InitialProfile};
    use crate::diagnostics::evaluate_functionals;

    fn zero_report(params: &FunctionalParams) -> EnergyReport {
        let g = Grid::new_2d(8, 10.0, 7, 1.0).unwrap();
        let s = initial_state(&g, &InitialProfile::Cosine { amplitude: 0.0, mode: [1, 0] }).unwrap();
        evaluate_functionals(&time_layers(&s).unwrap(), params).unwrap()
    }

    fn synthetic(params: &FunctionalParams, dt: f64, t_end: f64) -> Vec<EnergyReport> {
        let base = zero_report(params);
        let n = (t_end / dt).round() as usize;
        (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                let mut r = base.clone();
                r.t = t;
                r.E_high = 1.0 + 0.1 * (-t).exp();
                r.D_high = (-0.5 * t).exp();
                r.E_plus = 1.0 + t;
                r.D_plus = 0.3;
                r.F = (1.0 + t).powi(2);
                r.E_min = (1.0 + t).powi(-2) * (1.0 + 0.2 * (t).sin());
                r
            })
            .collect()
    }

    #[test]
    fn zero_trajectory_gives_zero() {
        let p = FunctionalParams::for_dim(2);
        let r = zero_report(&p);
        let g = g_total(&[r.clone(), EnergyReport { t: 1.0, ..r }], &p);
        assert_eq!(g.value, 0.0);
        assert_eq!(g.series.len(), 2);
    }

    #[test]
    fn sups_and_integrals() {
        let p = FunctionalParams::for_dim(2);
        let g = g_total(&synthetic(&p, 0.01, 10.0), &p);
        assert!((g.parts[0] - 1.1).abs() < 1e-12);
        // ∫ e^{-t/2} on [0, 10]
        assert!((g.parts[1] - 2.0 * (1.0 - (-5.0f64).exp())).abs() < 1e-4);
        assert!(g.series.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn doubling_cadence_changes_g_little() {
        let p = FunctionalParams::for_dim(2);
        let a = g_total(&synthetic(&p, 0.2, 20.0), &p).value;
        let b = g_total(&synthetic(&p, 0.1, 20.0), &p).value;
        assert!((a - b).abs() < 0.01 * b, "{a} vs {b}");
    }
}
