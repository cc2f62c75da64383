//! Browser bindings: a small nonlinear run, the linear decay table and a
//! power-law fit. Each binding wraps a plain function that also runs natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use flatwave::diagnostics::fit_decay;
use flatwave::evolve::{initial_state, run, InitialProfile, RunSettings, StepOptions};
use flatwave::stokes::quadrature::{log_times, QuadratureOptions};
use flatwave::stokes::{line_decay_quadrature, Profile};
use flatwave::Grid;

#[derive(Serialize)]
struct Frame {
    t: f64,
    eta: Vec<f64>,
    energy: f64,
}

#[derive(Serialize)]
struct Evolution {
    x: Vec<f64>,
    frames: Vec<Frame>,
}

/// Gaussian surface released from rest on a 64 × 13 grid of length 40.
/// Returns `{x, frames: [{t, eta, energy}]}` as JSON.
pub fn evolve_json(amplitude: f64, width: f64, t_end: f64, frames: usize) -> Result<String, String> {
    if !(t_end >= 0.0 && t_end <= 200.0) || frames == 0 {
        return Err("need 0 <= t_end <= 200 and at least one frame".into());
    }
    let grid = Grid::new_2d(64, 40.0, 13, 1.0).map_err(|e| e.to_string())?;
    let s0 = initial_state(&grid, &InitialProfile::Gaussian { amplitude, width }).map_err(|e| e.to_string())?;
    let settings = RunSettings {
        step: StepOptions { dt: 0.05, ..StepOptions::default() },
        t_end,
        snapshot_every: (t_end / frames as f64).max(0.05),
        keep_snapshots: false,
        ..RunSettings::default()
    };
    let mut out = Vec::new();
    run(s0, &settings, |s| {
        out.push(Frame { t: s.t, eta: s.eta.values().to_vec(), energy: s.energy() });
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    let x = (0..grid.nx()).map(|j| j as f64 * grid.period(0) / grid.nx() as f64).collect();
    Ok(serde_json::to_string(&Evolution { x, frames: out }).expect("serializable"))
}

/// Linear decay table on the plane (`dim = 3`) or line (`dim = 2`) at coarse
/// quadrature resolution, as JSON.
pub fn decay_json(profile: &str, dim: usize, tmax: f64, samples: usize) -> Result<String, String> {
    let profile: Profile = profile.parse().map_err(|e: flatwave::Error| e.to_string())?;
    if !(tmax > 1.0) || samples < 2 || !(dim == 2 || dim == 3) {
        return Err("need tmax > 1, samples >= 2, dim 2 or 3".into());
    }
    let opts = QuadratureOptions { dim, nodes: 60, nz: 13, ..QuadratureOptions::default() };
    let tab = line_decay_quadrature(profile, &log_times(1.0, tmax, samples), &opts).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&tab).expect("serializable"))
}

/// OLS slope of `ln v` against `ln(1 + t)` over `[a, b]`, as JSON.
pub fn fit_json(t: &[f64], v: &[f64], a: f64, b: f64) -> Result<String, String> {
    if t.len() != v.len() {
        return Err("t and v differ in length".into());
    }
    let series: Vec<(f64, f64)> = t.iter().copied().zip(v.iter().copied()).collect();
    let fit = fit_decay(&series, (a, b)).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&fit).expect("serializable"))
}

#[wasm_bindgen]
pub fn evolve(amplitude: f64, width: f64, t_end: f64, frames: usize) -> Result<String, JsValue> {
    evolve_json(amplitude, width, t_end, frames).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn linear_decay(profile: &str, dim: usize, tmax: f64, samples: usize) -> Result<String, JsValue> {
    decay_json(profile, dim, tmax, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fit(t: Vec<f64>, v: Vec<f64>, a: f64, b: f64) -> Result<String, JsValue> {
    fit_json(&t, &v, a, b).map_err(|e| JsValue::from_str(&e))
}
