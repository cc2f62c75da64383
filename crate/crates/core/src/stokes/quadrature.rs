//! Linear decay on the unbounded horizontal domain.
//!
//! The solution is a superposition of modes: the wavenumber integral is
//! approximated by Gauss–Legendre quadrature in `ρ = |ξ|`, each node evolved
//! by the per-mode linear stepper. The initial velocity is zero and the
//! initial surface is radial, `η̂₀(ξ) = a(|ξ|)`, so in 3D every node is the 2D
//! mode problem with `k = (ρ, 0)` (the transverse component stays zero).
//!
//! Nodes are placed by `ρ = ρ_lo + (ρ_hi − ρ_lo) s²` so the `ξ → 0`
//! neighbourhood, which carries the algebraic rates, is densely sampled.
//! Time stepping is Crank–Nicolson started by four half-size implicit Euler
//! steps, which removes the stiff start-up components CN would otherwise
//! carry along undamped.

use std::collections::BTreeMap;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::linear::{LinearStepper, Scheme};
use super::mode::Wavenumber;
use super::vertical::Vertical;
use crate::error::{Error, Result};
use crate::parallel;

pub const ETA: &str = "eta_l2";
pub const DETA: &str = "deta_l2";
pub const D2ETA: &str = "d2eta_l2";
pub const U_H2: &str = "u_h2";
pub const SUP_UH: &str = "sup_uh";
pub const SUP_DUH: &str = "sup_duh";
pub const SUP_UD: &str = "sup_ud";
pub const SURF_DZUH: &str = "surf_dzuh";

/// Initial surface spectrum `a(ρ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `e^{−ρ²}`
    Gaussian,
    /// `ρ^{−1/2} e^{−ρ²}`: in one horizontal dimension this reproduces the
    /// low-frequency weight of the two-dimensional Gaussian.
    Critical,
    /// `e^{−(ρ−2)²}` restricted to `ρ ≥ 1`
    Highpass,
}

impl Profile {
    pub fn amplitude(self, rho: f64) -> f64 {
        match self {
            Profile::Gaussian => (-rho * rho).exp(),
            Profile::Critical => (-rho * rho).exp() / rho.sqrt(),
            Profile::Highpass if rho >= 1.0 => (-(rho - 2.0) * (rho - 2.0)).exp(),
            Profile::Highpass => 0.0,
        }
    }

    fn support(self, rho_max: f64) -> (f64, f64) {
        match self {
            Profile::Highpass => (1.0, 1.0 + rho_max),
            _ => (0.0, rho_max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Gaussian => "gaussian",
            Profile::Critical => "critical",
            Profile::Highpass => "highpass",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Profile::Gaussian),
            "critical" => Ok(Profile::Critical),
            "highpass" => Ok(Profile::Highpass),
            _ => Err(Error::Config(format!("unknown profile '{s}' (gaussian, critical, highpass)"))),
        }
    }
}

/// Resolution parameters of the quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// fluid dimension: 2 (line surface) or 3 (plane surface)
    pub dim: usize,
    pub nodes: usize,
    pub nz: usize,
    pub depth: f64,
    pub dt: f64,
    /// upper end of the `ρ` interval; the Gaussian tail beyond is below 1e−27
    pub rho_max: f64,
    /// recompute with twice the nodes and report the relative change
    pub check_refinement: bool,
    /// sup norms sample `x = s √(1+t)` for `s ∈ [0, sup_extent]`
    pub sup_samples: usize,
    pub sup_extent: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            dim: 3,
            nodes: 200,
            nz: 33,
            depth: 1.0,
            dt: 0.05,
            rho_max: 8.0,
            check_refinement: false,
            sup_samples: 41,
            sup_extent: 4.0,
        }
    }
}

/// Squared norms of the linear solution at the observation times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayTable {
    pub profile: Profile,
    pub dim: usize,
    pub times: Vec<f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    /// max relative change under node doubling, if checked
    pub refinement_change: Option<f64>,
    pub warning: Option<String>,
}

impl DecayTable {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.get(name).map(|v| v.as_slice())
    }

    /// `(t, value)` pairs of one norm.
    pub fn pairs(&self, name: &str) -> Vec<(f64, f64)> {
        self.series(name).map(|v| self.times.iter().copied().zip(v.iter().copied()).collect()).unwrap_or_default()
    }

    /// Long-format CSV: `t,norm_name,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,norm_name,value\n");
        for (name, vals) in &self.series {
            for (t, v) in self.times.iter().zip(vals) {
                s.push_str(&format!("{t:.6},{name},{v:.12e}\n"));
            }
        }
        s
    }
}

/// Node states `(û_x, û_z, η̂)` for a unit initial surface at every time.
fn evolve_node(vertical: &Arc<Vertical>, rho: f64, times: &[f64], dt: f64) -> Result<Vec<Vec<C>>> {
    let wave = Wavenumber::from_vector([rho, 0.0]);
    let n = vertical.len();
    let size = 2 * n + 1;
    let half = LinearStepper::new(vertical.clone(), 2, wave, 0.5 * dt, Scheme::ImplicitEuler)?.step_matrix()?;
    let cn = LinearStepper::new(vertical.clone(), 2, wave, dt, Scheme::CrankNicolson)?.step_matrix()?;
    let mut x0 = DVector::<C>::zeros(size);
    x0[size - 1] = C::new(1.0, 0.0);
    let mut start = x0.clone();
    for _ in 0..4 {
        start = &half * start;
    }
    let mut powers: Vec<DMatrix<C>> = vec![cn];
    let mut cur = start.clone();
    let mut cur_steps = 0usize;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let x = if t <= 0.0 {
            x0.clone()
        } else if t < 2.0 * dt {
            let mut x = x0.clone();
            for _ in 0..((2.0 * t / dt).round() as usize).max(1) {
                x = &half * x;
            }
            x
        } else {
            let target = ((t - 2.0 * dt) / dt).round() as usize;
            if target < cur_steps {
                return Err(Error::IncompatibleData("observation times must be increasing".into()));
            }
            let mut delta = target - cur_steps;
            let mut bit = 0;
            while delta > 0 {
                while powers.len() <= bit {
                    let p = powers.last().expect("nonempty");
                    let sq = p * p;
                    powers.push(sq);
                }
                if delta & 1 == 1 {
                    cur = &powers[bit] * cur;
                }
                delta >>= 1;
                bit += 1;
            }
            cur_steps = target;
            cur.clone()
        };
        out.push(x.iter().copied().collect());
    }
    Ok(out)
}

fn quadrature(profile: Profile, opts: &QuadratureOptions, nodes: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let gl = GaussLegendre::new(nodes).map_err(|e| Error::Config(format!("quadrature: {e}")))?;
    let (lo, hi) = profile.support(opts.rho_max);
    let len = hi - lo;
    let mut rho = Vec::with_capacity(nodes);
    let mut w = Vec::with_capacity(nodes);
    for &(x, wx) in gl.as_node_weight_pairs() {
        let s = 0.5 * (x + 1.0);
        rho.push(lo + len * s * s);
        // dρ = 2 len s ds, ds = dx/2
        w.push(wx * len * s);
    }
    Ok((rho, w))
}

fn table(profile: Profile, times: &[f64], opts: &QuadratureOptions, nodes: usize) -> Result<DecayTable> {
    if !(opts.dim == 2 || opts.dim == 3) {
        return Err(Error::Config(format!("quadrature dimension must be 2 or 3, got {}", opts.dim)));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Config("observation times must be nonnegative and increasing".into()));
    }
    let vertical = Arc::new(Vertical::new(opts.nz, opts.depth));
    let (rho, w) = quadrature(profile, opts, nodes)?;
    let states: Vec<Result<Vec<Vec<C>>>> = parallel::map(rho.len(), |q| evolve_node(&vertical, rho[q], times, opts.dt));
    let states: Vec<Vec<Vec<C>>> = states.into_iter().collect::<Result<_>>()?;
    let n = opts.nz;

    // Plancherel measure including the angular factor
    let measure: Vec<f64> = rho
        .iter()
        .zip(&w)
        .map(|(&r, &wq)| if opts.dim == 2 { wq / std::f64::consts::PI } else { wq * r / (2.0 * std::f64::consts::PI) })
        .collect();
    let amp: Vec<f64> = rho.iter().map(|&r| profile.amplitude(r)).collect();

    let mut series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let names: &[&str] =
        if opts.dim == 2 { &[ETA, DETA, D2ETA, U_H2, SUP_UH, SUP_DUH, SUP_UD, SURF_DZUH] } else { &[ETA, DETA, D2ETA, U_H2] };
    for name in names {
        series.insert(name.to_string(), Vec::with_capacity(times.len()));
    }
    for (it, &t) in times.iter().enumerate() {
        let mut eta = [0.0; 3];
        let mut uh2 = 0.0;
        for q in 0..rho.len() {
            let x = &states[q][it];
            let a = amp[q];
            let e2 = (x[2 * n] * a).norm_sqr();
            for (j, e) in eta.iter_mut().enumerate() {
                *e += measure[q] * rho[q].powi(2 * j as i32) * e2;
            }
            for comp in 0..2 {
                let u0: Vec<C> = x[comp * n..(comp + 1) * n].iter().map(|c| c * a).collect();
                let u1 = vertical.apply(1, &u0);
                let u2 = vertical.apply(2, &u0);
                let sq = |v: &[C]| vertical.integrate(&v.iter().map(|c| c.norm_sqr()).collect::<Vec<_>>());
                let (i0, i1, i2) = (sq(&u0), sq(&u1), sq(&u2));
                let r2 = rho[q] * rho[q];
                // Σ_{i+j≤2} |ξ|^{2i} ‖∂_z^j û‖²
                uh2 += measure[q] * (i0 * (1.0 + r2 + r2 * r2) + i1 * (1.0 + r2) + i2);
            }
        }
        series.get_mut(ETA).expect("present").push(eta[0]);
        series.get_mut(DETA).expect("present").push(eta[1]);
        series.get_mut(D2ETA).expect("present").push(eta[2]);
        series.get_mut(U_H2).expect("present").push(uh2);

        if opts.dim == 2 {
            let sups = sup_norms(&vertical, &rho, &w, &amp, &states, it, t, opts);
            for (name, v) in [SUP_UH, SUP_DUH, SUP_UD, SURF_DZUH].iter().zip(sups) {
                series.get_mut(*name).expect("present").push(v);
            }
        }
    }
    Ok(DecayTable { profile, dim: opts.dim, times: times.to_vec(), series, refinement_change: None, warning: None })
}

/// Squared sup norms of `u_x`, `∂_x u_x`, `u_z` over the bulk and of
/// `∂_z u_x` on the surface, sampled on the diffusive scale `x ∝ √(1+t)`.
#[allow(clippy::too_many_arguments)]
fn sup_norms(
    vertical: &Vertical,
    rho: &[f64],
    w: &[f64],
    amp: &[f64],
    states: &[Vec<Vec<C>>],
    it: usize,
    t: f64,
    opts: &QuadratureOptions,
) -> [f64; 4] {
    let n = vertical.len();
    let mut out = [0.0f64; 4];
    let dz_top: Vec<C> = (0..rho.len())
        .map(|q| (0..n).map(|j| states[q][it][j] * vertical.d1(0, j)).sum())
        .collect();
    for k in 0..opts.sup_samples {
        let x = opts.sup_extent * k as f64 / (opts.sup_samples - 1).max(1) as f64 * (1.0 + t).sqrt();
        let phase: Vec<C> = rho.iter().zip(w).zip(amp).map(|((&r, &wq), &a)| C::from_polar(wq * a, r * x)).collect();
        for iz in 0..n {
            let (mut ux, mut dux, mut uz) = (C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
            for q in 0..rho.len() {
                let s = &states[q][it];
                ux += phase[q] * s[iz];
                dux += phase[q] * s[iz] * C::new(0.0, rho[q]);
                uz += phase[q] * s[n + iz];
            }
            let f = std::f64::consts::FRAC_1_PI;
            out[0] = out[0].max((f * ux.re).powi(2));
            out[1] = out[1].max((f * dux.re).powi(2));
            out[2] = out[2].max((f * uz.re).powi(2));
        }
        let top: C = (0..rho.len()).map(|q| phase[q] * dz_top[q]).sum();
        out[3] = out[3].max((std::f64::consts::FRAC_1_PI * top.re).powi(2));
    }
    out
}

/// Decay table of the linear problem from `η̂₀ = profile`, `u₀ = 0`.
pub fn line_decay_quadrature(profile: Profile, times: &[f64], opts: &QuadratureOptions) -> Result<DecayTable> {
    let mut tab = table(profile, times, opts, opts.nodes)?;
    if opts.check_refinement {
        let fine = table(profile, times, opts, 2 * opts.nodes)?;
        let mut change = 0.0f64;
        for (name, coarse) in &tab.series {
            let f = &fine.series[name];
            for (a, b) in coarse.iter().zip(f) {
                let s = a.abs().max(b.abs());
                if s > 0.0 {
                    change = change.max((a - b).abs() / s);
                }
            }
        }
        tab.refinement_change = Some(change);
        if change > 0.01 {
            tab.warning = Some(format!("doubling the quadrature nodes changes the table by {:.2}%", 100.0 * change));
        }
    }
    Ok(tab)
}

/// `n` log-spaced times in `[a, b]`.
pub fn log_times(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slope(tab: &DecayTable, name: &str) -> f64 {
        let v = tab.series(name).unwrap();
        let x: Vec<f64> = tab.times.iter().map(|t| (1.0 + t).ln()).collect();
        let y: Vec<f64> = v.iter().map(|v| v.ln()).collect();
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        sxy / sxx
    }

    fn small() -> QuadratureOptions {
        QuadratureOptions { nodes: 80, nz: 17, ..Default::default() }
    }

    #[test]
    fn initial_norms_are_profile_integrals() {
        let tab = line_decay_quadrature(Profile::Gaussian, &[0.0], &small()).unwrap();
        // ∫ e^{−2ρ²} 2πρ dρ / (2π)² = 1/(8π)
        let want = 1.0 / (8.0 * std::f64::consts::PI);
        assert!((tab.series(ETA).unwrap()[0] / want - 1.0).abs() < 1e-10);
        // ∫ ρ² e^{−2ρ²} 2πρ dρ / (2π)² = 1/(16π)
        let want1 = 1.0 / (16.0 * std::f64::consts::PI);
        assert!((tab.series(DETA).unwrap()[0] / want1 - 1.0).abs() < 1e-10);
        assert_eq!(tab.series(U_H2).unwrap()[0], 0.0);
    }

    #[test]
    fn gaussian_rates_are_asymptotically_exact() {
        let times = log_times(200.0, 4000.0, 12);
        let tab = line_decay_quadrature(Profile::Gaussian, &times, &small()).unwrap();
        for (name, want, tol) in [(ETA, -1.0, 0.02), (DETA, -2.0, 0.04), (D2ETA, -3.0, 0.06), (U_H2, -2.0, 0.02)] {
            let s = slope(&tab, name);
            assert!((s - want).abs() < tol, "{name}: {s}");
        }
    }

    #[test]
    fn critical_profile_is_anisotropic() {
        let times = log_times(10.0, 200.0, 12);
        let tab = line_decay_quadrature(Profile::Critical, &times, &QuadratureOptions { dim: 2, ..small() }).unwrap();
        assert!(slope(&tab, SUP_UD) <= -1.8);
        assert!(slope(&tab, SUP_DUH) <= -1.8);
        let uh = slope(&tab, SUP_UH);
        assert!(uh <= -1.3 && uh > -1.8, "{uh}");
    }

    #[test]
    fn refinement_is_stable() {
        let opts = QuadratureOptions { check_refinement: true, ..small() };
        let tab = line_decay_quadrature(Profile::Gaussian, &[0.0, 20.0, 100.0], &opts).unwrap();
        assert!(tab.refinement_change.unwrap() < 0.01);
        assert!(tab.warning.is_none());
    }

    #[test]
    fn highpass_decays_fast() {
        let times = log_times(10.0, 200.0, 8);
        let tab = line_decay_quadrature(Profile::Highpass, &times, &small()).unwrap();
        for name in [ETA, DETA, D2ETA, U_H2] {
            assert!(slope(&tab, name) < -4.0, "{name}");
        }
    }

    #[test]
    fn csv_layout() {
        let tab = line_decay_quadrature(Profile::Gaussian, &[0.0, 1.0], &small()).unwrap();
        let csv = tab.to_csv();
        assert!(csv.starts_with("t,norm_name,value\n"));
        assert_eq!(csv.lines().count(), 1 + 2 * 4);
    }
}
