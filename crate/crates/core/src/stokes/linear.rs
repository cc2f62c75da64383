//! Linearized surface-wave evolution of a single horizontal mode.
//!
//! The flat linear system is `∂_t u − Δu + ∇p = 0`, `div u = 0`,
//! `(pI − Du)e_d = η e_d` on the surface, `∂_t η = u_d`, `u = 0` on the bottom.
//! Each step is one monolithic mode solve in which gravity enters the stress
//! row through `η^{n+1}`:
//!
//! - implicit Euler: `σ = 1/dt`, `γ = dt`
//! - Crank–Nicolson: `σ = 2/dt`, `γ = dt/2`, unknown pressure `2p^{n+½}`

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::mode::{surface_traction, Boundary, ModeData, ModeOperator, Wavenumber};
use super::vertical::Vertical;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "ie")]
    ImplicitEuler,
    #[serde(rename = "cn")]
    CrankNicolson,
}

impl Scheme {
    /// Coefficients `(σ, γ)` of the mode operator for step `dt`.
    pub fn coefficients(self, dt: f64) -> (f64, f64) {
        match self {
            Scheme::ImplicitEuler => (1.0 / dt, dt),
            Scheme::CrankNicolson => (2.0 / dt, 0.5 * dt),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Scheme::ImplicitEuler => 1,
            Scheme::CrankNicolson => 2,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ie" | "implicit-euler" => Ok(Scheme::ImplicitEuler),
            "cn" | "crank-nicolson" => Ok(Scheme::CrankNicolson),
            _ => Err(Error::Config(format!("unknown scheme '{s}' (expected ie or cn)"))),
        }
    }
}

/// Velocity profiles and surface amplitude of one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModeState {
    pub u: Vec<Vec<C>>,
    pub eta: C,
    pub t: f64,
}

impl LinearModeState {
    pub fn rest(dim: usize, n: usize, eta: C) -> Self {
        Self { u: vec![vec![C::new(0.0, 0.0); n]; dim], eta, t: 0.0 }
    }

    /// `½(∫|û|² dz + |η̂|²)`.
    pub fn energy(&self, v: &Vertical) -> f64 {
        let ke: f64 = self.u.iter().map(|c| v.integrate(&c.iter().map(|x| x.norm_sqr()).collect::<Vec<_>>())).sum();
        0.5 * (ke + self.eta.norm_sqr())
    }

    /// Flatten to `(û_0, …, û_{d−1}, η̂)`.
    pub fn to_vector(&self) -> Vec<C> {
        let mut out: Vec<C> = self.u.iter().flatten().copied().collect();
        out.push(self.eta);
        out
    }

    pub fn from_vector(x: &[C], dim: usize, t: f64) -> Self {
        let n = (x.len() - 1) / dim;
        Self { u: (0..dim).map(|c| x[c * n..(c + 1) * n].to_vec()).collect(), eta: x[dim * n], t }
    }
}

/// Cached factorization for repeated steps of one mode.
#[derive(Debug)]
pub struct LinearStepper {
    op: ModeOperator,
    scheme: Scheme,
    dt: f64,
}

impl LinearStepper {
    pub fn new(vertical: Arc<Vertical>, dim: usize, wave: Wavenumber, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let (sigma, gamma) = scheme.coefficients(dt);
        let op = ModeOperator::new(vertical, dim, wave, Boundary::Stress, sigma, gamma)?;
        Ok(Self { op, scheme, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn operator(&self) -> &ModeOperator {
        &self.op
    }

    /// Right-hand side for stepping `state` with additional explicit forcing
    /// `extra` (momentum, divergence, traction, kinematic); the linear part of
    /// the old level is included for Crank–Nicolson.
    pub fn data(&self, state: &LinearModeState) -> ModeData {
        let v = self.op.vertical();
        let n = v.len();
        let dim = self.op.dim();
        let wave = self.op.wave();
        let (sigma, _) = self.scheme.coefficients(self.dt);
        let mut data = ModeData::zeros(dim, n);
        match self.scheme {
            Scheme::ImplicitEuler => {
                for comp in 0..dim {
                    for i in 0..n {
                        data.f[comp][i] = state.u[comp][i] * sigma;
                    }
                }
                data.top[dim - 1] = state.eta;
            }
            Scheme::CrankNicolson => {
                for comp in 0..dim {
                    let d2 = v.apply(2, &state.u[comp]);
                    for i in 0..n {
                        data.f[comp][i] = state.u[comp][i] * (sigma - wave.ksq) + d2[i];
                    }
                }
                // old traction; the old pressure cancels against 2p^{n+½}
                let old = surface_traction(v, &wave, &state.u, C::new(0.0, 0.0));
                for comp in 0..dim - 1 {
                    data.top[comp] = -old[comp];
                }
                data.top[dim - 1] = -old[dim - 1] + state.eta * 2.0 + state.u[dim - 1][0] * (0.5 * self.dt);
            }
        }
        data
    }

    /// Surface update `η^{n+1}` from the new vertical surface velocity.
    pub fn eta_update(&self, state: &LinearModeState, w_new: C) -> C {
        let dim = self.op.dim();
        match self.scheme {
            Scheme::ImplicitEuler => state.eta + w_new * self.dt,
            Scheme::CrankNicolson => state.eta + (w_new + state.u[dim - 1][0]) * (0.5 * self.dt),
        }
    }

    pub fn step(&self, state: &LinearModeState) -> Result<LinearModeState> {
        let sol = self.op.solve(&self.data(state))?;
        let dim = self.op.dim();
        let eta = self.eta_update(state, sol.u[dim - 1][0]);
        let out = LinearModeState { u: sol.u, eta, t: state.t + self.dt };
        if !eta.re.is_finite() || !eta.im.is_finite() {
            return Err(Error::Diverged { t: out.t, reason: "non-finite surface amplitude".into() });
        }
        Ok(out)
    }

    /// Dense matrix of one step acting on [`LinearModeState::to_vector`].
    pub fn step_matrix(&self) -> Result<DMatrix<C>> {
        let dim = self.op.dim();
        let n = self.op.vertical().len();
        let size = dim * n + 1;
        let mut m = DMatrix::<C>::zeros(size, size);
        for j in 0..size {
            let mut e = vec![C::new(0.0, 0.0); size];
            e[j] = C::new(1.0, 0.0);
            let next = self.step(&LinearModeState::from_vector(&e, dim, 0.0))?.to_vector();
            for (i, v) in next.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }
}

/// One step of the coupled `(û, η̂)` system.
pub fn linear_mode_evolve(
    state: &LinearModeState,
    vertical: &Arc<Vertical>,
    wave: Wavenumber,
    dt: f64,
    scheme: Scheme,
) -> Result<LinearModeState> {
    LinearStepper::new(vertical.clone(), state.u.len(), wave, dt, scheme)?.step(state)
}

/// Eigenvalues of the semi-discrete mode operator, most slowly decaying
/// first. They are recovered exactly from the implicit-Euler step matrix
/// through `λ = (1 − 1/μ)/dt`; the algebraic (constrained) directions map to
/// `μ = 0` and are dropped.
pub fn mode_eigenvalues(vertical: &Arc<Vertical>, dim: usize, wave: Wavenumber, dt: f64) -> Result<Vec<C>> {
    let s = LinearStepper::new(vertical.clone(), dim, wave, dt, Scheme::ImplicitEuler)?.step_matrix()?;
    let schur = nalgebra::linalg::Schur::try_new(s, 1e-15, 10_000)
        .ok_or_else(|| Error::SingularMode { k: wave.magnitude() })?;
    let (_, t) = schur.unpack();
    let mut lam: Vec<C> = (0..t.nrows())
        .map(|i| t[(i, i)])
        .filter(|mu| mu.norm() > 1e-9)
        .map(|mu| (C::new(1.0, 0.0) - mu.inv()) / dt)
        .collect();
    lam.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
    Ok(lam)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vert(n: usize) -> Arc<Vertical> {
        Arc::new(Vertical::new(n, 1.0))
    }

    #[test]
    fn rest_is_fixed_point() {
        let v = vert(17);
        let s = LinearModeState::rest(2, 17, C::new(0.0, 0.0));
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let next = linear_mode_evolve(&s, &v, Wavenumber::from_vector([0.7, 0.0]), 0.1, scheme).unwrap();
            assert!(next.to_vector().iter().all(|c| c.norm() == 0.0));
        }
    }

    #[test]
    fn energy_is_nonincreasing_and_divergence_free() {
        let v = vert(25);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            for k in [[0.3, 0.0], [2.0, 0.0], [0.4, 0.9]] {
                let w = Wavenumber::from_vector(k);
                let dim = if k[1] == 0.0 { 2 } else { 3 };
                let st = LinearStepper::new(v.clone(), dim, w, 0.05, scheme).unwrap();
                let mut s = LinearModeState::rest(dim, 25, C::new(1.0, 0.0));
                let mut e = s.energy(&v);
                for _ in 0..200 {
                    s = st.step(&s).unwrap();
                    let e2 = s.energy(&v);
                    assert!(e2 <= e * (1.0 + 1e-12), "{scheme:?} {k:?}: {e2} > {e}");
                    e = e2;
                    let dw = v.apply(1, &s.u[dim - 1]);
                    for i in 1..24 {
                        let div: C = (0..dim - 1).map(|c| w.ik[c] * s.u[c][i]).sum::<C>() + dw[i];
                        assert!(div.norm() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn decay_rate_matches_eigenvalues() {
        let v = vert(25);
        let w = Wavenumber::from_vector([0.5, 0.0]);
        let lam = mode_eigenvalues(&v, 2, w, 0.1).unwrap();
        let rate = lam[0].re;
        assert!(rate < 0.0);
        // slowest mode is real here, so |η̂| decays monotonically
        assert!(lam[0].im.abs() < 1e-8, "{:?}", lam[0]);
        let dt = 0.02;
        let st = LinearStepper::new(v.clone(), 2, w, dt, Scheme::CrankNicolson).unwrap();
        let mut s = LinearModeState::rest(2, 25, C::new(1.0, 0.0));
        let mut samples = Vec::new();
        let mut prev = f64::INFINITY;
        for step in 1..=1500 {
            s = st.step(&s).unwrap();
            if step > 250 {
                assert!(s.eta.norm() < prev);
            }
            prev = s.eta.norm();
            if step % 250 == 0 {
                samples.push((s.t, s.eta.norm().ln()));
            }
        }
        let (t0, l0) = samples[2];
        let (t1, l1) = *samples.last().unwrap();
        let fitted = (l1 - l0) / (t1 - t0);
        assert!((fitted / rate - 1.0).abs() < 0.02, "fitted {fitted} vs eigen {rate}");
    }

    #[test]
    fn cn_is_second_order() {
        let v = vert(21);
        let w = Wavenumber::from_vector([1.0, 0.0]);
        let run = |dt: f64, scheme: Scheme| {
            let st = LinearStepper::new(v.clone(), 2, w, dt, scheme).unwrap();
            let mut s = LinearModeState::rest(2, 21, C::new(1.0, 0.0));
            // smooth start: begin from the state reached after t = 1
            let pre = LinearStepper::new(v.clone(), 2, w, 1e-3, Scheme::ImplicitEuler).unwrap();
            for _ in 0..1000 {
                s = pre.step(&s).unwrap();
            }
            for _ in 0..(1.0 / dt).round() as usize {
                s = st.step(&s).unwrap();
            }
            s.eta
        };
        for (scheme, order) in [(Scheme::ImplicitEuler, 1.0), (Scheme::CrankNicolson, 2.0)] {
            let (a, b, c) = (run(0.1, scheme), run(0.05, scheme), run(0.025, scheme));
            let p = ((a - b).norm() / (b - c).norm()).log2();
            assert!((p - order).abs() < 0.2, "{scheme:?}: {p}");
        }
    }
}
