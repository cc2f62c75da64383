//! Instantaneous time derivatives of a state, computed from the equations.
//!
//! Given `(u, η)` the momentum equation fixes `∂_t u + ∇_A p = R` with `R`
//! known, and differentiating `div_A u = 0` in time fixes `div_A ∂_t u`. The
//! normal component of the stress condition gives `p` on `Σ`, and `u = 0` on
//! the bottom gives the normal component of `∂_t u` there. Eliminating `∂_t u`
//! leaves a mixed Poisson problem for the pressure:
//!
//! ```text
//! Δ_A p = div_A R − s,   p = p_Σ on Σ,   K ∂_z p = R_d on the bottom,
//! ```
//!
//! solved by fixed-point iteration around the flat Laplacian. Applying the same
//! construction to the once-differentiated system gives `∂_t p` and `∂_t² u`.

use std::sync::Arc;

use super::poisson::{composed_laplacian, MixedPoisson};
use super::state::FlowState;
use crate::discretization::{dot_surface, traces, BulkField, Grid, SurfaceFunction};
use crate::error::{Error, Result};
use crate::forms::identities::{energy_balance, momentum_rhs, EnergyBalance};
use crate::forms::{assemble_f, divergence_forcing};
use crate::geometry::Geometry;

/// `∂_t^j` layers of a state: three for `u` and `η`, two for `p`.
#[derive(Clone, Debug)]
pub struct TimeLayers {
    pub t: f64,
    /// Geometry with layers built from `η, ∂_t η, ∂_t² η`.
    pub geometry: Geometry,
    pub u: Vec<Vec<BulkField>>,
    pub p: Vec<BulkField>,
    /// Fixed-point iterations used by the two pressure solves.
    pub iterations: [usize; 2],
}

impl TimeLayers {
    pub fn eta(&self, j: usize) -> &SurfaceFunction {
        &self.geometry.layer(j).eta
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.geometry.grid()
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Highest available time derivative of each unknown: `(u, p, η)`.
    pub fn available(&self) -> (usize, usize, usize) {
        (self.u.len() - 1, self.p.len() - 1, self.geometry.time_layers() - 1)
    }
}

/// Reusable solver for the instantaneous pressure problems on one grid.
#[derive(Debug)]
pub struct LayerSolver {
    poisson: MixedPoisson,
    pub tol: f64,
    pub max_iter: usize,
}

/// `(D v N)·N / |N|²` on `Σ` for a symmetric tensor `D`.
fn normal_normal(geo: &Geometry, sym: &[Vec<BulkField>]) -> SurfaceFunction {
    let n = geo.normal();
    let d = geo.dim();
    let mut acc = SurfaceFunction::zeros(geo.grid());
    for i in 0..d {
        for j in 0..d {
            acc += &(&sym[i][j].trace() * &n[i]) * &n[j];
        }
    }
    let nn = dot_surface(n, n);
    acc.zip(&nn, |a, b| a / b)
}

impl LayerSolver {
    pub fn new(grid: &Arc<Grid>) -> Result<Self> {
        Ok(Self { poisson: MixedPoisson::new(grid)?, tol: 1e-13, max_iter: 60 })
    }

    /// Solve `w + ∇_A q = r`, `div_A w = s`, `q = top` on `Σ`, `w_d = 0` on the bottom.
    fn darcy(
        &self,
        geo: &Geometry,
        r: &[BulkField],
        s: &BulkField,
        top: &SurfaceFunction,
    ) -> Result<(BulkField, Vec<BulkField>, usize)> {
        let h = geo.dim() - 1;
        let source = &geo.div_a(r) - s;
        let flux = (geo.jac() * &r[h]).bottom_trace();
        let mut q = self.poisson.solve(&source, top, &flux);
        let mut iterations = 1;
        let mut last = f64::INFINITY;
        loop {
            let corr = &geo.lap_a(&q) - &composed_laplacian(&q);
            let next = self.poisson.solve(&(&source - &corr), top, &flux);
            let change = (&next - &q).sup();
            let scale = next.sup().max(f64::MIN_POSITIVE);
            q = next;
            iterations += 1;
            if !change.is_finite() {
                return Err(Error::Diverged { t: f64::NAN, reason: "pressure iteration produced NaN".into() });
            }
            if change <= self.tol * scale || (change >= 0.5 * last && change <= 1e3 * self.tol * scale) {
                break;
            }
            if iterations >= self.max_iter {
                return Err(Error::Diverged {
                    t: f64::NAN,
                    reason: format!("pressure iteration stalled at relative change {:.2e}", change / scale),
                });
            }
            last = change;
        }
        let gq = geo.grad_a(&q);
        let w = r.iter().zip(&gq).map(|(a, b)| a - b).collect();
        Ok((q, w, iterations))
    }

    /// Pressure and `∂_t u` of `u` in a geometry carrying the `∂_t η` layer.
    pub fn pressure(&self, geo: &Geometry, u: &[BulkField]) -> Result<(BulkField, Vec<BulkField>, usize)> {
        let zero = BulkField::zeros(geo.grid());
        let r = momentum_rhs(geo, u, &zero)?;
        let s = divergence_forcing(geo, &[u.to_vec()], 1)?;
        let top = geo.eta() + &normal_normal(geo, &geo.sym_grad_a(u));
        self.darcy(geo, &r, &s, &top)
    }

    /// All layers up to `∂_t² u`, `∂_t p`, `∂_t² η`.
    pub fn layers(&self, state: &FlowState) -> Result<TimeLayers> {
        let mut geo = state.geometry().clone();
        let u = &state.u;
        let d = state.dim();
        let (p, u_t, it0) = self.pressure(&geo, u)?;

        let eta_tt = &dot_surface(&traces(&u_t), geo.normal()) + &dot_surface(&traces(u), &geo.layer(1).n);
        geo.push_layer(&eta_tt);

        let u_layers = vec![u.clone(), u_t.clone()];
        let f = assemble_f(&geo, &u_layers, std::slice::from_ref(&p), 1)?;
        let kphit = geo.k() * geo.phi_t().expect("layer present");
        let visc = geo.div_a_tensor(&geo.sym_grad_a(&u_t));
        let r: Vec<BulkField> = (0..d)
            .map(|i| {
                let ga = geo.grad_a(&u_t[i]);
                let mut acc = &f.f1[i] + &(&kphit * &u_t[i].dz());
                for j in 0..d {
                    acc -= &u[j] * &ga[j];
                }
                acc + &visc[i]
            })
            .collect();
        let s = divergence_forcing(&geo, &u_layers, 2)?;
        let n = geo.normal();
        let nn = dot_surface(n, n);
        let f3n = dot_surface(&f.f3, n).zip(&nn, |a, b| a / b);
        let top = &(&geo.layer(1).eta + &normal_normal(&geo, &geo.sym_grad_a(&u_t))) + &f3n;
        let (p_t, u_tt, it1) = self.darcy(&geo, &r, &s, &top)?;
        Ok(TimeLayers { t: state.t, geometry: geo, u: vec![u.clone(), u_t, u_tt], p: vec![p, p_t], iterations: [it0, it1] })
    }

    /// Energy balance of a state with the pressure recomputed from `(u, η)`.
    pub fn energy_balance(&self, state: &FlowState) -> Result<EnergyBalance> {
        let (p, _, _) = self.pressure(state.geometry(), &state.u)?;
        energy_balance(state.geometry(), &state.u, &p)
    }
}

/// Time layers of a state with a freshly built solver.
pub fn time_layers(state: &FlowState) -> Result<TimeLayers> {
    LayerSolver::new(state.grid())?.layers(state)
}

/// `|d/dt[½∫J|u|² + ½∫η²] + ½∫J|D_A u|²|` with every time derivative taken
/// from the equations.
pub fn energy_identity_residual(state: &FlowState) -> Result<f64> {
    let b = LayerSolver::new(state.grid())?.energy_balance(state)?;
    Ok((b.rate + b.dissipation).abs())
}
