//! IMEX time step: flat Stokes-plus-gravity operator implicit per mode, the
//! geometric terms `G¹..G⁴` as forcing.
//!
//! Implicit Euler with a single fixed-point pass evaluates `G` at the old
//! state and is the plain explicit-forcing scheme. Further passes re-evaluate
//! `G` at the new iterate; Crank–Nicolson always iterates, with `G` averaged
//! between the two levels and its pressure part taken at the half step.
//! Each pass contracts by a factor of the surface slope, independent of `dt`.

use std::sync::Arc;

use num_complex::Complex64 as C;

use super::state::FlowState;
use crate::discretization::{BulkField, Grid, SurfaceFunction};
use crate::error::{Error, Result};
use crate::forms::nonlinear::{assemble_g, g11, NonlinearTerms};
use crate::geometry::Geometry;
use crate::parallel;
use crate::stokes::{surface_traction, Boundary, ModeData, ModeOperator, Scheme, Vertical, Wavenumber};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub scheme: Scheme,
    pub dt: f64,
    /// Relative change below which the fixed-point iteration stops.
    pub picard_tol: f64,
    /// Passes per step; `1` with implicit Euler is the explicit-forcing scheme.
    pub picard_max: usize,
    /// Truncate the forcing to the two-thirds band.
    pub dealias: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { scheme: Scheme::ImplicitEuler, dt: 0.01, picard_tol: 1e-12, picard_max: 30, dealias: false }
    }
}

/// Outcome of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    /// Relative change of the last pass.
    pub change: f64,
}

pub struct Stepper {
    grid: Arc<Grid>,
    vertical: Arc<Vertical>,
    opts: StepOptions,
    /// One representative of every conjugate pair of modes.
    modes: Vec<usize>,
    ops: Vec<ModeOperator>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper").field("opts", &self.opts).field("modes", &self.modes.len()).finish()
    }
}

/// Coefficients of the forcing at one level.
struct Forcing {
    g1: Vec<Vec<C>>,
    g2: Vec<C>,
    g3: Vec<Vec<C>>,
    g4: Vec<C>,
}

impl Forcing {
    fn new(g: &NonlinearTerms, dealias: bool) -> Self {
        let b = |f: &BulkField| if dealias { f.dealiased().coefficients() } else { f.coefficients() };
        let s = |f: &SurfaceFunction| if dealias { f.dealiased().coefficients() } else { f.coefficients() };
        Self {
            g1: g.g1.iter().map(b).collect(),
            g2: b(&g.g2),
            g3: g.g3.iter().map(s).collect(),
            g4: s(&g.g4),
        }
    }

    /// Accumulate the evolution parts; `G²` stays at the new level since the
    /// divergence constraint is not averaged.
    fn add(&mut self, other: &Forcing) {
        let add = |a: &mut Vec<C>, b: &Vec<C>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        self.g1.iter_mut().zip(&other.g1).for_each(|(a, b)| add(a, b));
        self.g3.iter_mut().zip(&other.g3).for_each(|(a, b)| add(a, b));
        add(&mut self.g4, &other.g4);
    }
}

/// Pressure-dependent part of `G`: `G^{1,1}` and `Dη p` in the horizontal
/// surface components.
fn pressure_forcing(geo: &Geometry, p: &BulkField, dealias: bool) -> Forcing {
    let d = geo.dim();
    let h = d - 1;
    let g1 = g11(geo, p);
    let pt = p.trace();
    let deta = geo.eta().gradient();
    let mut g3: Vec<SurfaceFunction> = (0..h).map(|c| &deta[c] * &pt).collect();
    g3.push(SurfaceFunction::zeros(geo.grid()));
    let terms = NonlinearTerms {
        g1,
        g1_parts: Vec::new(),
        g2: BulkField::zeros(geo.grid()),
        g3,
        g4: SurfaceFunction::zeros(geo.grid()),
    };
    Forcing::new(&terms, dealias)
}

/// Per-mode pieces of the old level used by Crank–Nicolson.
struct OldLevel {
    u: Vec<Vec<C>>,
    eta: Vec<C>,
    forcing: Option<Forcing>,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, opts: StepOptions) -> Result<Self> {
        if !(opts.dt > 0.0 && opts.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", opts.dt)));
        }
        if opts.picard_max == 0 {
            return Err(Error::Config("picard_max must be at least 1".into()));
        }
        let vertical = Arc::new(Vertical::new(grid.nz(), grid.depth()));
        let (sigma, gamma) = opts.scheme.coefficients(opts.dt);
        let modes: Vec<usize> = (0..grid.nh()).filter(|&ih| ih <= grid.conjugate_index(ih)).collect();
        let ops = parallel::map(modes.len(), |m| {
            let wave = Wavenumber::from_grid(grid, modes[m]);
            let g = if wave.is_zero() { 0.0 } else { gamma };
            ModeOperator::new(vertical.clone(), grid.dim(), wave, Boundary::Stress, sigma, g)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid: grid.clone(), vertical, opts, modes, ops })
    }

    pub fn options(&self) -> StepOptions {
        self.opts
    }

    pub fn dt(&self) -> f64 {
        self.opts.dt
    }

    pub fn step(&self, state: &FlowState) -> Result<FlowState> {
        self.step_with_report(state).map(|(s, _)| s)
    }

    pub fn step_with_report(&self, state: &FlowState) -> Result<(FlowState, StepReport)> {
        if !Arc::ptr_eq(state.grid(), &self.grid) && !same_shape(state.grid(), &self.grid) {
            return Err(Error::IncompatibleData("state and stepper grids differ".into()));
        }
        let t_new = state.t + self.opts.dt;
        let dealias = self.opts.dealias;
        let cn = self.opts.scheme == Scheme::CrankNicolson;
        let old = OldLevel {
            u: state.u.iter().map(BulkField::coefficients).collect(),
            eta: state.eta.coefficients(),
            forcing: if cn {
                let zero = BulkField::zeros(&self.grid);
                Some(Forcing::new(&assemble_g(state.geometry(), &state.u, &zero)?, dealias))
            } else {
                None
            },
        };

        let mut cand = state.clone();
        let mut report = StepReport::default();
        for it in 1..=self.opts.picard_max {
            let mut forcing = Forcing::new(&assemble_g(cand.geometry(), &cand.u, &cand.p)?, dealias);
            if let Some(of) = &old.forcing {
                forcing.add(of);
                forcing.add(&pressure_forcing(state.geometry(), &cand.p, dealias));
            }
            let (u, p, eta) = self.solve_modes(&old, &forcing)?;
            let next = FlowState::new(u, p, eta, t_new).map_err(|e| match e {
                Error::DegenerateMapping { .. } => e,
                other => Error::Diverged { t: t_new, reason: other.to_string() },
            })?;
            if !next.is_finite() {
                return Err(Error::Diverged { t: t_new, reason: "non-finite values in the new state".into() });
            }
            let change = relative_change(&cand, &next);
            cand = next;
            report = StepReport { iterations: it, change };
            if change <= self.opts.picard_tol {
                return Ok((cand, report));
            }
        }
        if self.opts.picard_max == 1 || report.change <= 1e3 * self.opts.picard_tol {
            return Ok((cand, report));
        }
        Err(Error::Diverged {
            t: t_new,
            reason: format!(
                "fixed-point iteration did not converge in {} passes (change {:.2e})",
                self.opts.picard_max, report.change
            ),
        })
    }

    fn solve_modes(&self, old: &OldLevel, g: &Forcing) -> Result<(Vec<BulkField>, BulkField, SurfaceFunction)> {
        let grid = &self.grid;
        let (nz, nh) = (grid.nz(), grid.nh());
        let dim = grid.dim();
        let h = dim - 1;
        let dt = self.opts.dt;
        let cn = self.opts.scheme == Scheme::CrankNicolson;
        let (sigma, _) = self.opts.scheme.coefficients(dt);
        let v = &self.vertical;

        let solved = parallel::map(self.modes.len(), |m| -> Result<(Vec<Vec<C>>, Vec<C>, C)> {
            let ih = self.modes[m];
            let op = &self.ops[m];
            let wave = op.wave();
            let at = |a: &[C], iz: usize| a[iz * nh + ih];
            let u_old: Vec<Vec<C>> = (0..dim).map(|c| (0..nz).map(|iz| at(&old.u[c], iz)).collect()).collect();
            let mut data = ModeData::zeros(dim, nz);
            for i in 0..nz {
                data.h[i] = at(&g.g2, i);
            }
            let eta_old = old.eta[ih];
            let w0_old = u_old[h][0];
            let eta_new_without_w;
            if cn {
                for (c, uc) in u_old.iter().enumerate() {
                    let d2 = v.apply(2, uc);
                    for i in 0..nz {
                        data.f[c][i] = uc[i] * (sigma - wave.ksq) + d2[i] + at(&g.g1[c], i);
                    }
                }
                let trac = surface_traction(v, &wave, &u_old, C::new(0.0, 0.0));
                for c in 0..dim {
                    data.top[c] = -trac[c] + g.g3[c][ih];
                }
                data.top[h] += eta_old * 2.0;
                let g4 = g.g4[ih];
                if !wave.is_zero() {
                    data.top[h] += (w0_old + g4) * (0.5 * dt);
                }
                eta_new_without_w = eta_old + (w0_old + g4) * (0.5 * dt);
            } else {
                for (c, uc) in u_old.iter().enumerate() {
                    for i in 0..nz {
                        data.f[c][i] = uc[i] * sigma + at(&g.g1[c], i);
                    }
                }
                for c in 0..dim {
                    data.top[c] = g.g3[c][ih];
                }
                data.top[h] += eta_old;
                if !wave.is_zero() {
                    data.top[h] += g.g4[ih] * dt;
                }
                eta_new_without_w = eta_old + g.g4[ih] * dt;
            }
            let sol = op.solve(&data)?;
            let eta_new = if wave.is_zero() {
                eta_old
            } else {
                let w = if cn { 0.5 * dt } else { dt };
                eta_new_without_w + sol.u[h][0] * w
            };
            Ok((sol.u, sol.p, eta_new))
        });

        let zero = C::new(0.0, 0.0);
        let mut u = vec![vec![zero; nz * nh]; dim];
        let mut p = vec![zero; nz * nh];
        let mut eta = vec![zero; nh];
        let p_scale = if cn { 0.5 } else { 1.0 };
        for (m, res) in solved.into_iter().enumerate() {
            let (su, sp, se) = res?;
            let ih = self.modes[m];
            let conj = grid.conjugate_index(ih);
            for iz in 0..nz {
                for c in 0..dim {
                    u[c][iz * nh + ih] = su[c][iz];
                    u[c][iz * nh + conj] = su[c][iz].conj();
                }
                p[iz * nh + ih] = sp[iz] * p_scale;
                p[iz * nh + conj] = (sp[iz] * p_scale).conj();
            }
            eta[ih] = se;
            eta[conj] = se.conj();
        }
        Ok((
            u.iter().map(|c| BulkField::from_coefficients(grid, c)).collect(),
            BulkField::from_coefficients(grid, &p),
            SurfaceFunction::from_coefficients(grid, &eta),
        ))
    }
}

fn same_shape(a: &Grid, b: &Grid) -> bool {
    a.dim() == b.dim()
        && (a.nx(), a.ny(), a.nz()) == (b.nx(), b.ny(), b.nz())
        && a.period(0) == b.period(0)
        && (a.dim() == 2 || a.period(1) == b.period(1))
        && a.depth() == b.depth()
}

fn relative_change(a: &FlowState, b: &FlowState) -> f64 {
    let du = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).sup()).fold(0.0, f64::max);
    let su = b.u.iter().map(BulkField::sup).fold(0.0, f64::max);
    let de = (&a.eta - &b.eta).sup();
    let se = b.eta.sup();
    let rel = |d: f64, s: f64| if d == 0.0 { 0.0 } else { d / s.max(f64::MIN_POSITIVE) };
    rel(du, su).max(rel(de, se))
}

/// `‖one step − two half steps‖_∞` relative to the state size.
pub fn step_doubling_error(state: &FlowState, opts: StepOptions) -> Result<f64> {
    let full = Stepper::new(state.grid(), opts)?.step(state)?;
    let half = Stepper::new(state.grid(), StepOptions { dt: 0.5 * opts.dt, ..opts })?;
    let two = half.step(&half.step(state)?)?;
    let scale = full.u.iter().map(BulkField::sup).fold(full.eta.sup(), f64::max).max(f64::MIN_POSITIVE);
    let du = full.u.iter().zip(&two.u).map(|(a, b)| (a - b).sup()).fold(0.0, f64::max);
    Ok(du.max((&full.eta - &two.eta).sup()) / scale)
}
