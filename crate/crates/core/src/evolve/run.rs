//! Driver: repeated steps, monitoring, snapshots and checkpoints.

use std::collections::HashMap;
use std::path::PathBuf;

use super::state::FlowState;
use super::step::{step_doubling_error, StepOptions, Stepper};
use crate::error::{Error, Result};
use crate::stokes::Scheme;

#[derive(Clone, Debug)]
pub struct RunSettings {
    pub step: StepOptions,
    pub t_end: f64,
    /// Time between snapshots handed to the observer.
    pub snapshot_every: f64,
    /// Start Crank–Nicolson with four implicit-Euler half steps.
    pub rannacher: bool,
    /// Halve `dt` while the step-doubling error exceeds this.
    pub adaptive_tol: Option<f64>,
    /// Overwritten with the latest snapshot.
    pub checkpoint: Option<PathBuf>,
    pub keep_snapshots: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            step: StepOptions::default(),
            t_end: 1.0,
            snapshot_every: 0.1,
            rannacher: true,
            adaptive_tol: None,
            checkpoint: None,
            keep_snapshots: true,
        }
    }
}

/// Cheap per-step quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorSample {
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    pub min_jacobian: f64,
    pub divergence_residual: f64,
    pub velocity_h1: f64,
    pub iterations: usize,
}

impl MonitorSample {
    fn of(s: &FlowState, dt: f64, iterations: usize) -> Self {
        Self {
            t: s.t,
            dt,
            energy: s.energy(),
            min_jacobian: s.min_jacobian(),
            divergence_residual: s.divergence_residual(),
            velocity_h1: s.velocity_h1(),
            iterations,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub snapshots: Vec<FlowState>,
    pub monitor: Vec<MonitorSample>,
    pub steps: usize,
    pub final_state: Option<FlowState>,
}

impl Trajectory {
    pub fn final_state(&self) -> &FlowState {
        self.final_state.as_ref().expect("run produced a state")
    }

    /// `true` when the energy never rises by more than `rel` of its start value.
    pub fn energy_nonincreasing(&self, rel: f64) -> bool {
        let e0 = self.monitor.first().map_or(0.0, |m| m.energy);
        self.monitor.windows(2).all(|w| w[1].energy <= w[0].energy + rel * e0)
    }
}

struct Steppers {
    base: StepOptions,
    cache: HashMap<(u64, bool), Stepper>,
}

impl Steppers {
    fn get(&mut self, state: &FlowState, dt: f64, scheme: Scheme) -> Result<&Stepper> {
        let key = (dt.to_bits(), scheme == Scheme::CrankNicolson);
        if !self.cache.contains_key(&key) {
            let opts = StepOptions { dt, scheme, ..self.base };
            self.cache.insert(key, Stepper::new(state.grid(), opts)?);
        }
        Ok(&self.cache[&key])
    }
}

/// Integrate from `initial` to `settings.t_end`, calling `observer` on the
/// initial state and on every snapshot.
pub fn run(
    initial: FlowState,
    settings: &RunSettings,
    mut observer: impl FnMut(&FlowState) -> Result<()>,
) -> Result<Trajectory> {
    let base = settings.step;
    if !(settings.snapshot_every > 0.0) {
        return Err(Error::Config("snapshot interval must be positive".into()));
    }
    let mut steppers = Steppers { base, cache: HashMap::new() };
    let mut traj = Trajectory::default();
    let mut state = initial;
    let eps = 1e-9 * base.dt;
    traj.monitor.push(MonitorSample::of(&state, 0.0, 0));
    let mut next_snap = state.t + settings.snapshot_every;
    observe(&state, settings, &mut traj, &mut observer)?;

    let mut warmup: usize = if settings.rannacher && base.scheme == Scheme::CrankNicolson { 4 } else { 0 };
    let mut dt = base.dt;
    while state.t < settings.t_end - eps {
        let (scheme, mut h) =
            if warmup > 0 { (Scheme::ImplicitEuler, 0.5 * dt) } else { (base.scheme, dt) };
        if settings.t_end - state.t < h - eps {
            h = settings.t_end - state.t;
        }
        if let Some(tol) = settings.adaptive_tol {
            let mut tries = 0;
            while step_doubling_error(&state, StepOptions { dt: h, scheme, ..base })? > tol {
                h *= 0.5;
                dt = dt.min(h);
                tries += 1;
                if tries > 8 {
                    return Err(Error::Diverged { t: state.t, reason: "step size collapsed".into() });
                }
            }
        }
        let (next, report) = steppers.get(&state, h, scheme)?.step_with_report(&state)?;
        warmup = warmup.saturating_sub(1);
        state = next;
        traj.steps += 1;
        let sample = MonitorSample::of(&state, h, report.iterations);
        if !sample.energy.is_finite() {
            return Err(Error::Diverged { t: state.t, reason: "non-finite energy".into() });
        }
        traj.monitor.push(sample);
        if state.t >= next_snap - eps || state.t >= settings.t_end - eps {
            observe(&state, settings, &mut traj, &mut observer)?;
            while next_snap <= state.t + eps {
                next_snap += settings.snapshot_every;
            }
        }
    }
    traj.final_state = Some(state);
    Ok(traj)
}

fn observe(
    state: &FlowState,
    settings: &RunSettings,
    traj: &mut Trajectory,
    observer: &mut impl FnMut(&FlowState) -> Result<()>,
) -> Result<()> {
    observer(state)?;
    if let Some(path) = &settings.checkpoint {
        state.write_checkpoint(path)?;
    }
    if settings.keep_snapshots {
        traj.snapshots.push(state.clone());
    }
    Ok(())
}

/// Differences between runs to `t_end` with steps `dt` and `dt/2`, for each
/// `dt`, with the fitted order of their decay.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDoublingStudy {
    pub dts: Vec<f64>,
    /// Sup-norm difference of `(u, η)` relative to `sup |η|` at `t_end`.
    pub differences: Vec<f64>,
    pub order: f64,
}

pub fn step_doubling_study(initial: &FlowState, settings: &RunSettings, dts: &[f64]) -> Result<StepDoublingStudy> {
    let solve = |dt: f64| -> Result<FlowState> {
        let s = RunSettings {
            step: StepOptions { dt, ..settings.step },
            snapshot_every: settings.t_end.max(dt),
            adaptive_tol: None,
            checkpoint: None,
            keep_snapshots: false,
            ..settings.clone()
        };
        Ok(run(initial.clone(), &s, |_| Ok(()))?.final_state().clone())
    };
    let mut differences = Vec::with_capacity(dts.len());
    for &dt in dts {
        let (a, b) = (solve(dt)?, solve(0.5 * dt)?);
        let du = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).sup()).fold(0.0, f64::max);
        let de = (&a.eta - &b.eta).sup();
        differences.push(du.max(de) / a.eta.sup().max(f64::MIN_POSITIVE));
    }
    let order = crate::diagnostics::fit::log_log_slope(dts, &differences)?;
    Ok(StepDoublingStudy { dts: dts.to_vec(), differences, order })
}
