//! Run configuration: a TOML file of typed keys plus `section.key=value`
//! overrides, validated before anything is computed.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::FunctionalParams;
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::evolve::{InitialProfile, RunSettings, StepOptions};
use crate::stokes::Scheme;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    pub length: f64,
    pub depth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nz: usize,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityInit {
    /// `u₀ = 0` with the pressure the equations assign to `η₀`.
    Rest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub eta: InitialProfile,
    #[serde(default = "rest")]
    pub velocity: VelocityInit,
}

fn rest() -> VelocityInit {
    VelocityInit::Rest
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "ie")]
    pub scheme: Scheme,
    #[serde(default = "yes")]
    pub rannacher: bool,
    /// Step-doubling tolerance for automatic halving.
    #[serde(default)]
    pub adaptive_tol: Option<f64>,
    #[serde(default = "picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "picard_max")]
    pub picard_max: usize,
}

fn ie() -> Scheme {
    Scheme::ImplicitEuler
}
fn yes() -> bool {
    true
}
fn picard_tol() -> f64 {
    StepOptions::default().picard_tol
}
fn picard_max() -> usize {
    StepOptions::default().picard_max
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagConfig {
    pub n_diag: usize,
    pub theta: f64,
    pub kappa: f64,
    #[serde(default)]
    pub s_f: Option<f64>,
    /// Time between diagnostic snapshots.
    pub cadence: f64,
    /// Fit window for decay exponents.
    pub fit_window: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
    /// Store every snapshot state, not just the latest checkpoint.
    #[serde(default)]
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub init: InitConfig,
    pub time: TimeConfig,
    pub diag: DiagConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    /// The small-data reference run.
    fn default() -> Self {
        Self {
            domain: DomainConfig { dim: 2, length: 400.0, depth: 1.0 },
            grid: GridConfig { nx: 256, nz: 33, dealias: false },
            init: InitConfig { eta: InitialProfile::Gaussian { amplitude: 1e-3, width: 4.0 }, velocity: rest() },
            time: TimeConfig {
                dt: 0.01,
                t_end: 50.0,
                scheme: ie(),
                rannacher: true,
                adaptive_tol: None,
                picard_tol: picard_tol(),
                picard_max: picard_max(),
            },
            diag: DiagConfig { n_diag: 1, theta: 0.1, kappa: 0.5, s_f: None, cadence: 0.5, fit_window: [5.0, 50.0] },
            output: OutputConfig { directory: "out".into(), formats: vec![Format::Csv, Format::Json], snapshots: false },
        }
    }
}

impl RunConfig {
    /// Parse `text`, apply `overrides` (`section.key=value`, the value in
    /// TOML syntax or a bare string) and validate.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The defaults with `overrides` applied.
    pub fn default_with(overrides: &[String]) -> Result<Self> {
        Self::from_toml(&Self::default().to_toml(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = &self.domain;
        if d.dim != 2 {
            return bad(format!("domain.dim = {}: the time stepper is two-dimensional", d.dim));
        }
        if !(d.length > 0.0 && d.length.is_finite()) || !(d.depth > 0.0 && d.depth.is_finite()) {
            return bad("domain.length and domain.depth must be positive".into());
        }
        if self.grid.nx < 4 || self.grid.nx % 2 != 0 || self.grid.nz < 5 {
            return bad(format!("grid {}x{}: need even nx >= 4 and nz >= 5", self.grid.nx, self.grid.nz));
        }
        if !self.init.eta.amplitude().is_finite() {
            return bad("init.eta.amplitude must be finite".into());
        }
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) || !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            return bad("time.dt must be positive and time.t_end nonnegative".into());
        }
        if t.adaptive_tol.is_some_and(|v| !(v > 0.0)) || !(t.picard_tol > 0.0) || t.picard_max == 0 {
            return bad("time.adaptive_tol, time.picard_tol and time.picard_max must be positive".into());
        }
        if !(self.diag.cadence > 0.0) {
            return bad("diag.cadence must be positive".into());
        }
        let [a, b] = self.diag.fit_window;
        if !(a >= 0.0 && b > a) {
            return bad(format!("diag.fit_window [{a}, {b}] is empty"));
        }
        self.functional_params().validate(d.dim)?;
        if self.output.formats.is_empty() {
            return bad("output.formats is empty".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new_2d(self.grid.nx, self.domain.length, self.grid.nz, self.domain.depth)
    }

    pub fn functional_params(&self) -> FunctionalParams {
        let d = &self.diag;
        FunctionalParams { n_diag: d.n_diag, theta: d.theta, kappa: d.kappa, s_f: d.s_f }
    }

    pub fn run_settings(&self) -> RunSettings {
        let t = &self.time;
        RunSettings {
            step: StepOptions {
                scheme: t.scheme,
                dt: t.dt,
                picard_tol: t.picard_tol,
                picard_max: t.picard_max,
                dealias: self.grid.dealias,
            },
            t_end: t.t_end,
            snapshot_every: self.diag.cadence,
            rannacher: t.rannacher,
            adaptive_tol: t.adaptive_tol,
            checkpoint: None,
            keep_snapshots: true,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) =
        spec.split_once('=').ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields one item");
    let mut cur = table;
    for k in parents {
        cur = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{spec}': '{k}' is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml(), &[]).unwrap(), c);
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::default_with(&[
            "time.dt=0.005".into(),
            "time.scheme=cn".into(),
            "init.eta.amplitude=1e-2".into(),
            "output.directory=elsewhere".into(),
        ])
        .unwrap();
        assert_eq!(c.time.dt, 0.005);
        assert_eq!(c.time.scheme, Scheme::CrankNicolson);
        assert_eq!(c.init.eta.amplitude(), 1e-2);
        assert_eq!(c.output.directory, PathBuf::from("elsewhere"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::default_with(&["time.dtt=0.1".into()]).unwrap_err();
        assert!(e.to_string().contains("dtt"), "{e}");
        assert!(RunConfig::default_with(&["extra.x=1".into()]).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for o in ["time.dt=0", "grid.nx=7", "domain.dim=3", "diag.kappa=0.3", "diag.fit_window=[5, 1]"] {
            assert!(RunConfig::default_with(&[o.into()]).is_err(), "{o}");
        }
    }
}
