//! The five subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use flatwave::config::{Format, RunConfig};
use flatwave::diagnostics::{
    anisotropy_quantities, anisotropy_report, fit_decay as fit_series, g_total, AnisotropyReport, DecayFit, Diagnoser, EnergyReport,
    GTotal, SeriesRow, CSV_COLUMNS, G_PARTS,
};
use flatwave::evolve::{initial_state, run, FlowState, MonitorSample, RunSettings};
use flatwave::forms::identities::{run_identity_battery, IdentityCheck, IdentityConfig};
use flatwave::stokes::quadrature::{log_times, QuadratureOptions, D2ETA, DETA, ETA, SUP_UH, U_H2};
use flatwave::stokes::{line_decay_quadrature, Profile};

use crate::output::{create_dir, csv_with_provenance, json_with_provenance, read_column, write, Provenance};
use crate::{out_dir, Failure};

#[derive(Args, Debug)]
pub struct IdentityArgs {
    #[arg(long, default_value_t = IdentityConfig::default().seed)]
    seed: u64,
    /// Sup norm of the random surface.
    #[arg(long, default_value_t = 0.1)]
    amplitude: f64,
    #[arg(long, default_value_t = 128)]
    nx: usize,
    #[arg(long, default_value_t = 33)]
    nz: usize,
    #[arg(long, default_value_t = 20.0)]
    length: f64,
    #[arg(long, default_value_t = 1.0)]
    depth: f64,
    /// Corrupt the stress remainder to confirm the battery can fail.
    #[arg(long)]
    break_g3: bool,
    #[arg(long)]
    skip_3d: bool,
    #[arg(long)]
    skip_temporal: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct IdentityReport<'a> {
    passed: bool,
    checks: &'a [IdentityCheck],
}

pub fn check_identities(a: &IdentityArgs) -> Result<(), Failure> {
    let cfg = IdentityConfig {
        nx: a.nx,
        nz: a.nz,
        length: a.length,
        depth: a.depth,
        amplitude: a.amplitude,
        seed: a.seed,
        break_g3: a.break_g3,
        include_3d: !a.skip_3d,
        include_temporal: !a.skip_temporal,
        ..IdentityConfig::default()
    };
    let checks = run_identity_battery(&cfg)?;
    let passed = checks.iter().all(|c| c.passed);
    let text = json_with_provenance(&Provenance::of(&format!("{a:?}")), &IdentityReport { passed, checks: &checks });
    match &a.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} (residual {:.3e}, scale {:.3e}, tolerance {:.0e})", c.name, c.residual, c.scale, c.tolerance))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("identity check failed: {}", failed.join("; "))))
    }
}

#[derive(Args, Debug)]
pub struct DecayArgs {
    /// gaussian, critical or highpass
    #[arg(long, default_value = "gaussian")]
    profile: Profile,
    /// Fluid dimension: 2 (line surface) or 3 (plane surface, radial data).
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 10.0)]
    tmin: f64,
    /// Zero gives the initial norms only.
    #[arg(long, default_value_t = 200.0)]
    tmax: f64,
    /// Log-spaced observation times in [tmin, tmax].
    #[arg(long, default_value_t = 24)]
    samples: usize,
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    #[arg(long, default_value_t = 33)]
    nz: usize,
    #[arg(long, default_value_t = 1.0)]
    depth: f64,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    /// Also recompute with doubled nodes and report the change.
    #[arg(long)]
    refine: bool,
    /// Exit 1 if an expected exponent is missed.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExponentRow {
    series: String,
    fit: Option<DecayFit>,
    expected: String,
    passed: Option<bool>,
}

#[derive(Serialize)]
struct DecaySummary {
    profile: Profile,
    dim: usize,
    window: (f64, f64),
    exponents: Vec<ExponentRow>,
    anisotropy: Option<AnisotropyReport>,
    anisotropy_swapped: Option<AnisotropyReport>,
    refinement_change: Option<f64>,
    warning: Option<String>,
}

pub fn linear_decay(a: &DecayArgs) -> Result<(), Failure> {
    let times = if a.tmax == 0.0 {
        vec![0.0]
    } else if a.tmin > 0.0 && a.tmax > a.tmin && a.samples >= 2 {
        log_times(a.tmin, a.tmax, a.samples)
    } else {
        return Err(Failure::Usage("need 0 < tmin < tmax and samples >= 2, or tmax = 0".into()));
    };
    let opts = QuadratureOptions {
        dim: a.dim,
        nodes: a.nodes,
        nz: a.nz,
        depth: a.depth,
        dt: a.dt,
        check_refinement: a.refine,
        ..QuadratureOptions::default()
    };
    let tab = line_decay_quadrature(a.profile, &times, &opts)?;
    let window = (a.tmin, a.tmax);
    let fitted = times.len() >= 3;

    let expectations: Vec<(&str, Option<(f64, f64)>)> = match a.profile {
        Profile::Gaussian => {
            vec![(ETA, Some((-1.0, 0.15))), (DETA, Some((-2.0, 0.2))), (D2ETA, Some((-3.0, 0.3))), (U_H2, Some((-2.0, 0.15)))]
        }
        _ => vec![(ETA, None), (DETA, None), (D2ETA, None), (U_H2, None)],
    };
    let exponents: Vec<ExponentRow> = expectations
        .into_iter()
        .map(|(name, exp)| {
            let fit = fitted.then(|| fit_series(&tab.pairs(name), window).ok()).flatten();
            let (expected, passed) = match (a.profile, exp) {
                (_, Some((e, tol))) => (format!("{e} ± {tol}"), fit.as_ref().map(|f| (f.slope - e).abs() <= tol)),
                (Profile::Highpass, None) => ("<= -4".into(), fit.as_ref().map(|f| f.slope <= -4.0)),
                _ => ("report only".into(), None),
            };
            ExponentRow { series: name.into(), fit, expected, passed }
        })
        .collect();

    let (anisotropy, anisotropy_swapped) = if fitted && tab.series(SUP_UH).is_some() {
        let kappa = if a.dim == 2 { 0.5 } else { 0.1 };
        (
            Some(anisotropy_report(&tab.times, &tab.series, kappa, window, false)),
            Some(anisotropy_report(&tab.times, &tab.series, kappa, window, true)),
        )
    } else {
        (None, None)
    };

    let dir = out_dir(&a.out, "linear-decay");
    create_dir(&dir)?;
    let prov = Provenance::of(&format!("{a:?}"));
    write(&dir.join("decay.csv"), &(prov.comment() + &tab.to_csv()))?;
    let summary = DecaySummary {
        profile: a.profile,
        dim: a.dim,
        window,
        exponents,
        anisotropy,
        anisotropy_swapped,
        refinement_change: tab.refinement_change,
        warning: tab.warning.clone(),
    };
    write(&dir.join("fit.json"), &json_with_provenance(&prov, &summary))?;
    for r in &summary.exponents {
        if let Some(f) = &r.fit {
            let verdict = match r.passed {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "-",
            };
            println!("{:<10} slope {:>8.4} ± {:.4}  expected {:<12} {verdict}", r.series, f.slope, f.stderr, r.expected);
        }
    }
    if let (Some(an), Some(sw)) = (&summary.anisotropy, &summary.anisotropy_swapped) {
        for row in &an.rows {
            let s = row.fit.as_ref().map_or(f64::NAN, |f| f.slope);
            println!("{:<10} slope {s:>8.4}  bound {:>6.2}  {}", row.series, row.bound, if row.passed { "pass" } else { "FAIL" });
        }
        println!("anisotropy {}; swapped control {}", verdict(an.holds), if sw.holds { "holds (bad)" } else { "fails (good)" });
    }
    if let Some(w) = &summary.warning {
        eprintln!("warning: {w}");
    }
    let missed: Vec<&str> = summary.exponents.iter().filter(|r| r.passed == Some(false)).map(|r| r.series.as_str()).collect();
    if a.strict && !missed.is_empty() {
        return Err(Failure::Acceptance(format!("exponents outside tolerance: {}", missed.join(", "))));
    }
    Ok(())
}

fn verdict(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// TOML run configuration; the built-in reference run when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set time.dt=0.005`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from a checkpoint file.
    #[arg(long)]
    restart: Option<PathBuf>,
    /// Exit 1 unless the run meets the small-data checks.
    #[arg(long)]
    check: bool,
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, Failure> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?,
        None => RunConfig::default().to_toml(),
    };
    Ok(RunConfig::from_toml(&text, overrides)?)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    bound: String,
    passed: bool,
}

#[derive(Serialize)]
struct RunSummary {
    completed: bool,
    error: Option<String>,
    steps: usize,
    t_final: f64,
    checks: Vec<Check>,
    e_min_fit: Option<DecayFit>,
    g_total: Option<GTotal>,
    g_parts: [&'static str; 8],
    anisotropy: Option<AnisotropyReport>,
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let mut cfg = load_config(a.config.as_deref(), &a.overrides)?;
    if let Some(o) = &a.out {
        cfg.output.directory = o.clone();
    }
    let text = cfg.to_toml();
    let prov = Provenance::of(&text);
    let dir = cfg.output.directory.clone();
    create_dir(&dir)?;
    write(&dir.join("config.toml"), &(prov.comment() + &text))?;

    let grid = cfg.grid()?;
    let initial = match &a.restart {
        Some(p) => {
            let s = FlowState::read_checkpoint(p)?;
            let (g, h) = (s.grid(), &grid);
            if (g.nx(), g.nz(), g.period(0), g.depth()) != (h.nx(), h.nz(), h.period(0), h.depth()) {
                return Err(Failure::Usage(format!("checkpoint {} was written on a different grid", p.display())));
            }
            s
        }
        None => initial_state(&grid, &cfg.init.eta)?,
    };
    let params = cfg.functional_params();
    let diag = Diagnoser::new(&grid, params)?;
    let settings = RunSettings { checkpoint: Some(dir.join("checkpoint.bin")), keep_snapshots: false, ..cfg.run_settings() };
    let snaps = dir.join("snapshots");
    if cfg.output.snapshots {
        create_dir(&snaps)?;
    }

    let mut rows: Vec<SeriesRow> = Vec::new();
    let mut reports: Vec<EnergyReport> = Vec::new();
    let mut aniso: Vec<(f64, std::collections::BTreeMap<String, f64>)> = Vec::new();
    let result = run(initial, &settings, |s| {
        let (row, rep) = diag.evaluate(s)?;
        if cfg.output.snapshots {
            s.write_checkpoint(&snaps.join(format!("state_{:05}.bin", rows.len())))?;
        }
        eprintln!("t = {:>9.4}  E_min = {:.6e}  J_min = {:.6}", row.t, row.e_min, row.j_min);
        rows.push(row);
        reports.push(rep);
        aniso.push((s.t, anisotropy_quantities(s)));
        Ok(())
    });
    let (traj, error) = match result {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e)),
    };
    let monitor: &[MonitorSample] = traj.as_ref().map_or(&[], |t| &t.monitor);

    write(&dir.join("series.csv"), &series_csv(&prov, &rows))?;
    let mon: Vec<[f64; 7]> = monitor
        .iter()
        .map(|m| [m.t, m.dt, m.energy, m.min_jacobian, m.divergence_residual, m.velocity_h1, m.iterations as f64])
        .collect();
    let mon_header = ["t", "dt", "energy", "J_min", "div_residual", "velocity_h1", "iterations"];
    write(&dir.join("monitor.csv"), &csv_with_provenance(&prov, &mon_header, &mon))?;
    if cfg.wants(Format::Json) {
        write(&dir.join("energies.json"), &json_with_provenance(&prov, &serde_json::json!({ "reports": reports })))?;
    }

    let window = (cfg.diag.fit_window[0], cfg.diag.fit_window[1]);
    let summary = summarize(&rows, &reports, monitor, &aniso, &params, window, traj.as_ref().map_or(0, |t| t.steps), error.as_ref());
    write(&dir.join("summary.json"), &json_with_provenance(&prov, &summary))?;
    for c in &summary.checks {
        println!("{:<32} {:>12.4e}  {:<16} {}", c.name, c.value, c.bound, if c.passed { "pass" } else { "FAIL" });
    }
    if let Some(e) = error {
        return Err(e.into());
    }
    if a.check && summary.checks.iter().any(|c| !c.passed) {
        let failed: Vec<&str> = summary.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        return Err(Failure::Acceptance(format!("run checks failed: {}", failed.join(", "))));
    }
    Ok(())
}

fn series_csv(prov: &Provenance, rows: &[SeriesRow]) -> String {
    let vals: Vec<[f64; 11]> = rows.iter().map(SeriesRow::values).collect();
    csv_with_provenance(prov, &CSV_COLUMNS, &vals)
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    rows: &[SeriesRow],
    reports: &[EnergyReport],
    monitor: &[MonitorSample],
    aniso: &[(f64, std::collections::BTreeMap<String, f64>)],
    params: &flatwave::diagnostics::FunctionalParams,
    window: (f64, f64),
    steps: usize,
    error: Option<&flatwave::Error>,
) -> RunSummary {
    let min_j = monitor.iter().map(|m| m.min_jacobian).fold(f64::INFINITY, f64::min);
    let div = monitor
        .iter()
        .filter(|m| m.velocity_h1 > 0.0)
        .map(|m| m.divergence_residual / m.velocity_h1)
        .fold(0.0, f64::max);
    let e0 = monitor.first().map_or(0.0, |m| m.energy);
    let rise = monitor.windows(2).map(|w| (w[1].energy - w[0].energy) / e0.max(f64::MIN_POSITIVE)).fold(f64::NEG_INFINITY, f64::max);
    let series: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.e_min)).collect();
    let e_min_fit = fit_series(&series, window).ok();
    let g = (!reports.is_empty()).then(|| g_total(reports, params));
    let sup_growth = g.as_ref().map_or(f64::NAN, |g| {
        let first = &g.part_series[0];
        [0usize, 2, 5, 7]
            .iter()
            .map(|&k| if first[k] > 0.0 { g.parts[k] / first[k] } else if g.parts[k] == 0.0 { 1.0 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    });
    let slope = e_min_fit.as_ref().map_or(f64::NAN, |f| f.slope);
    let checks = vec![
        Check { name: "min J", value: min_j, bound: ">= 0.5".into(), passed: min_j >= 0.5 },
        Check { name: "max div_A u / |u|_1", value: div, bound: "<= 1e-7".into(), passed: div <= 1e-7 },
        Check { name: "max energy rise / E(0)", value: rise.max(0.0), bound: "<= 1e-12".into(), passed: rise <= 1e-12 },
        Check { name: "E_min slope", value: slope, bound: "-2 ± 0.3".into(), passed: (slope + 2.0).abs() <= 0.3 },
        Check { name: "G sup terms / initial", value: sup_growth, bound: "<= 10".into(), passed: sup_growth <= 10.0 },
    ];
    let times: Vec<f64> = aniso.iter().map(|(t, _)| *t).collect();
    let mut named: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for (_, m) in aniso {
        for (k, v) in m {
            named.entry(k.clone()).or_default().push(*v);
        }
    }
    let anisotropy = (times.len() >= 3).then(|| anisotropy_report(&times, &named, params.kappa, window, false));
    RunSummary {
        completed: error.is_none(),
        error: error.map(|e| e.to_string()),
        steps,
        t_final: monitor.last().map_or(f64::NAN, |m| m.t),
        checks,
        e_min_fit,
        g_total: g,
        g_parts: G_PARTS,
        anisotropy,
    }
}

#[derive(Args, Debug)]
pub struct EnergiesArgs {
    /// Run directory written by `simulate` with `output.snapshots = true`.
    #[arg(long)]
    dir: PathBuf,
    /// Override diagnostic keys, e.g. `--set diag.n_diag=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Where to write; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn energies(a: &EnergiesArgs) -> Result<(), Failure> {
    let cfg_path = a.dir.join("config.toml");
    if !cfg_path.is_file() {
        return Err(Failure::Usage(format!("{} has no config.toml; not a run directory", a.dir.display())));
    }
    let cfg = load_config(Some(&cfg_path), &a.overrides)?;
    let snaps = a.dir.join("snapshots");
    let mut files: Vec<PathBuf> = match fs::read_dir(&snaps) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "bin"))
            .collect(),
        Err(_) => Vec::new(),
    };
    files.sort();
    if files.is_empty() {
        return Err(Failure::Usage(format!("no snapshots in {}", snaps.display())));
    }
    let grid = cfg.grid()?;
    let params = cfg.functional_params();
    let diag = Diagnoser::new(&grid, params)?;
    let mut rows = Vec::with_capacity(files.len());
    let mut reports = Vec::with_capacity(files.len());
    for f in &files {
        let s = FlowState::read_checkpoint(f)?;
        let (row, rep) = diag.evaluate(&s)?;
        rows.push(row);
        reports.push(rep);
    }
    let text = cfg.to_toml();
    let prov = Provenance::of(&text);
    let dir = out_dir(&a.out, a.dir.to_str().unwrap_or("."));
    create_dir(&dir)?;
    write(&dir.join("energies.csv"), &series_csv(&prov, &rows))?;
    write(&dir.join("energies.json"), &json_with_provenance(&prov, &serde_json::json!({ "reports": reports })))?;
    let g = g_total(&reports, &params);
    write(&dir.join("g_total.json"), &json_with_provenance(&prov, &serde_json::json!({ "parts": G_PARTS, "g": g })))?;
    println!("{} snapshots, G = {:.6e}", rows.len(), g.value);
    Ok(())
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    column: String,
    /// Fit window `[a, b]` in `t`.
    #[arg(long, num_args = 2, required = true, value_names = ["A", "B"])]
    window: Vec<f64>,
    /// Exit 1 unless the slope is within `tol` of this.
    #[arg(long, allow_hyphen_values = true)]
    expect: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    tol: f64,
}

pub fn fit_decay(a: &FitArgs) -> Result<(), Failure> {
    let series = read_column(&a.csv, &a.column)?;
    let window = (a.window[0], a.window[1]);
    let fit = fit_series(&series, window)?;
    println!("{}", serde_json::to_string_pretty(&fit).expect("serializable"));
    match a.expect {
        Some(e) if (fit.slope - e).abs() > a.tol => {
            Err(Failure::Acceptance(format!("slope {:.4} is not within {} of {e}", fit.slope, a.tol)))
        }
        _ => Ok(()),
    }
}
