use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn flatwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatwave")).args(args).env("FLATWAVE_THREADS", "1").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const SMALL: [&str; 14] = [
    "--set", "domain.length=20",
    "--set", "grid.nx=16",
    "--set", "grid.nz=9",
    "--set", "time.dt=0.05",
    "--set", "time.t_end=0.5",
    "--set", "diag.cadence=0.1",
    "--set", "diag.fit_window=[0.1, 0.5]",
];

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(&SMALL);
    args.extend_from_slice(extra);
    flatwave(&args)
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&flatwave(&["no-such-command"])), 2);
    assert_eq!(code(&flatwave(&["simulate", "--set", "grid.nx=banana"])), 2);
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(code(&flatwave(&["energies", "--dir", empty.path().to_str().unwrap()])), 2);
}

#[test]
fn repeated_runs_write_identical_series() {
    let a = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = simulate(a.path(), &[]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(fs::read(a.path().join("series.csv")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let sa = runs.swap_remove(0);
    let text = String::from_utf8(sa).unwrap();
    assert!(text.starts_with("# flatwave "));
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "t,E_high,D_high,E_min,D_min,F,K_frak,K_bar,J_min,div_residual,energy_identity_residual"
    );
    assert_eq!(text.lines().count(), 2 + 6);
    for f in ["config.toml", "monitor.csv", "energies.json", "summary.json", "checkpoint.bin"] {
        assert!(a.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn energies_recomputes_from_snapshots() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(d.path(), &["--set", "output.snapshots=true"])), 0);
    let o = flatwave(&["energies", "--dir", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("g_total.json")).unwrap()).unwrap();
    assert!(g["g"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(g["parts"].as_array().unwrap().len(), 8);
}

#[test]
fn fit_decay_reads_a_column() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("s.csv");
    let mut text = String::from("# comment\nt,v\n");
    for i in 0..20 {
        let t = 1.0 + i as f64;
        text += &format!("{t},{}\n", 3.0 * (1.0 + t).powf(-1.5));
    }
    fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let ok = flatwave(&["fit-decay", "--csv", p, "--column", "v", "--window", "1", "20", "--expect", "-1.5", "--tol", "0.01"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!((fit["slope"].as_f64().unwrap() + 1.5).abs() < 1e-9);
    let miss = flatwave(&["fit-decay", "--csv", p, "--column", "v", "--window", "1", "20", "--expect", "-2"]);
    assert_eq!(code(&miss), 1);
    assert_eq!(code(&flatwave(&["fit-decay", "--csv", p, "--column", "w", "--window", "1", "20"])), 2);
}

#[test]
fn linear_decay_initial_table() {
    let d = tempfile::tempdir().unwrap();
    let o = flatwave(&["linear-decay", "--tmax", "0", "--nodes", "40", "--nz", "9", "--out", d.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("decay.csv").exists());
}

#[test]
fn broken_identity_is_reported() {
    let small = ["--skip-3d", "--skip-temporal"];
    let mut args = vec!["check-identities"];
    args.extend_from_slice(&small);
    let ok = flatwave(&args);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    args.push("--break-g3");
    let broken = flatwave(&args);
    assert_eq!(code(&broken), 1);
    let report: serde_json::Value = serde_json::from_slice(&broken.stdout).unwrap();
    assert_eq!(report["passed"], false);
}
