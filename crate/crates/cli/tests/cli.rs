use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gmhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmhd"))
        .args(args)
        .output()
        .expect("failed to launch gmhd")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (headers, rows)
}

const SMALL_RUN: &str = "\
grid.n = 32
physics.alpha = 1.0
time.t_end = 0.05
time.dt = 0.01
diag.every = 1
output.csv = diag.csv
output.checkpoint_every = 2
output.checkpoint_path = state.bin
";

#[test]
fn simulate_writes_diagnostics_and_checkpoint() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.cfg", SMALL_RUN);
    let out = gmhd(&["simulate", "-c", s(&cfg)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let (headers, rows) = read_csv(&dir.path().join("diag.csv"));
    assert_eq!(headers, gmhd::solver::DiagRecord::FIELDS);
    assert_eq!(rows.len(), 6);
    let last_t: f64 = rows[5][0].parse().unwrap();
    assert!((last_t - 0.05).abs() < 1e-12);
    assert_eq!(rows[5][1], "5");

    let state = gmhd::io::read_checkpoint(&dir.path().join("state.bin")).unwrap();
    assert_eq!(state.grid().n(), 32);
    assert!((state.t - 0.05).abs() < 1e-12);
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let dir = TempDir::new().unwrap();
    let first = write_config(&dir, "a.cfg", SMALL_RUN);
    assert_eq!(gmhd(&["simulate", "-c", s(&first)]).status.code(), Some(0));

    let rest = SMALL_RUN
        .replace("time.t_end = 0.05", "time.t_end = 0.1")
        .replace("diag.csv", "resumed.csv")
        .replace("state.bin", "resumed.bin");
    let second = write_config(&dir, "b.cfg", &rest);
    let ckpt = dir.path().join("state.bin");
    let out = gmhd(&["simulate", "-c", s(&second), "--resume", s(&ckpt)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let whole = rest
        .replace("resumed.csv", "whole.csv")
        .replace("resumed.bin", "whole.bin");
    let third = write_config(&dir, "c.cfg", &whole);
    assert_eq!(gmhd(&["simulate", "-c", s(&third)]).status.code(), Some(0));

    let resumed = gmhd::io::read_checkpoint(&dir.path().join("resumed.bin")).unwrap();
    let straight = gmhd::io::read_checkpoint(&dir.path().join("whole.bin")).unwrap();
    assert!((resumed.t - 0.1).abs() < 1e-12);
    let scale = straight.omega.max_abs();
    assert!(resumed.omega.max_abs_diff(&straight.omega) < 1e-12 * scale);
    assert!(resumed.current.max_abs_diff(&straight.current) < 1e-12 * scale);

    let (_, rows) = read_csv(&dir.path().join("resumed.csv"));
    let t0: f64 = rows[0][0].parse().unwrap();
    assert!((t0 - 0.05).abs() < 1e-12);
}

#[test]
fn blow_up_exits_with_four_and_saves_snapshot() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "boom.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\ntime.dt = 0.1\ninit.kind = random\ninit.amplitude = 1e300\ninit.k0 = 3\n",
    );
    let out = gmhd(&["simulate", "-c", s(&cfg)]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("checkpoint.bin").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let unknown = write_config(
        &dir,
        "u.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\ngrid.m = 4\n",
    );
    let floor = write_config(
        &dir,
        "f.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\nphysics.g.kind = iterated_log\nphysics.g.sigma = 1\n",
    );
    let missing = write_config(&dir, "m.cfg", "grid.n = 32\nphysics.alpha = 1\n");
    let moments = write_config(
        &dir,
        "k.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\nkernel.k = 1\n",
    );
    for cfg in [unknown, floor, missing, moments] {
        let out = gmhd(&["verify-kernel", "-c", s(&cfg)]);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn missing_file_exits_with_five() {
    let out = gmhd(&["verify-kernel", "-c", "/nonexistent/run.cfg"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn verify_kernel_table_and_fit() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "k.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\nphysics.g.kind = iterated_log\nkernel.s = 0.5, 1\nkernel.k = 0, 1\n",
    );
    let table = dir.path().join("kernel.csv");
    let out = gmhd(&["verify-kernel", "-c", s(&cfg), "-o", s(&table)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (headers, rows) = read_csv(&table);
    assert_eq!(
        headers,
        ["t", "s", "k", "moment", "hs_norm", "l1_norm", "envelope", "ratio", "g_at"]
    );
    assert_eq!(rows.len(), 2 * 2 * 16);

    let out = gmhd(&[
        "fit",
        "-i",
        s(&table),
        "--col",
        "hs_norm",
        "--correction",
        "g_at",
        "--power",
        "0.75",
        "--where",
        "s=0.5",
        "--where",
        "k=0",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let exponent: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("exponent "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((exponent + 0.75).abs() < 0.03, "{stdout}");
}

#[test]
fn verify_kernel_flags_tight_tolerance() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "k.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\nphysics.g.kind = iterated_log\nkernel.tolerance = 1e-9\n",
    );
    let out = gmhd(&[
        "verify-kernel",
        "-c",
        s(&cfg),
        "-o",
        s(&dir.path().join("k.csv")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_besov_small_survey() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "b.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\nbesov.fields = 4\nbesov.kmax = 8\nbesov.grids = 32, 64\n",
    );
    let table = dir.path().join("besov.csv");
    let out = gmhd(&["verify-besov", "-c", s(&cfg), "-o", s(&table)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (headers, rows) = read_csv(&table);
    assert_eq!(headers[0], "kind");
    let surveys = rows.iter().filter(|r| r[0] == "lower_bound").count();
    assert_eq!(surveys, 2 * 3);
    assert!(rows.iter().any(|r| r[0] == "bernstein"));
}

#[test]
fn verify_gronwall_canonical_preset() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "g.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 5\n",
    );
    let table = dir.path().join("g.csv");
    let out = gmhd(&[
        "verify-gronwall",
        "-c",
        s(&cfg),
        "-o",
        s(&table),
        "--preset",
        "canonical",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (headers, rows) = read_csv(&table);
    assert_eq!(headers, ["t", "coordinate", "depth", "log_y"]);
    assert!(rows.iter().all(|r| r[2] == "3"));
    let z0: f64 = rows[0][1].parse().unwrap();
    let last = rows.last().unwrap();
    let (t, z): (f64, f64) = (last[0].parse().unwrap(), last[1].parse().unwrap());
    assert!((t - 5.0).abs() < 1e-12);
    assert!((z - z0 - 5.0).abs() < 1e-6);
}

#[test]
fn verify_gronwall_usage_check_on_simulated_series() {
    let dir = TempDir::new().unwrap();
    let run = SMALL_RUN.replace("time.t_end = 0.05", "time.t_end = 0.2");
    let sim = write_config(&dir, "run.cfg", &run);
    assert_eq!(gmhd(&["simulate", "-c", s(&sim)]).status.code(), Some(0));
    let cfg = write_config(
        &dir,
        "g.cfg",
        "grid.n = 32\nphysics.alpha = 1\ntime.t_end = 1\ngronwall.series = diag.csv\n",
    );
    let out = gmhd(&[
        "verify-gronwall",
        "-c",
        s(&cfg),
        "-o",
        s(&dir.path().join("g.csv")),
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("usage check on 21 samples"), "{stderr}");
    assert!(matches!(out.status.code(), Some(0 | 3)), "{stderr}");
}

#[test]
fn fit_power_law_and_unknown_column() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.csv");
    let mut body = String::from("t,v\n");
    for i in 0..10 {
        let t = 10f64.powf(-4.0 + 0.5 * i as f64);
        body.push_str(&format!("{t},{}\n", t.powf(-0.5)));
    }
    fs::write(&path, body).unwrap();
    let out = gmhd(&["fit", "-i", s(&path), "--col", "v"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let exponent: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("exponent "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((exponent + 0.5).abs() < 1e-12);
    assert_eq!(
        gmhd(&["fit", "-i", s(&path), "--col", "w"]).status.code(),
        Some(2)
    );
}

#[test]
fn bundled_preset_parses_and_round_trips() {
    let text = include_str!("../../../presets/orszag_tang.cfg");
    let cfg = gmhd::config::parse_config(text).unwrap();
    assert_eq!(cfg.n, 256);
    let again = gmhd::config::parse_config(&gmhd::config::serialize_config(&cfg)).unwrap();
    assert_eq!(again, cfg);
}
