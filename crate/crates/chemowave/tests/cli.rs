//! Exit-code contract and output determinism of the command-line interface.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_chemowave")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chemowave-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .env("CHEMOWAVE_THREADS", "2")
        .output()
        .expect("binary runs")
}

const SMALL_CHI: &str = "\
[model]
tau = 1.0
chi1 = 0.02
chi2 = 0.05
lambda1 = 1.0
lambda2 = 1.0
mu1 = 1.0
mu2 = 1.0
a = 1.0
b = 4.0

[window]
resolution = 256
tol = 1e-6
";

#[test]
fn constants_command_succeeds_and_writes_csv() {
    let dir = tmp_dir("constants");
    let cfg = write_config(&dir, "run.cfg", SMALL_CHI);
    let out = run(&[
        "constants",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--mu",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("m_bar"), "{stdout}");
    let csv = fs::read_to_string(dir.join("out/constants.csv")).unwrap();
    assert!(csv.starts_with("m_bar,m_under,k,identity_residual,mu,r,m_bar_tm,m_under_tm,k_tm"));
}

#[test]
fn window_command_prints_the_csv_schema() {
    let dir = tmp_dir("window");
    let cfg = write_config(&dir, "run.cfg", SMALL_CHI);
    let out = run(&[
        "window",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = fs::read_to_string(dir.join("out/window.csv")).unwrap();
    assert!(csv.starts_with("mu_lo,mu_hi,c_star,c_double_star,mu_cap"));
}

#[test]
fn infeasible_hypothesis_exits_one() {
    let dir = tmp_dir("infeasible");
    // Attraction dominates everything: f >= chi1 mu1 - chi2 mu2 = 50 > b.
    let body = SMALL_CHI
        .replace("chi1 = 0.02", "chi1 = 50.0")
        .replace("chi2 = 0.05", "chi2 = 0.0")
        .replace("b = 4.0", "b = 0.1");
    let cfg = write_config(&dir, "run.cfg", &body);
    let out = run(&[
        "window",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn wave_outside_the_window_exits_one() {
    let dir = tmp_dir("wave-outside");
    // Feasible model, but the requested exponent violates the weighted branch.
    let body = SMALL_CHI
        .replace("chi1 = 0.02", "chi1 = 1.2")
        .replace("chi2 = 0.05", "chi2 = 0.0")
        .replace("b = 4.0", "b = 1.3");
    let cfg = write_config(&dir, "run.cfg", &body);
    let out = run(&[
        "wave",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--mu",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn malformed_config_exits_three_and_names_the_key() {
    let dir = tmp_dir("badkey");
    let cfg = write_config(
        &dir,
        "run.cfg",
        &format!("{SMALL_CHI}\n[window]\nresolutoin = 4\n"),
    );
    let out = run(&["constants", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("resolutoin"), "{stderr}");
}

#[test]
fn missing_config_exits_three() {
    let out = run(&["window"]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn non_convergent_wave_exits_two() {
    let dir = tmp_dir("noconv");
    let body = format!(
        "{SMALL_CHI}
[wave]
mu = 0.5
n = 2049
max_outer_iters = 1
outer_tol = 1e-300
"
    );
    let cfg = write_config(&dir, "run.cfg", &body);
    let out = run(&[
        "wave",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn simulate_twice_produces_byte_identical_output() {
    let dir = tmp_dir("determinism");
    let body = format!(
        "{SMALL_CHI}
[grid]
x_lo = -20.0
x_hi = 30.0
n = 501

[sim]
dt = 0.02
t_end = 5.0
initial = ramp
ramp_x0 = -10.0
sample_every = 1.0
"
    );
    let cfg = write_config(&dir, "run.cfg", &body);
    for tag in ["a", "b"] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join(tag).to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    for file in ["trajectory.csv", "front.csv", "report.txt"] {
        let a = fs::read(dir.join("a").join(file)).unwrap();
        let b = fs::read(dir.join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn speed_flag_converts_to_the_matching_exponent() {
    let dir = tmp_dir("speed-flag");
    let cfg = write_config(&dir, "run.cfg", SMALL_CHI);
    // c = 2.5 and a = 1 correspond to mu = 0.5.
    let out = run(&[
        "constants",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("c").to_str().unwrap(),
        "--c",
        "2.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let out_mu = run(&[
        "constants",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("mu").to_str().unwrap(),
        "--mu",
        "0.5",
    ]);
    assert_eq!(out_mu.status.code(), Some(0));
    // Rate constants must match between the two spellings.
    let a = fs::read_to_string(dir.join("c/constants.csv")).unwrap();
    let b = fs::read_to_string(dir.join("mu/constants.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn wave_accepts_an_explicit_grid_override() {
    let dir = tmp_dir("wave-grid");
    let body = format!(
        "{SMALL_CHI}
[grid]
x_lo = -36.0
x_hi = 42.0
n = 8193

[wave]
mu = 0.5
"
    );
    let cfg = write_config(&dir, "run.cfg", &body);
    let out = run(&[
        "wave",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let profile = fs::read_to_string(dir.join("out/profile.csv")).unwrap();
    let first_x = profile
        .lines()
        .find(|l| !l.starts_with('#') && !l.starts_with("x,"))
        .unwrap()
        .split(',')
        .next()
        .unwrap();
    assert!(first_x.starts_with("-3.6"), "grid override ignored: {first_x}");
}

#[test]
fn shipped_configs_parse_and_run() {
    let dir = tmp_dir("shipped");
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["small_chi.cfg", "fisher_kpp.cfg"] {
        let out = run(&[
            "window",
            "--config",
            root.join(name).to_str().unwrap(),
            "--out",
            dir.join(name).to_str().unwrap(),
            "--resolution",
            "256",
        ]);
        assert_eq!(out.status.code(), Some(0), "{name}: {out:?}");
    }
}

#[test]
fn limits_command_emits_the_per_scale_table() {
    let dir = tmp_dir("limits");
    let body = format!("{SMALL_CHI}\n[limits]\nscales = 1e-1,1e-2\n");
    let cfg = write_config(&dir, "run.cfg", &body);
    let out = run(&[
        "limits",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--resolution",
        "256",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = fs::read_to_string(dir.join("out/limits.csv")).unwrap();
    assert!(csv.starts_with("scale,mu_lo,mu_hi,c_star,c_double_star,mu_cap"));
    assert_eq!(csv.lines().count(), 3);
}
